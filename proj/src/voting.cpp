#include "typecrowd/voting.hpp"

#include <cmath>
#include <map>

#include "typecrowd/error.hpp"

namespace typecrowd {

namespace {

VoteOutcome settle(double margin, Seed seed) {
  if (margin > 0) return {1, margin, false};
  if (margin < 0) return {-1, margin, false};
  Rng coin(derive(seed, "tie"));
  return {coin.sign(), margin, true};
}

void check_weights(std::span<const double> weights) {
  bool any_nonzero = false;
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorKind::kInvalidWeights, "non-finite weight");
    any_nonzero = any_nonzero || w != 0.0;
  }
  if (!any_nonzero) throw Error(ErrorKind::kInvalidWeights, "all weights are zero");
}

}  // namespace

VoteOutcome majority_vote(std::span<const int> votes, Seed seed) {
  if (votes.empty()) throw Error(ErrorKind::kNoVotes, "majority vote over empty set");
  long sum = 0;
  for (int v : votes) sum += v;
  return settle(static_cast<double>(sum), seed);
}

VoteOutcome weighted_majority_vote(std::span<const int> votes, std::span<const double> weights,
                                   Seed seed) {
  if (votes.size() != weights.size()) {
    throw Error(ErrorKind::kShape, "votes and weights differ in length");
  }
  if (votes.empty()) throw Error(ErrorKind::kNoVotes, "weighted vote over empty set");
  check_weights(weights);
  // Integer tallies per distinct weight, so answers sharing a weight cancel exactly.
  std::map<double, long> tallies;
  for (std::size_t k = 0; k < votes.size(); ++k) tallies[weights[k]] += votes[k];
  double margin = 0.0;
  for (const auto& [weight, count] : tallies) margin += weight * static_cast<double>(count);
  return settle(margin, seed);
}

double wmv_gamma(std::span<const double> fidelities, std::span<const double> weights) {
  if (fidelities.size() != weights.size()) {
    throw Error(ErrorKind::kShape, "fidelities and weights differ in length");
  }
  if (fidelities.empty()) throw Error(ErrorKind::kNoVotes, "no answers");
  double numerator = 0.0;
  double norm2 = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(fidelities[k] >= 0.5 && fidelities[k] <= 1.0)) {
      throw Error(ErrorKind::kRange, "fidelity outside [1/2, 1]");
    }
    numerator += weights[k] * (2 * fidelities[k] - 1);
    norm2 += weights[k] * weights[k];
  }
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    throw Error(ErrorKind::kInvalidWeights, "weight vector has zero norm");
  }
  return numerator / (std::sqrt(norm2) * std::sqrt(static_cast<double>(weights.size())));
}

double hoeffding_bound(std::span<const double> fidelities, std::span<const double> weights) {
  const double gamma = wmv_gamma(fidelities, weights);
  if (gamma <= 0.0) return 1.0;
  const double log_bound = -0.5 * gamma * gamma * static_cast<double>(weights.size());
  return std::exp(log_bound);
}

std::vector<double> oracle_weights(const ModelParams& params, const std::vector<bool>& matched) {
  std::vector<double> weights;
  weights.reserve(matched.size());
  for (bool m : matched) weights.push_back(2 * params.fidelity(m) - 1);
  return weights;
}

}  // namespace typecrowd
