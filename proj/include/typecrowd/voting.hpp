#pragma once

#include <span>
#include <vector>

#include "typecrowd/model.hpp"
#include "typecrowd/rng.hpp"

namespace typecrowd {

struct VoteOutcome {
  int label;      // -1 or +1
  double margin;  // signed (weighted) sum before taking the sign
  bool tie_broken;
};

/// sign(sum of votes); an exact zero is settled by a fair coin drawn from `seed`.
VoteOutcome majority_vote(std::span<const int> votes, Seed seed);

/// sign(sum of weight * vote); same tie rule as majority_vote. Weights must be
/// finite and not all zero.
VoteOutcome weighted_majority_vote(std::span<const int> votes, std::span<const double> weights,
                                   Seed seed);

/// Separation gamma = sum mu_j (2 f_j - 1) / (||mu||_2 sqrt(N)).
double wmv_gamma(std::span<const double> fidelities, std::span<const double> weights);

/// Hoeffding bound exp(-gamma^2 N / 2) on the WMV error probability. Returns 1
/// when gamma <= 0, where the bound carries no information.
double hoeffding_bound(std::span<const double> fidelities, std::span<const double> weights);

/// mu_j = 2p - 1 on matched answers, 2q - 1 otherwise.
std::vector<double> oracle_weights(const ModelParams& params, const std::vector<bool>& matched);

}  // namespace typecrowd
