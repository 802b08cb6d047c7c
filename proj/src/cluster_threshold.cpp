#include "typecrowd/cluster_threshold.hpp"

#include <string>

#include "typecrowd/error.hpp"

namespace typecrowd {

StageOneBlock make_stage_one_block(const AnswerMatrix& answers, std::span<const int> tasks) {
  StageOneBlock block;
  block.tasks.assign(tasks.begin(), tasks.end());
  block.answers.resize(static_cast<Eigen::Index>(tasks.size()), answers.n());
  for (std::size_t row = 0; row < tasks.size(); ++row) {
    const auto entries = answers.task(tasks[row]);
    if (static_cast<int>(entries.size()) != answers.n()) {
      throw Error(ErrorKind::kShape,
                  "stage-one task " + std::to_string(tasks[row]) + " is not answered by every worker");
    }
    for (const Answer& a : entries) {
      block.answers(static_cast<Eigen::Index>(row), a.worker) = a.value;
    }
  }
  return block;
}

double agreement_fraction(const StageOneBlock& block, int j, int k) {
  if (j == k) throw Error(ErrorKind::kInvalidPair, "agreement of a worker with itself");
  if (j < 0 || k < 0 || j >= block.n() || k >= block.n()) {
    throw Error(ErrorKind::kIndexOutOfRange, "worker outside the block");
  }
  if (block.r() == 0) throw Error(ErrorKind::kInvalidDimension, "empty block");
  const auto agree = (block.answers.col(j).array() == block.answers.col(k).array()).count();
  return static_cast<double>(agree) / block.r();
}

Clustering cluster_sequential(const StageOneBlock& block, double zeta) {
  const int n = block.n();
  const double r = block.r();
  // Agreement counts from the Gram matrix: agree = (r + <s_j, s_k>) / 2.
  const Eigen::MatrixXd gram = block.answers.transpose() * block.answers;
  const auto agreement = [&](int j, int k) { return (r + gram(j, k)) / 2 / r; };

  std::vector<std::vector<int>> clusters;
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      bool unanimous = true;
      for (int member : clusters[c]) {
        if (!(agreement(j, member) > zeta)) {
          unanimous = false;
          break;
        }
      }
      if (unanimous) {
        clusters[c].push_back(j);
        labels[static_cast<std::size_t>(j)] = static_cast<int>(c);
        break;
      }
    }
    if (labels[static_cast<std::size_t>(j)] < 0) {
      labels[static_cast<std::size_t>(j)] = static_cast<int>(clusters.size());
      clusters.push_back({j});
    }
  }
  return Clustering::from_labels(labels);
}

Clustering type_partition(const World& world) { return Clustering::from_labels(world.worker_types); }

}  // namespace typecrowd
