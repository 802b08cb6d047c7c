#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "typecrowd/model.hpp"
#include "typecrowd/partition.hpp"

namespace typecrowd {

/// Dense r x n block of +/-1 answers: r shared tasks, each answered by all n workers.
struct StageOneBlock {
  std::vector<int> tasks;  // task ids of the rows
  Eigen::MatrixXd answers;

  int r() const { return static_cast<int>(answers.rows()); }
  int n() const { return static_cast<int>(answers.cols()); }
};

/// Dense export of the listed tasks. Throws if any listed task misses a worker.
StageOneBlock make_stage_one_block(const AnswerMatrix& answers, std::span<const int> tasks);

/// Fraction of shared tasks on which workers j and k gave the same answer.
double agreement_fraction(const StageOneBlock& block, int j, int k);

/// Sequential threshold clustering. Worker j joins the first cluster (in creation
/// order) whose every member agrees with j on a fraction > zeta of the tasks;
/// otherwise j opens a new cluster.
Clustering cluster_sequential(const StageOneBlock& block, double zeta);

/// Partition induced by the true worker types.
Clustering type_partition(const World& world);

}  // namespace typecrowd
