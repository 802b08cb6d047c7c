#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "typecrowd/cluster_threshold.hpp"
#include "typecrowd/partition.hpp"
#include "typecrowd/rng.hpp"

namespace typecrowd {

/// A = S^T S with the diagonal zeroed, S the r x n Stage-1 answer block.
struct SimilarityMatrix {
  Eigen::MatrixXd a;
  int r = 0;

  int n() const { return static_cast<int>(a.rows()); }
};

SimilarityMatrix similarity_matrix(const StageOneBlock& block);

/// Two algebraically largest eigenvalues (lambda1 >= lambda2), by cyclic Jacobi.
std::pair<double, double> top_two_eigenvalues(const Eigen::MatrixXd& a,
                                              double jacobi_tolerance = 1e-10);

/// Spectral estimates of the within/cross-type answer-product mass and the
/// SDP tuning parameter taken as their midpoint.
struct EdgeDensityEstimates {
  double lambda1 = 0;
  double lambda2 = 0;
  double p_hat_c = 0;
  double q_hat_c = 0;
  double lambda_tune = 0;
};

EdgeDensityEstimates estimate_edge_densities(const SimilarityMatrix& sim, int d,
                                             double jacobi_tolerance = 1e-10);

/// Recovery window [r(p_m + 3 p_u)/4, r(3 p_m + p_u)/4] for the tuning parameter.
std::pair<double, double> tuning_window(const ModelParams& params, double r);

enum class EigenBackend {
  kJacobi,     // in-house cyclic Jacobi
  kTridiagonal // Eigen's SelfAdjointEigenSolver
};

struct SdpSettings {
  double penalty = 1.0;
  double tolerance = 1e-4;
  int max_iterations = 2000;
  double jacobi_tolerance = 1e-10;
  EigenBackend backend = EigenBackend::kJacobi;
};

struct SdpSolution {
  Eigen::MatrixXd x;  // feasible: PSD, unit diagonal (so trace n), entries in [0, 1]
  int iterations = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  bool converged = false;
  std::vector<double> best_objective;  // best <A - lambda J, Z> seen after each iteration
};

/// Maximizes <A - lambda 1 1^T, X> over X PSD, tr X = n, 0 <= X <= 1 by ADMM
/// splitting between the trace-n PSD set and the box. The objective is scaled
/// by max |C_ij| before applying the penalty; residuals are RMS per entry.
/// The returned X is always projected back onto the feasible set.
SdpSolution solve_sdp(const SimilarityMatrix& sim, double lambda, const SdpSettings& settings = {});

/// Euclidean projection of a symmetric matrix onto {X PSD, tr X = trace}.
Eigen::MatrixXd project_psd_trace(const Eigen::MatrixXd& m, double trace,
                                  const SdpSettings& settings = {});

/// Projection of v onto {x >= 0, sum x = total}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total);

/// Approximate k-medoids on the rows of X with L1 distance: farthest-first
/// seeding from a random start, then at most 20 assignment/update sweeps.
Clustering extract_clusters_kmedoids(const Eigen::MatrixXd& x, int d, Seed seed);

struct SdpClusterResult {
  Clustering clustering;
  EdgeDensityEstimates estimates;
  int iterations = 0;
  bool converged = true;
};

/// Full SDP Stage 1: similarity, spectral tuning, SDP, k-medoids rounding.
SdpClusterResult cluster_workers_sdp(const StageOneBlock& block, int d, Seed seed,
                                     const SdpSettings& settings = {});

}  // namespace typecrowd
