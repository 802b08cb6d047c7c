#include "typecrowd/cluster_sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "typecrowd/error.hpp"
#include "typecrowd/jacobi.hpp"

namespace typecrowd {

SimilarityMatrix similarity_matrix(const StageOneBlock& block) {
  SimilarityMatrix sim;
  sim.r = block.r();
  sim.a = block.answers.transpose() * block.answers;
  sim.a.diagonal().setZero();
  return sim;
}

std::pair<double, double> top_two_eigenvalues(const Eigen::MatrixXd& a, double jacobi_tolerance) {
  if (a.rows() < 2) throw Error(ErrorKind::kInvalidDimension, "need at least a 2 x 2 matrix");
  JacobiSettings settings;
  settings.tolerance = jacobi_tolerance;
  settings.compute_vectors = false;
  const auto eig = jacobi_eigen(a, settings);
  return {eig.values(0), eig.values(1)};
}

EdgeDensityEstimates estimate_edge_densities(const SimilarityMatrix& sim, int d,
                                             double jacobi_tolerance) {
  const int n = sim.n();
  if (d < 1 || n <= d) {
    throw Error(ErrorKind::kInvalidDimension, "edge densities need n > d");
  }
  EdgeDensityEstimates est;
  std::tie(est.lambda1, est.lambda2) = top_two_eigenvalues(sim.a, jacobi_tolerance);
  est.p_hat_c = (est.lambda1 + (d - 1) * est.lambda2) / (n - d);
  est.q_hat_c = (est.lambda1 - est.lambda2) / n;
  est.lambda_tune = 0.5 * (est.p_hat_c + est.q_hat_c);
  return est;
}

std::pair<double, double> tuning_window(const ModelParams& params, double r) {
  const DensityConstants rho = density_constants(params);
  return {r * (0.25 * rho.within + 0.75 * rho.across), r * (0.75 * rho.within + 0.25 * rho.across)};
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0;
  double theta = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - total) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Eigen::MatrixXd project_psd_trace(const Eigen::MatrixXd& m, double trace,
                                  const SdpSettings& settings) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  if (settings.backend == EigenBackend::kJacobi) {
    JacobiSettings js;
    js.tolerance = settings.jacobi_tolerance;
    auto eig = jacobi_eigen(sym, js);
    values = std::move(eig.values);
    vectors = std::move(eig.vectors);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) {
      throw Error(ErrorKind::kNumericalFailure, "symmetric eigensolver failed");
    }
    values = eig.eigenvalues();
    vectors = eig.eigenvectors();
  }
  const Eigen::VectorXd projected = project_simplex(values, trace);
  return vectors * projected.asDiagonal() * vectors.transpose();
}

namespace {

/// Moves a PSD matrix onto the feasible set: rescale to unit diagonal (keeps PSD,
/// makes |x_ij| <= 1), then mix with the all-ones matrix until no entry is negative.
Eigen::MatrixXd restore_feasible(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd y = 0.5 * (x + x.transpose());
  const double floor = 1e-12 * std::max(1.0, y.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i, i) <= floor) {
      y.row(i).setZero();
      y.col(i).setZero();
      y(i, i) = 1.0;
    }
  }
  const Eigen::VectorXd inv_sqrt = y.diagonal().cwiseSqrt().cwiseInverse();
  y = inv_sqrt.asDiagonal() * y * inv_sqrt.asDiagonal();
  const double deficit = std::max(0.0, -y.minCoeff());
  if (deficit > 0) {
    const double t = deficit / (1.0 + deficit);
    y = (1.0 - t) * y + Eigen::MatrixXd::Constant(n, n, t);
  }
  y = y.cwiseMax(0.0).cwiseMin(1.0);
  y.diagonal().setOnes();
  return y;
}

}  // namespace

SdpSolution solve_sdp(const SimilarityMatrix& sim, double lambda, const SdpSettings& settings) {
  const Eigen::Index n = sim.a.rows();
  if (n != sim.a.cols()) throw Error(ErrorKind::kShape, "similarity matrix is not square");
  if (!(settings.penalty > 0)) throw Error(ErrorKind::kRange, "penalty must be positive");
  SdpSolution sol;
  if (n == 0) return sol;

  const Eigen::MatrixXd c = sim.a - Eigen::MatrixXd::Constant(n, n, lambda);
  double scale = c.cwiseAbs().maxCoeff();
  if (!(scale > 0)) scale = 1.0;
  const Eigen::MatrixXd step = c / (scale * settings.penalty);
  const double nn = static_cast<double>(n);

  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd z = x;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd z_prev;
  double best = -std::numeric_limits<double>::infinity();
  sol.best_objective.reserve(static_cast<std::size_t>(settings.max_iterations));

  for (int it = 1; it <= settings.max_iterations; ++it) {
    x = project_psd_trace(z - u + step, nn, settings);
    z_prev = z;
    z = (x + u).cwiseMax(0.0).cwiseMin(1.0);
    u += x - z;

    sol.iterations = it;
    sol.primal_residual = (x - z).norm() / nn;
    sol.dual_residual = settings.penalty * (z - z_prev).norm() / nn;
    best = std::max(best, (c.array() * z.array()).sum());
    sol.best_objective.push_back(best);
    if (sol.primal_residual < settings.tolerance && sol.dual_residual < settings.tolerance) {
      sol.converged = true;
      break;
    }
  }
  sol.x = restore_feasible(x);
  return sol;
}

Clustering extract_clusters_kmedoids(const Eigen::MatrixXd& x, int d, Seed seed) {
  const Eigen::Index n = x.rows();
  if (d < 1 || d > n) throw Error(ErrorKind::kInvalidDimension, "need 1 <= d <= n");

  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      dist(i, j) = dist(j, i) = (x.row(i) - x.row(j)).cwiseAbs().sum();
    }
  }

  Rng rng(derive(seed, "kmedoids"));
  std::vector<Eigen::Index> medoids{static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))};
  Eigen::VectorXd nearest = dist.col(medoids[0]);
  std::vector<char> is_medoid(static_cast<std::size_t>(n), 0);
  is_medoid[static_cast<std::size_t>(medoids[0])] = 1;
  while (static_cast<int>(medoids.size()) < d) {
    Eigen::Index far = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_medoid[static_cast<std::size_t>(i)]) continue;
      if (far < 0 || nearest(i) > nearest(far)) far = i;
    }
    medoids.push_back(far);
    is_medoid[static_cast<std::size_t>(far)] = 1;
    nearest = nearest.cwiseMin(dist.col(far));
  }

  const auto k = static_cast<std::size_t>(d);
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  const auto assign = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (medoids[c] == i) {  // a medoid always stays in its own cluster
          best = static_cast<int>(c);
          break;
        }
        if (dist(i, medoids[c]) < dist(i, medoids[static_cast<std::size_t>(best)])) {
          best = static_cast<int>(c);
        }
      }
      labels[static_cast<std::size_t>(i)] = best;
    }
  };

  constexpr int kMaxSweeps = 20;
  assign();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool changed = false;
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::Index best = medoids[c];
      double best_cost = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] != static_cast<int>(c)) continue;
        double cost = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (labels[static_cast<std::size_t>(j)] == static_cast<int>(c)) cost += dist(i, j);
        }
        if (cost < best_cost - 1e-12 || (i == medoids[c] && cost <= best_cost + 1e-12)) {
          best_cost = cost;
          best = i;
        }
      }
      if (best != medoids[c]) {
        medoids[c] = best;
        changed = true;
      }
    }
    if (!changed) break;
    assign();
  }
  return Clustering::from_labels(labels);
}

SdpClusterResult cluster_workers_sdp(const StageOneBlock& block, int d, Seed seed,
                                     const SdpSettings& settings) {
  if (d < 1) throw Error(ErrorKind::kInvalidDimension, "d must be positive");
  const int n = block.n();
  SdpClusterResult result;
  if (d == 1) {
    result.clustering = Clustering::from_labels(std::vector<int>(static_cast<std::size_t>(n), 0));
    if (n > 1) result.estimates = estimate_edge_densities(similarity_matrix(block), 1, settings.jacobi_tolerance);
    return result;
  }
  const SimilarityMatrix sim = similarity_matrix(block);
  result.estimates = estimate_edge_densities(sim, d, settings.jacobi_tolerance);
  const SdpSolution sol = solve_sdp(sim, result.estimates.lambda_tune, settings);
  result.iterations = sol.iterations;
  result.converged = sol.converged;
  result.clustering = extract_clusters_kmedoids(sol.x, d, seed);
  return result;
}

}  // namespace typecrowd
