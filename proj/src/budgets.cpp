#include "typecrowd/budgets.hpp"

#include <algorithm>
#include <cmath>

#include "typecrowd/error.hpp"

namespace typecrowd {

namespace {

void check_alpha(double alpha_c) {
  if (!(alpha_c > 0.0 && alpha_c < 1.0)) {
    throw Error(ErrorKind::kRange, "alpha_c must lie in (0, 1)");
  }
}

double gamma_u_of(double bp, double bq, double d) {
  const double num = 2 * bp * bq + (d - 2) * bq * bq;
  return num * num / (2 * (bp * bp + (d - 1) * bq * bq));
}

}  // namespace

BudgetReport budget_report(const ModelParams& params, double alpha_c) {
  check_alpha(alpha_c);
  const double d = params.d();
  const double bp = 2 * params.p() - 1;
  const double bq = 2 * params.q() - 1;
  const double gap2 = (params.p() - params.q()) * (params.p() - params.q());
  const double energy = bp * bp + (d - 1) * bq * bq;
  const double mean_bias = bp + (d - 1) * bq;
  const double log_inv_alpha = std::log(1 / alpha_c);

  BudgetReport report{};
  report.alpha_c = alpha_c;
  report.gamma_oracle = std::sqrt(energy / d);
  report.gamma_mv = mean_bias / d;
  report.gamma_u = gamma_u_of(bp, bq, d);
  report.gamma_m = energy / 2;
  report.l_oracle = 2 * d / energy * log_inv_alpha;
  report.l_mv = 2 * d * d / (mean_bias * mean_bias) * log_inv_alpha;
  report.l_type = std::min(2 * d / (gap2 / 2 + bq * bq / 2) * std::log((6 * d + 3) / alpha_c),
                           2 * d / (gap2 / 2) * std::log(6 * d / alpha_c));
  report.l_alg1 = 2 * d / (gap2 / 2 + report.gamma_u) * std::log((6 * d + 3) / alpha_c);
  return report;
}

StageOneRecommendation stage1_recommendation(const ModelParams& params, double alpha_c, long n) {
  check_alpha(alpha_c);
  if (n < 2) throw Error(ErrorKind::kInvalidDimension, "need at least two workers");
  const BudgetReport report = budget_report(params, alpha_c);
  const double d = params.d();
  const double gap = params.p() - params.q();
  const double nn = static_cast<double>(n);

  StageOneRecommendation rec{};
  rec.zeta = 0.5 * (same_type_agreement(params) + cross_type_agreement(params));
  rec.r_exact = d * d / (2 * std::pow(gap, 4)) * std::log(3 * nn * (nn - 1) / (2 * alpha_c));
  rec.l_exact = 1 / (gap * gap / 2 + report.gamma_u) * std::log((6 * d + 3) / alpha_c);
  rec.n_exact = std::max(8 * d * std::log(3 * d / alpha_c), report.l_alg1);
  rec.r = static_cast<long>(std::ceil(rec.r_exact));
  rec.l = static_cast<long>(std::ceil(rec.l_exact));
  rec.n_min = static_cast<long>(std::ceil(rec.n_exact));
  return rec;
}

double baseline_n_min(const ModelParams& params, double alpha_c) {
  const BudgetReport report = budget_report(params, alpha_c);
  return std::max(8 * params.d() * std::log(3 * params.d() / alpha_c), report.l_type);
}

ErrorBounds theoretical_error_bounds(const ModelParams& params, double r, double l, double n) {
  if (!(r > 0 && l > 0 && n > 0)) throw Error(ErrorKind::kRange, "arguments must be positive");
  const double d = params.d();
  const double gap = params.p() - params.q();
  ErrorBounds bounds{};
  bounds.clustering = n * (n - 1) / 2 * std::exp(-2 * std::pow(gap, 4) * r / (d * d));
  const double slack = 1 - l * d / n;
  bounds.small_type = slack <= 0 ? 1.0 : d * std::exp(-0.5 * slack * slack * n / d);
  bounds.type_mismatch = 2 * d * std::exp(-gap * gap * l / 2);
  return bounds;
}

double sdp_task_count(const ModelParams& params, long n, double c1) {
  const DensityConstants rho = density_constants(params);
  const double log_n = std::log(static_cast<double>(n));
  const double d = params.d();
  return c1 * d * d * log_n * log_n / ((rho.within - rho.across) * (rho.within - rho.across));
}

bool satisfies_task_regime(long m, long n, double c) {
  const double nn = static_cast<double>(n);
  return static_cast<double>(m) >= c * nn * nn * nn;
}

}  // namespace typecrowd
