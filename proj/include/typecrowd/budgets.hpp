#pragma once

#include "typecrowd/model.hpp"

namespace typecrowd {

/// Closed-form separations and per-task query budgets for a target error
/// fraction alpha_c. All values are real; callers round up when allocating.
struct BudgetReport {
  double alpha_c;
  double gamma_oracle;  // separation of oracle-weighted voting
  double gamma_mv;      // separation of plain majority voting
  double gamma_u;       // exponent under a wrong type match
  double gamma_m;       // exponent under a correct type match
  double l_oracle;
  double l_mv;
  double l_type;        // clustering + matched-cluster majority vote
  double l_alg1;        // clustering + cluster-weighted vote
};

BudgetReport budget_report(const ModelParams& params, double alpha_c);

/// Stage-1 settings that drive the total error below alpha_c.
struct StageOneRecommendation {
  double zeta;  // agreement threshold, midpoint of same/cross-type agreement
  long r;       // shared tasks answered by every worker
  long l;       // workers drawn per cluster and task
  long n_min;   // minimum worker count
  double r_exact;
  double l_exact;
  double n_exact;
};

StageOneRecommendation stage1_recommendation(const ModelParams& params, double alpha_c, long n);

/// Minimum worker count for the matched-cluster baseline, max{8d ln(3d/a), L_type}.
double baseline_n_min(const ModelParams& params, double alpha_c);

/// Upper bounds on the three failure events of the two-stage pipeline.
struct ErrorBounds {
  double clustering;      // any pair misclassified by threshold clustering
  double small_type;      // some type holds at most l workers (1 when l d >= n)
  double type_mismatch;   // per-task wrong type match
};

ErrorBounds theoretical_error_bounds(const ModelParams& params, double r, double l, double n);

/// Stage-1 task count c1 d^2 (ln n)^2 / (p_m - p_u)^2 for SDP clustering.
double sdp_task_count(const ModelParams& params, long n, double c1 = 1.0);

/// Asymptotic regime flag: m >= c n^3. Reported, never enforced.
bool satisfies_task_regime(long m, long n, double c = 1.0);

}  // namespace typecrowd
