#include "typecrowd/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "typecrowd/budgets.hpp"
#include "typecrowd/cluster_sdp.hpp"
#include "typecrowd/cluster_threshold.hpp"
#include "typecrowd/harness.hpp"
#include "typecrowd/inference.hpp"
#include "typecrowd/jacobi.hpp"
#include "typecrowd/voting.hpp"

namespace typecrowd {
namespace {

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::vector<int> range(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// "at least k of 30" rescaled to the trial count actually run.
int scaled_count(int k_of_30, int trials) {
  return static_cast<int>(std::ceil(k_of_30 / 30.0 * trials - 1e-9));
}

// Upper 3-sigma envelope of an observed frequency whose true rate is at most b.
double envelope(double b, double samples) {
  b = std::clamp(b, 0.0, 1.0);
  return b + 3 * std::sqrt(b * (1 - b) / samples);
}

double relative_gap(double got, double want) { return std::abs(got - want) / std::abs(want); }

struct Context {
  Seed seed;
  int trials;
  bool quick;
};

// Criterion 1: budget-formula orderings on the grid and hand-derived spot values.
CriterionResult budget_grid(const Context&) {
  CriterionResult out{1, "budget formulas", false, {}, 0};
  int cells = 0, oracle_bad = 0, alg1_bad = 0;
  std::string first_bad;
  for (double p : {0.7, 0.8, 0.9, 1.0}) {
    for (double q : {0.5, 0.55, 0.6, 0.7}) {
      if (q >= p) continue;
      for (int d : {2, 3, 5, 10}) {
        for (double alpha : {0.01, 0.1}) {
          const BudgetReport b = budget_report(ModelParams(d, p, q), alpha);
          ++cells;
          oracle_bad += b.l_oracle > b.l_mv;
          if (b.l_alg1 > b.l_type) {
            if (alg1_bad++ == 0) {
              first_bad = fmt("p=%g q=%g d=%d a=%g: L_alg1=%.4f > L_type=%.4f", p, q, d, alpha,
                              b.l_alg1, b.l_type);
            }
          }
        }
      }
    }
  }
  const BudgetReport spot = budget_report(ModelParams(3, 0.9, 0.6), 0.1);
  const double gu = relative_gap(spot.gamma_u, 0.09);
  const double lo = relative_gap(spot.l_oracle, 6 / 0.72 * std::log(10.0));
  const double lm = relative_gap(spot.l_mv, 18 / 1.44 * std::log(10.0));
  const bool spots = gu <= 1e-6 && lo <= 1e-6 && lm <= 1e-6;
  out.pass = oracle_bad == 0 && alg1_bad == 0 && spots;
  out.detail = fmt("%d cells; L_oracle>L_mv in %d, L_alg1>L_type in %d; gamma_u=%.6f L_oracle=%.4f "
                   "L_mv=%.4f (max rel gap %.1e)",
                   cells, oracle_bad, alg1_bad, spot.gamma_u, spot.l_oracle, spot.l_mv,
                   std::max({gu, lo, lm}));
  if (!first_bad.empty()) out.detail += "; first violation " + first_bad;
  return out;
}

// Criterion 2: at q = 1/2 the cluster-weighted vote and the matched-cluster vote agree exactly.
CriterionResult half_collapse(const Context& ctx) {
  CriterionResult out{2, "q=1/2 collapse", false, {}, 0};
  const std::vector<Algorithm> algs{Algorithm::kPrior, Algorithm::kAlg1};
  int identical = 0, total = 0, failures = 0;
  long differing_tasks = 0;
  for (double p : {0.85, 0.9}) {
    const ModelParams params(3, p, 0.5);
    PipelineConfig config;
    config.r = 1000;
    config.l = 4;
    config.clustering = StageOneMethod::kSdp;
    for (int t = 0; t < ctx.trials; ++t) {
      const Seed seed = derive(derive(ctx.seed, p == 0.85 ? "c2-085" : "c2-090"), static_cast<std::uint64_t>(t));
      const World world = sample_world(params, 2000, 60, derive(seed, "world"));
      const PipelineBatch batch = run_pipelines(world, params, algs, config, seed);
      ++total;
      if (!batch.results[0] || !batch.results[1]) {
        ++failures;
        continue;
      }
      const auto& a = batch.results[0]->predictions;
      const auto& b = batch.results[1]->predictions;
      long diff = 0;
      for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
      differing_tasks += diff;
      identical += diff == 0;
    }
  }
  out.pass = identical == total;
  out.detail = fmt("identical predictions in %d/%d runs (p in {0.85,0.9}); %ld differing tasks, %d stage errors",
                   identical, total, differing_tasks, failures);
  return out;
}

// Criterion 3: qualitative ordering of the five rules over a budget sweep at q = 0.7.
CriterionResult ordering(const Context& ctx) {
  CriterionResult out{3, "error ordering at q=0.7", false, {}, 0};
  ExperimentConfig config;
  config.d = 3;
  config.p = 0.9;
  config.q = 0.7;
  config.m = 2000;
  config.n = 60;
  config.r = 1000;
  config.clustering = StageOneMethod::kSdp;
  config.budgets = ctx.quick ? std::vector<int>{4, 8, 12} : std::vector<int>{4, 6, 8, 10, 12};
  config.trials = ctx.trials;
  config.seed = derive(ctx.seed, "c3");
  const ResultTable table = run_sweep(config);

  const auto within = [](const SummaryRow& lo, const SummaryRow& hi) {
    const double se = std::sqrt(lo.standard_error * lo.standard_error + hi.standard_error * hi.standard_error);
    return lo.mean_error <= hi.mean_error + 3 * se;
  };
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> violations;
  for (int l : config.budgets) {
    const auto& mv = table.summary(Algorithm::kMajority, l);
    const auto& oracle = table.summary(Algorithm::kOracleWmv, l);
    const auto& prior = table.summary(Algorithm::kPrior, l);
    const auto& alg1 = table.summary(Algorithm::kAlg1, l);
    const auto& alg2 = table.summary(Algorithm::kAlg2, l);
    bool complete = true;
    for (const SummaryRow* s : {&mv, &oracle, &prior, &alg1, &alg2}) complete = complete && s->completed == config.trials;
    const bool a = within(oracle, alg1), b = within(alg1, prior), c = within(alg1, mv);
    const bool e = std::abs(alg2.mean_error - alg1.mean_error) <= 0.02;
    if (!(a && b && c && e && complete)) {
      pass = false;
      std::string v = fmt("l=%d:", l);
      if (!complete) v += " incomplete";
      if (!a) v += " oracle>alg1";
      if (!b) v += " alg1>prior";
      if (!c) v += fmt(" alg1>mv (%.5f vs %.5f)", alg1.mean_error, mv.mean_error);
      if (!e) v += " |alg2-alg1|>0.02";
      violations.push_back(v);
    }
    detail << fmt("[d*l=%d total=%.0f mv=%.5f or=%.5f pr=%.5f a1=%.5f a2=%.5f] ", 3 * l,
                  mv.mean_queries_per_task, mv.mean_error, oracle.mean_error, prior.mean_error,
                  alg1.mean_error, alg2.mean_error);
  }
  out.pass = pass;
  out.detail = detail.str();
  for (const auto& v : violations) out.detail += v + " ";
  return out;
}

// Criterion 4: recommended (zeta, r, l, n) keep the error fraction below alpha.
CriterionResult end_to_end(const Context& ctx) {
  CriterionResult out{4, "recommended settings reach alpha", false, {}, 0};
  const ModelParams params(3, 0.9, 0.6);
  const double alpha = 0.1;
  const long n = stage1_recommendation(params, alpha, 2).n_min;
  const auto rec = stage1_recommendation(params, alpha, n);
  ExperimentConfig config;
  config.d = 3;
  config.p = 0.9;
  config.q = 0.6;
  config.n = static_cast<int>(n);
  config.r = static_cast<int>(rec.r);
  config.m = 10000;
  config.budgets = {static_cast<int>(rec.l)};
  config.algorithms = {Algorithm::kAlg1};
  config.zeta = rec.zeta;
  config.clustering = StageOneMethod::kThreshold;
  config.trials = ctx.trials;
  config.seed = derive(ctx.seed, "c4");
  const ResultTable table = run_sweep(config);
  int good = 0;
  double worst = 0;
  for (const auto& row : table.rows) {
    if (row.ok && row.error_fraction <= alpha) ++good;
    if (row.ok) worst = std::max(worst, row.error_fraction);
  }
  const int need = scaled_count(27, ctx.trials);
  out.pass = good >= need;
  out.detail = fmt("n=%ld r=%ld l=%ld zeta=%.4f m=%d: error<=%.2f in %d/%d trials (need %d), worst %.5f",
                   n, rec.r, rec.l, rec.zeta, config.m, alpha, good, ctx.trials, need, worst);
  return out;
}

// Criterion 5: empirical failure frequencies against the closed-form bounds.
CriterionResult bound_conformance(const Context& ctx) {
  CriterionResult out{5, "failure bounds", false, {}, 0};
  const ModelParams params(3, 0.9, 0.6);
  const std::vector<std::pair<int, int>> grid{{3000, 40}, {4000, 60}, {5000, 80},
                                              {6000, 100}, {7000, 150}, {8000, 200}};
  const double zeta = stage1_recommendation(params, 0.1, 30).zeta;
  const int stage1_n = 30, tasks_per_trial = 500;
  bool pass = true;
  std::ostringstream detail;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto [r, l] = grid[g];
    const Seed base = derive(derive(ctx.seed, "c5"), g);

    int cluster_fail = 0;
    for (int t = 0; t < ctx.trials; ++t) {
      const Seed s = derive(derive(base, "cluster"), static_cast<std::uint64_t>(t));
      const World w = sample_world(params, r, stage1_n, derive(s, "world"));
      const auto tasks = range(r);
      const auto answers = sample_answers(w, params, assign_all(stage1_n, tasks), derive(s, "answers"));
      const Clustering c = cluster_sequential(make_stage_one_block(answers, tasks), zeta);
      cluster_fail += !same_partition(c.assignments(), type_partition(w).assignments());
    }

    long mismatches = 0;
    const int n = l * params.d();
    for (int t = 0; t < ctx.trials; ++t) {
      const Seed s = derive(derive(base, "match"), static_cast<std::uint64_t>(t));
      World w = sample_world(params, tasks_per_trial, n, derive(s, "world"));
      for (int j = 0; j < n; ++j) w.worker_types[static_cast<std::size_t>(j)] = j % params.d();
      const Clustering truth = type_partition(w);
      const auto answers = sample_answers(
          w, params, assign_per_cluster(truth, range(tasks_per_trial), l, derive(s, "assign")), derive(s, "answers"));
      for (int i = 0; i < tasks_per_trial; ++i) {
        // Cluster ids follow first appearance, so cluster z holds the workers of type z.
        mismatches += type_match(answers, truth, i) != w.task_types[static_cast<std::size_t>(i)];
      }
    }

    const ErrorBounds b = theoretical_error_bounds(params, r, l, stage1_n);
    const double f_cluster = static_cast<double>(cluster_fail) / ctx.trials;
    const double samples = static_cast<double>(ctx.trials) * tasks_per_trial;
    const double f_match = mismatches / samples;
    const bool ok_c = f_cluster <= envelope(b.clustering, ctx.trials);
    const bool ok_m = f_match <= envelope(b.type_mismatch, samples);
    pass = pass && ok_c && ok_m;
    detail << fmt("[r=%d l=%d cluster %.3f<=%.3g%s match %.5f<=%.3g%s] ", r, l, f_cluster,
                  std::min(b.clustering, 1.0), ok_c ? "" : " FAIL", f_match,
                  std::min(b.type_mismatch, 1.0), ok_m ? "" : " FAIL");
  }
  out.pass = pass;
  out.detail = detail.str();
  return out;
}

// Criterion 6: SDP exact-recovery rate and tuning window at the prescribed task count.
CriterionResult sdp_rate(const Context& ctx) {
  CriterionResult out{6, "SDP recovery rate", false, {}, 0};
  const ModelParams params(3, 0.9, 0.6);
  const int n = 60;
  const int r = static_cast<int>(std::ceil(sdp_task_count(params, n)));
  const auto window = tuning_window(params, r);
  const auto tasks = range(r);
  int exact = 0, inside = 0;
  for (int t = 0; t < ctx.trials; ++t) {
    const Seed s = derive(derive(ctx.seed, "c6"), static_cast<std::uint64_t>(t));
    const World w = sample_world(params, r, n, derive(s, "world"));
    const auto answers = sample_answers(w, params, assign_all(n, tasks), derive(s, "answers"));
    const auto result = cluster_workers_sdp(make_stage_one_block(answers, tasks), params.d(), derive(s, "kmedoids"));
    exact += same_partition(result.clustering.assignments(), type_partition(w).assignments());
    inside += result.estimates.lambda_tune >= window.first && result.estimates.lambda_tune <= window.second;
  }
  const double target = 1 - 4.0 / n;
  const double floor = target - 3 * std::sqrt(target * (1 - target) / ctx.trials);
  const double rate = static_cast<double>(exact) / ctx.trials;
  const int need = scaled_count(28, ctx.trials);
  out.pass = rate >= floor && inside >= need;
  out.detail = fmt("r=%d: exact recovery %d/%d (rate %.3f, floor %.3f); lambda in [%.1f, %.1f] in %d/%d (need %d)",
                   r, exact, ctx.trials, rate, floor, window.first, window.second, inside, ctx.trials, need);
  return out;
}

// Criterion 7: SDP solver on a noiseless two-block instance and eigensolver against a dense oracle.
CriterionResult solver_unit(const Context& ctx) {
  CriterionResult out{7, "SDP solver and eigensolver", false, {}, 0};
  SimilarityMatrix sim;
  sim.r = 10;
  sim.a.resize(4, 4);
  sim.a << 0, 10, -10, -10,
           10, 0, -10, -10,
           -10, -10, 0, 10,
           -10, -10, 10, 0;
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(4, 4);
  truth.topLeftCorner(2, 2).setOnes();
  truth.bottomRightCorner(2, 2).setOnes();
  const double frob = (solve_sdp(sim, 0.0).x - truth).norm();

  Rng rng(derive(ctx.seed, "c7"));
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(30));
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = 2 * rng.uniform() - 1;
    const auto mine = jacobi_eigen(m, JacobiSettings{1e-12, 100, false});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(m, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ref = oracle.eigenvalues().reverse();
    const double scale = ref.cwiseAbs().maxCoeff();
    worst = std::max(worst, (mine.values - ref).cwiseAbs().maxCoeff() / scale);
  }
  out.pass = frob <= 1e-3 && worst <= 1e-6;
  out.detail = fmt("two-block Frobenius gap %.2e (<= 1e-3); eigenvalue rel gap over 50 matrices %.2e (<= 1e-6)",
                   frob, worst);
  return out;
}

// Mean of max(k, s - k)/s for k ~ Binomial(s, f).
double expected_majority_fraction(int s, double f) {
  if (s <= 0) return 0;
  double e = 0;
  for (int k = 0; k <= s; ++k) {
    const double log_c = std::lgamma(s + 1.0) - std::lgamma(k + 1.0) - std::lgamma(s - k + 1.0);
    e += std::exp(log_c + k * std::log(f) + (s - k) * std::log1p(-f)) * std::max(k, s - k) / s;
  }
  return e;
}

// Criterion 8: plug-in reliability estimates under perfect clustering.
CriterionResult estimator(const Context& ctx) {
  CriterionResult out{8, "reliability estimates", false, {}, 0};
  const ModelParams params(3, 0.9, 0.6);
  const int m = 5000, n = 60, l = 10;
  int good = 0, failed = 0;
  double sum_p = 0, sum_q = 0, sum_ep = 0, sum_eq = 0;
  for (int t = 0; t < ctx.trials; ++t) {
    const Seed s = derive(derive(ctx.seed, "c8"), static_cast<std::uint64_t>(t));
    const World w = sample_world(params, m, n, derive(s, "world"));
    const Clustering truth = type_partition(w);
    try {
      const auto answers = sample_answers(
          w, params, assign_per_cluster(truth, range(m), l, derive(s, "assign")), derive(s, "answers"));
      const WorkerSplit split = split_workers(truth, 0.3, derive(s, "split"));
      const auto est = estimate_pq(answers, truth, split);
      good += std::abs(est.p_hat - params.p()) <= 0.03 && std::abs(est.q_hat - params.q()) <= 0.03;
      sum_p += est.p_hat;
      sum_q += est.q_hat;
      // Expected estimator value given the realized set sizes, assuming a correct match.
      double ep = 0, eq = 0;
      for (int i : est.tasks) {
        int sm = 0, su = 0;
        for (const Answer& a : answers.task(i)) {
          if (!split.in_estimation_pool(a.worker)) continue;
          const bool same =
              w.worker_types[static_cast<std::size_t>(a.worker)] == w.task_types[static_cast<std::size_t>(i)];
          (same ? sm : su)++;
        }
        ep += expected_majority_fraction(sm, params.p());
        eq += expected_majority_fraction(su, params.q());
      }
      sum_ep += ep / static_cast<double>(est.tasks.size());
      sum_eq += eq / static_cast<double>(est.tasks.size());
    } catch (const Error&) {
      ++failed;
    }
  }
  const int done = ctx.trials - failed;
  const int need = scaled_count(27, ctx.trials);
  out.pass = good >= need;
  out.detail = fmt("within 0.03 in %d/%d trials (need %d, %d errors); mean p_hat=%.4f q_hat=%.4f; "
                   "finite-sample expectation p=%.4f q=%.4f",
                   good, ctx.trials, need, failed, sum_p / std::max(done, 1), sum_q / std::max(done, 1),
                   sum_ep / std::max(done, 1), sum_eq / std::max(done, 1));
  return out;
}

// Criterion 9: oracle-weighted voting error against the Hoeffding bound.
CriterionResult hoeffding(const Context& ctx) {
  CriterionResult out{9, "Hoeffding conformance", false, {}, 0};
  const ModelParams params(3, 0.9, 0.6);
  const int m = 2000, n = 60;
  bool pass = true;
  std::ostringstream detail;
  for (int k : {3, 6, 9, 15, 21, 30}) {
    long errors = 0;
    double bound = 0;
    for (int t = 0; t < ctx.trials; ++t) {
      const Seed s = derive(derive(derive(ctx.seed, "c9"), static_cast<std::uint64_t>(k)), static_cast<std::uint64_t>(t));
      const World w = sample_world(params, m, n, derive(s, "world"));
      const auto answers =
          sample_answers(w, params, assign_uniform(n, range(m), k, derive(s, "assign")), derive(s, "answers"));
      for (int i = 0; i < m; ++i) {
        std::vector<int> votes;
        std::vector<bool> matched;
        std::vector<double> f;
        for (const Answer& a : answers.task(i)) {
          const bool same = w.worker_types[static_cast<std::size_t>(a.worker)] == w.task_types[static_cast<std::size_t>(i)];
          votes.push_back(a.value);
          matched.push_back(same);
          f.push_back(params.fidelity(same));
        }
        const auto mu = oracle_weights(params, matched);
        bound += hoeffding_bound(f, mu);
        errors += weighted_majority_vote(votes, mu, tie_seed(s, i)).label != w.labels[static_cast<std::size_t>(i)];
      }
    }
    const double samples = static_cast<double>(ctx.trials) * m;
    const double b = bound / samples;
    const double rate = errors / samples;
    const bool ok = rate <= envelope(b, samples);
    pass = pass && ok;
    detail << fmt("[k=%d err %.5f <= %.5f%s] ", k, rate, b, ok ? "" : " FAIL");
  }
  out.pass = pass;
  out.detail = detail.str();
  return out;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& report) {
  const Context ctx{options.seed, options.quick ? 5 : 30, options.quick};
  using Fn = CriterionResult (*)(const Context&);
  const Fn criteria[] = {budget_grid, half_collapse,  ordering,    end_to_end, bound_conformance,
                         sdp_rate,    solver_unit,    estimator,   hoeffding};
  std::vector<CriterionResult> results;
  for (int id = 1; id <= 9; ++id) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = criteria[id - 1](ctx);
    } catch (const std::exception& e) {
      r = CriterionResult{id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what(), 0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (report) report(r);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result(const CriterionResult& result) {
  return fmt("criterion %d %s %s: ", result.id, result.pass ? "PASS" : "FAIL", result.name.c_str()) +
         result.detail + fmt(" (%.1fs)", result.seconds);
}

}  // namespace typecrowd
