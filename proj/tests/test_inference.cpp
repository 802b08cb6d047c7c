#include <cmath>
#include <numeric>

#include "doctest.h"
#include "typecrowd/budgets.hpp"
#include "typecrowd/cluster_threshold.hpp"
#include "typecrowd/error.hpp"
#include "typecrowd/inference.hpp"
#include "typecrowd/voting.hpp"

using namespace typecrowd;

namespace {

std::vector<int> range(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Workers typed round-robin, so every type has exactly n/d members.
World balanced_world(const ModelParams& params, int m, int n, Seed seed) {
  World w = sample_world(params, m, n, seed);
  for (int j = 0; j < n; ++j) w.worker_types[static_cast<std::size_t>(j)] = j % params.d();
  return w;
}

// Probability-weighted mean of max(k, n - k) / n for k ~ Binomial(n, f).
double expected_majority_fraction(int n, double f) {
  double e = 0;
  for (int k = 0; k <= n; ++k) {
    const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double pk = std::exp(log_c + k * std::log(f) + (n - k) * std::log1p(-f));
    e += pk * std::max(k, n - k) / static_cast<double>(n);
  }
  return e;
}

}  // namespace

TEST_CASE("tally and type_match") {
  const Clustering c = Clustering::from_labels({0, 0, 0, 1, 1, 2, 2});
  AnswerMatrix a(2, 7);
  for (int j : {0, 1, 2}) a.set(0, j, 1);
  a.set(0, 3, 1);
  a.set(0, 4, -1);
  const TallyVector t = tally(a, c, 0);
  CHECK(t.signed_sum == std::vector<int>{3, 0, 0});
  CHECK(t.positives == std::vector<int>{3, 1, 0});
  CHECK(t.counts == std::vector<int>{3, 2, 0});
  CHECK(type_match(a, c, 0) == 0);

  a.set(1, 0, 1);
  a.set(1, 1, -1);
  a.set(1, 5, -1);
  a.set(1, 6, 1);
  CHECK(type_match(a, c, 1) == 0);
  // Clusters without answers are never matched.
  AnswerMatrix b(1, 7);
  b.set(0, 5, 1);
  b.set(0, 6, -1);
  CHECK(type_match(b, c, 0) == 2);
  CHECK_THROWS_AS(type_match(AnswerMatrix(1, 7), c, 0), Error);
}

TEST_CASE("type-match error frequency against its bound") {
  const ModelParams params(3, 0.9, 0.6);
  for (int l : {40, 200}) {
    const int m = 2000;
    const World w = balanced_world(params, m, 3 * l, Seed{50});
    const Clustering truth = type_partition(w);
    const auto answers = sample_answers(w, params, assign_per_cluster(truth, range(m), l, Seed{51}), Seed{52});
    int wrong = 0;
    for (int i = 0; i < m; ++i) wrong += type_match(answers, truth, i) != w.task_types[static_cast<std::size_t>(i)];
    const double b = std::min(theoretical_error_bounds(params, 1, l, 1e9).type_mismatch, 1.0);
    CAPTURE(l);
    CHECK(wrong / static_cast<double>(m) <= b + 3 * std::sqrt(b * (1 - b) / m));
  }
}

TEST_CASE("infer_prior_alg reads only the matched cluster") {
  const Clustering c = Clustering::from_labels({0, 0, 0, 1, 1, 1, 2, 2, 2});
  Rng rng(Seed{53});
  for (int trial = 0; trial < 300; ++trial) {
    AnswerMatrix a(1, 9);
    for (int j : {0, 1, 2}) a.set(0, j, 1);
    for (int j = 3; j < 9; ++j) a.set(0, j, rng.sign());
    CHECK(infer_prior_alg(a, c, 0, Seed{rng.next()}) == 1);
  }
}

TEST_CASE("alg1 decision rule") {
  // Matched cluster tallies +2, the other -3, weights 0.8 and 0.4.
  const ModelParams params(2, 0.9, 0.7);
  const std::vector<int> votes{1, 1, -1, -1, -1};
  const auto weights = oracle_weights(params, {true, true, false, false, false});
  const VoteOutcome o = weighted_majority_vote(votes, weights, Seed{1});
  CHECK(o.margin == doctest::Approx(0.4));
  CHECK(o.label == 1);

  // Through infer_alg1 the larger |T| decides the match; make the matched one larger.
  const Clustering c = Clustering::from_labels({0, 0, 0, 0, 1, 1, 1});
  AnswerMatrix a(1, 7);
  for (int j : {0, 1, 2, 3}) a.set(0, j, 1);
  for (int j : {4, 5, 6}) a.set(0, j, -1);
  CHECK(infer_alg1(a, c, 0, params, Seed{1}) == 1);  // 0.8 * 4 - 0.4 * 3
}

TEST_CASE("alg1 equals prior at q = 1/2 and oracle WMV under a correct match") {
  for (double p : {0.85, 0.9}) {
    const ModelParams params(3, p, 0.5);
    const World w = balanced_world(params, 2000, 30, Seed{54});
    const Clustering truth = type_partition(w);
    const auto answers = sample_answers(w, params, assign_per_cluster(truth, range(2000), 4, Seed{55}), Seed{56});
    for (int i = 0; i < 2000; ++i) {
      const Seed s = tie_seed(Seed{57}, i);
      CHECK(infer_alg1(answers, truth, i, params, s) == infer_prior_alg(answers, truth, i, s));
    }
  }
  const ModelParams params(3, 0.9, 0.6);
  const World w = balanced_world(params, 2000, 30, Seed{58});
  const Clustering truth = type_partition(w);
  const auto answers = sample_answers(w, params, assign_per_cluster(truth, range(2000), 5, Seed{59}), Seed{60});
  int compared = 0;
  for (int i = 0; i < 2000; ++i) {
    if (type_match(answers, truth, i) != w.task_types[static_cast<std::size_t>(i)]) continue;
    std::vector<int> votes;
    std::vector<bool> matched;
    for (const Answer& a : answers.task(i)) {
      votes.push_back(a.value);
      matched.push_back(w.worker_types[static_cast<std::size_t>(a.worker)] == w.task_types[static_cast<std::size_t>(i)]);
    }
    const Seed s = tie_seed(Seed{61}, i);
    CHECK(infer_alg1(answers, truth, i, params, s) ==
          weighted_majority_vote(votes, oracle_weights(params, matched), s).label);
    ++compared;
  }
  CHECK(compared > 1000);
}

TEST_CASE("split_workers") {
  const Clustering big = Clustering::from_labels(std::vector<int>(10000, 0));
  const WorkerSplit s = split_workers(big, 0.2, Seed{62});
  const long count = std::count(s.estimation_pool.begin(), s.estimation_pool.end(), 1);
  CHECK(count / 1e4 >= 0.188);
  CHECK(count / 1e4 <= 0.212);
  CHECK(s.estimation_parts[0].size() + s.voting_parts[0].size() == 10000);

  const Clustering c = Clustering::from_labels({0, 0, 1, 1});
  const WorkerSplit all = split_workers(c, 1.0, Seed{63});
  for (const auto& part : all.voting_parts) CHECK(part.empty());
  AnswerMatrix a(1, 4);
  for (int j = 0; j < 4; ++j) a.set(0, j, 1);
  ReliabilityEstimates est;
  est.p_hat = 0.9;
  est.q_hat = 0.6;
  try {
    infer_alg2(a, c, all, est, 0, Seed{1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoVotes);
  }
  CHECK_THROWS_AS(split_workers(c, 1.5, Seed{1}), Error);
}

TEST_CASE("estimate_pq per-task fractions") {
  const Clustering c = Clustering::from_labels({0, 0, 0, 1, 1});
  const WorkerSplit all = split_workers(c, 1.0, Seed{64});
  AnswerMatrix a(2, 5);
  for (int j : {0, 1, 2}) a.set(0, j, 1);
  a.set(0, 3, 1);
  a.set(0, 4, -1);
  a.set(1, 0, 1);
  a.set(1, 1, -1);
  a.set(1, 3, -1);
  a.set(1, 4, 1);
  a.set(1, 2, 1);
  const auto est = estimate_pq(a, c, all);
  REQUIRE(est.tasks.size() == 2);
  CHECK(est.per_task_p[0] == 1.0);
  CHECK(est.per_task_q[0] == 0.5);
  CHECK(est.per_task_p[1] == doctest::Approx(2.0 / 3));
  CHECK(est.per_task_q[1] == 0.5);
  CHECK(est.p_hat >= est.q_hat);

  AnswerMatrix only_matched(1, 5);
  for (int j : {0, 1, 2}) only_matched.set(0, j, 1);
  try {
    estimate_pq(only_matched, c, all);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEstimationFailure);
  }
}

TEST_CASE("estimator mean matches its finite-sample expectation") {
  // On correctly matched tasks the per-task estimates are majority fractions of
  // binomial draws with fidelity p (matched) and a p/q mixture (unmatched).
  const ModelParams params(3, 0.9, 0.6);
  const int m = 3000, l = 40;
  const World w = balanced_world(params, m, 3 * l, Seed{65});
  const Clustering truth = type_partition(w);
  const auto answers = sample_answers(w, params, assign_per_cluster(truth, range(m), l, Seed{66}), Seed{67});
  const WorkerSplit split = split_workers(truth, 0.3, Seed{68});
  const auto est = estimate_pq(answers, truth, split);
  double got = 0, expected = 0, var = 0;
  int k = 0;
  for (std::size_t idx = 0; idx < est.tasks.size(); ++idx) {
    const int i = est.tasks[idx];
    if (type_match(answers, truth, i) != w.task_types[static_cast<std::size_t>(i)]) continue;
    int size = 0;
    for (const Answer& a : answers.task(i)) {
      size += split.in_estimation_pool(a.worker) &&
              w.worker_types[static_cast<std::size_t>(a.worker)] == w.task_types[static_cast<std::size_t>(i)];
    }
    const double e = expected_majority_fraction(size, params.p());
    got += est.per_task_p[idx];
    expected += e;
    var += 0.25 / size;  // a fraction in [1/2, 1] has variance at most 1/(4 size)
    ++k;
  }
  REQUIRE(k > 2500);
  CHECK(std::abs(got - expected) / k <= 3 * std::sqrt(var) / k);
  CHECK(est.p_hat >= est.q_hat);
}

TEST_CASE("alg2 plug-in identities") {
  const ModelParams params(3, 0.9, 0.6);
  const World w = balanced_world(params, 500, 30, Seed{69});
  const Clustering truth = type_partition(w);
  const auto answers = sample_answers(w, params, assign_per_cluster(truth, range(500), 6, Seed{70}), Seed{71});
  const WorkerSplit none = split_workers(truth, 0.0, Seed{72});
  ReliabilityEstimates exact;
  exact.p_hat = params.p();
  exact.q_hat = params.q();
  ReliabilityEstimates flat;
  flat.p_hat = flat.q_hat = 0.75;
  for (int i = 0; i < 500; ++i) {
    const Seed s = tie_seed(Seed{73}, i);
    CHECK(infer_alg2(answers, truth, none, exact, i, s) == infer_alg1(answers, truth, i, params, s));
    std::vector<int> votes;
    for (const Answer& a : answers.task(i)) votes.push_back(a.value);
    CHECK(infer_alg2(answers, truth, none, flat, i, s) == majority_vote(votes, s).label);
  }
}

TEST_CASE("algorithm names") {
  for (Algorithm a : {Algorithm::kMajority, Algorithm::kOracleWmv, Algorithm::kPrior, Algorithm::kAlg1,
                      Algorithm::kAlg2}) {
    CHECK(parse_algorithm(to_string(a)) == a);
  }
  CHECK(parse_stage_one_method("sdp") == StageOneMethod::kSdp);
  CHECK_THROWS_AS(parse_algorithm("bogus"), Error);
}

TEST_CASE("run_pipeline") {
  SUBCASE("noiseless answers give zero error for every algorithm") {
    const ModelParams params(3, 1.0, 1.0 - 1e-12);
    const World w = sample_world(params, 400, 30, Seed{74});
    PipelineConfig config;
    config.r = 100;
    config.l = 2;
    for (Algorithm a : {Algorithm::kMajority, Algorithm::kOracleWmv, Algorithm::kPrior, Algorithm::kAlg1,
                        Algorithm::kAlg2}) {
      CAPTURE(to_string(a));
      CHECK(run_pipeline(w, params, a, config, Seed{75}).error_fraction == 0.0);
    }
  }
  SUBCASE("query accounting and batch equivalence") {
    const ModelParams params(3, 0.9, 0.6);
    const World w = balanced_world(params, 1000, 30, Seed{76});
    PipelineConfig config;
    config.r = 300;
    config.l = 3;
    config.clustering = StageOneMethod::kSdp;
    const std::vector<Algorithm> algs{Algorithm::kMajority, Algorithm::kPrior, Algorithm::kAlg1, Algorithm::kAlg2};
    const PipelineBatch batch = run_pipelines(w, params, algs, config, Seed{77});
    REQUIRE(batch.results.size() == algs.size());
    for (std::size_t k = 0; k < algs.size(); ++k) {
      REQUIRE(batch.results[k].has_value());
      const ExperimentResult single = run_pipeline(w, params, algs[k], config, Seed{77});
      CHECK(single.predictions == batch.results[k]->predictions);
      const ExperimentResult& r = *batch.results[k];
      const double stage2 = r.stage2_queries_per_task * (1000 - 300);
      CHECK(r.queries_per_task == doctest::Approx((30.0 * 300 + stage2) / 1000));
    }
    CHECK(batch.results[0]->stage2_queries_per_task == doctest::Approx(9));
    const ExperimentResult& alg1 = *batch.results[2];
    CHECK(alg1.stage2_queries_per_task == doctest::Approx(3.0 * alg1.clusters));
  }
}
