#include "typecrowd/inference.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "typecrowd/cluster_threshold.hpp"
#include "typecrowd/error.hpp"

namespace typecrowd {

TallyVector tally(const AnswerMatrix& answers, const Clustering& clustering, int task) {
  const std::size_t c = clustering.num_clusters();
  TallyVector t{std::vector<int>(c, 0), std::vector<int>(c, 0), std::vector<int>(c, 0)};
  for (const Answer& a : answers.task(task)) {
    const auto z = static_cast<std::size_t>(clustering.cluster_of(a.worker));
    t.signed_sum[z] += a.value;
    t.positives[z] += a.value > 0 ? 1 : 0;
    t.counts[z] += 1;
  }
  return t;
}

int type_match(const AnswerMatrix& answers, const Clustering& clustering, int task) {
  const TallyVector t = tally(answers, clustering, task);
  int best = -1;
  for (std::size_t z = 0; z < t.counts.size(); ++z) {
    if (t.counts[z] == 0) continue;
    if (best < 0 || std::abs(t.signed_sum[z]) > std::abs(t.signed_sum[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(z);
    }
  }
  if (best < 0) throw Error(ErrorKind::kNoVotes, "task " + std::to_string(task) + " has no answers");
  return best;
}

int infer_prior_alg(const AnswerMatrix& answers, const Clustering& clustering, int task, Seed seed) {
  const int matched = type_match(answers, clustering, task);
  std::vector<int> votes;
  for (const Answer& a : answers.task(task)) {
    if (clustering.cluster_of(a.worker) == matched) votes.push_back(a.value);
  }
  return majority_vote(votes, seed).label;
}

int infer_alg1(const AnswerMatrix& answers, const Clustering& clustering, int task,
               const ModelParams& params, Seed seed) {
  const int matched = type_match(answers, clustering, task);
  std::vector<int> votes;
  std::vector<double> weights;
  for (const Answer& a : answers.task(task)) {
    votes.push_back(a.value);
    weights.push_back(2 * params.fidelity(clustering.cluster_of(a.worker) == matched) - 1);
  }
  return weighted_majority_vote(votes, weights, seed).label;
}

WorkerSplit split_workers(const Clustering& clustering, double beta, Seed seed) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorKind::kRange, "beta must lie in [0, 1]");
  WorkerSplit split;
  split.beta = beta;
  split.estimation_pool.assign(clustering.num_workers(), 0);
  split.estimation_parts.resize(clustering.num_clusters());
  split.voting_parts.resize(clustering.num_clusters());
  Rng rng(derive(seed, "split"));
  for (std::size_t j = 0; j < clustering.num_workers(); ++j) {
    const auto z = static_cast<std::size_t>(clustering.cluster_of(static_cast<int>(j)));
    if (rng.bernoulli(beta)) {
      split.estimation_pool[j] = 1;
      split.estimation_parts[z].push_back(static_cast<int>(j));
    } else {
      split.voting_parts[z].push_back(static_cast<int>(j));
    }
  }
  return split;
}

namespace {

double majority_fraction(int positives, int total) {
  const double frac = static_cast<double>(positives) / total;
  return std::max(frac, 1.0 - frac);
}

}  // namespace

ReliabilityEstimates estimate_pq(const AnswerMatrix& answers, const Clustering& clustering,
                                 const WorkerSplit& split, std::span<const int> tasks) {
  if (split.estimation_pool.size() != clustering.num_workers()) {
    throw Error(ErrorKind::kShape, "split does not match the clustering");
  }
  ReliabilityEstimates est;
  double sum_p = 0;
  double sum_q = 0;
  for (int task : tasks) {
    if (answers.task(task).empty()) {
      ++est.skipped;
      continue;
    }
    const int matched = type_match(answers, clustering, task);
    int m_pos = 0, m_total = 0, u_pos = 0, u_total = 0;
    for (const Answer& a : answers.task(task)) {
      if (!split.in_estimation_pool(a.worker)) continue;
      const int positive = a.value > 0 ? 1 : 0;
      if (clustering.cluster_of(a.worker) == matched) {
        m_pos += positive;
        ++m_total;
      } else {
        u_pos += positive;
        ++u_total;
      }
    }
    if (m_total == 0 || u_total == 0) {
      ++est.skipped;
      continue;
    }
    const double p_i = majority_fraction(m_pos, m_total);
    const double q_i = majority_fraction(u_pos, u_total);
    est.tasks.push_back(task);
    est.per_task_p.push_back(p_i);
    est.per_task_q.push_back(q_i);
    sum_p += p_i;
    sum_q += q_i;
  }
  if (est.tasks.empty()) {
    throw Error(ErrorKind::kEstimationFailure, "no task has both matched and unmatched estimation answers");
  }
  const auto count = static_cast<double>(est.tasks.size());
  est.raw_p_hat = sum_p / count;
  est.raw_q_hat = sum_q / count;
  est.p_hat = std::clamp(est.raw_p_hat, 0.5, 1.0);
  est.q_hat = std::clamp(est.raw_q_hat, 0.5, 1.0);
  if (est.p_hat < est.q_hat) {
    std::swap(est.p_hat, est.q_hat);
    est.swapped = true;
  }
  return est;
}

ReliabilityEstimates estimate_pq(const AnswerMatrix& answers, const Clustering& clustering,
                                 const WorkerSplit& split) {
  std::vector<int> tasks(static_cast<std::size_t>(answers.m()));
  std::iota(tasks.begin(), tasks.end(), 0);
  return estimate_pq(answers, clustering, split, tasks);
}

int infer_alg2(const AnswerMatrix& answers, const Clustering& clustering, const WorkerSplit& split,
               const ReliabilityEstimates& estimates, int task, Seed seed) {
  const int matched = type_match(answers, clustering, task);
  const bool uniform = estimates.p_hat == estimates.q_hat;
  std::vector<int> votes;
  std::vector<double> weights;
  bool informative = false;
  for (const Answer& a : answers.task(task)) {
    if (split.in_estimation_pool(a.worker)) continue;
    votes.push_back(a.value);
    const double w = uniform ? 1.0
                             : 2 * (clustering.cluster_of(a.worker) == matched ? estimates.p_hat
                                                                              : estimates.q_hat) - 1;
    informative = informative || w != 0.0;
    weights.push_back(w);
  }
  if (votes.empty()) {
    throw Error(ErrorKind::kNoVotes, "task " + std::to_string(task) + " has no voting-pool answers");
  }
  // Only zero-weight (q_hat = 1/2) answers left: the weighted sum is exactly 0.
  if (!informative) return majority_vote(std::vector<int>{1, -1}, seed).label;
  return weighted_majority_vote(votes, weights, seed).label;
}

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kMajority: return "mv";
    case Algorithm::kOracleWmv: return "oracle_wmv";
    case Algorithm::kPrior: return "prior";
    case Algorithm::kAlg1: return "alg1";
    case Algorithm::kAlg2: return "alg2";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kMajority, Algorithm::kOracleWmv, Algorithm::kPrior,
                      Algorithm::kAlg1, Algorithm::kAlg2}) {
    if (name == to_string(a)) return a;
  }
  throw Error(ErrorKind::kParse, "unknown algorithm '" + name + "'");
}

const char* to_string(StageOneMethod method) {
  return method == StageOneMethod::kThreshold ? "threshold" : "sdp";
}

StageOneMethod parse_stage_one_method(const std::string& name) {
  if (name == "threshold") return StageOneMethod::kThreshold;
  if (name == "sdp") return StageOneMethod::kSdp;
  throw Error(ErrorKind::kParse, "unknown clustering method '" + name + "'");
}

Seed tie_seed(Seed seed, int task) {
  return derive(derive(seed, "tiebreak"), static_cast<std::uint64_t>(task));
}

namespace {

bool uses_clustering(Algorithm a) {
  return a == Algorithm::kPrior || a == Algorithm::kAlg1 || a == Algorithm::kAlg2;
}

}  // namespace

namespace {

/// Stage-1 data and clusterings shared by every algorithm of one trial.
class StageOne {
 public:
  StageOne(const World& world, const ModelParams& params, const PipelineConfig& config, Seed seed)
      : world_(world), params_(params), config_(config), seed_(seed) {
    const int m = world.m();
    std::vector<int> all_tasks(static_cast<std::size_t>(m));
    std::iota(all_tasks.begin(), all_tasks.end(), 0);
    tasks_ = Rng(derive(seed, "stage1-tasks")).sample(all_tasks, static_cast<std::size_t>(config.r));
    std::sort(tasks_.begin(), tasks_.end());
    std::set_difference(all_tasks.begin(), all_tasks.end(), tasks_.begin(), tasks_.end(),
                        std::back_inserter(remaining_));
  }

  const std::vector<int>& tasks() const { return tasks_; }
  const std::vector<int>& remaining() const { return remaining_; }

  const StageOneBlock& block() {
    if (!block_) {
      const AnswerMatrix answers =
          sample_answers(world_, params_, assign_all(world_.n(), tasks_), derive(seed_, "answers"));
      block_ = make_stage_one_block(answers, tasks_);
    }
    return *block_;
  }

  const Clustering& threshold() {
    if (!threshold_) {
      const double zeta = config_.zeta.value_or(
          0.5 * (same_type_agreement(params_) + cross_type_agreement(params_)));
      threshold_ = cluster_sequential(block(), zeta);
    }
    return *threshold_;
  }

  const SdpClusterResult& sdp() {
    if (!sdp_) sdp_ = cluster_workers_sdp(block(), params_.d(), derive(seed_, "clustering"), config_.sdp);
    return *sdp_;
  }

 private:
  const World& world_;
  const ModelParams& params_;
  const PipelineConfig& config_;
  Seed seed_;
  std::vector<int> tasks_;
  std::vector<int> remaining_;
  std::optional<StageOneBlock> block_;
  std::optional<Clustering> threshold_;
  std::optional<SdpClusterResult> sdp_;
};

ExperimentResult run_one(const World& world, const ModelParams& params, Algorithm algorithm,
                         const PipelineConfig& config, Seed seed, StageOne& stage_one) {
  const int m = world.m();
  const int n = world.n();
  const int d = params.d();
  if (uses_clustering(algorithm) && config.r < 1) {
    throw Error(ErrorKind::kRange, "clustering algorithms need at least one stage-one task");
  }
  const std::vector<int>& stage1 = stage_one.tasks();
  const std::vector<int>& stage2 = stage_one.remaining();

  ExperimentResult result;
  result.algorithm = algorithm;

  Clustering clustering;
  if (uses_clustering(algorithm)) {
    if (algorithm == Algorithm::kAlg2 || config.clustering == StageOneMethod::kSdp) {
      const SdpClusterResult& sdp = stage_one.sdp();
      clustering = sdp.clustering;
      result.densities = sdp.estimates;
    } else {
      clustering = stage_one.threshold();
    }
    result.clusters = static_cast<int>(clustering.num_clusters());
    result.clustering_ok = same_partition(clustering.assignments(), world.worker_types);
  }

  AssignmentPlan plan = assign_all(n, stage1);
  const Seed assign_seed = derive(seed, "stage2-assign");
  const AssignmentPlan stage2_plan =
      uses_clustering(algorithm) ? assign_per_cluster(clustering, stage2, config.l, assign_seed)
                                 : assign_uniform(n, stage2, std::min(n, config.l * d), assign_seed);
  std::size_t stage2_queries = 0;
  for (const auto& entry : stage2_plan) stage2_queries += entry.workers.size();
  plan.insert(plan.end(), stage2_plan.begin(), stage2_plan.end());
  const AnswerMatrix answers = sample_answers(world, params, plan, derive(seed, "answers"));

  result.queries_per_task =
      (static_cast<double>(n) * config.r + static_cast<double>(stage2_queries)) / m;
  result.stage2_queries_per_task =
      stage2.empty() ? 0.0 : static_cast<double>(stage2_queries) / static_cast<double>(stage2.size());

  std::optional<WorkerSplit> split;
  if (algorithm == Algorithm::kAlg2) {
    split = split_workers(clustering, config.beta, derive(seed, "split"));
    result.estimates = estimate_pq(answers, clustering, *split, stage2);
  }

  result.predictions.resize(static_cast<std::size_t>(m));
  int errors = 0;
  for (int i = 0; i < m; ++i) {
    const Seed ts = tie_seed(seed, i);
    int label = 0;
    switch (algorithm) {
      case Algorithm::kMajority: {
        std::vector<int> votes;
        for (const Answer& a : answers.task(i)) votes.push_back(a.value);
        label = majority_vote(votes, ts).label;
        break;
      }
      case Algorithm::kOracleWmv: {
        std::vector<int> votes;
        std::vector<bool> matched;
        for (const Answer& a : answers.task(i)) {
          votes.push_back(a.value);
          matched.push_back(world.worker_types[static_cast<std::size_t>(a.worker)] ==
                            world.task_types[static_cast<std::size_t>(i)]);
        }
        const std::vector<double> weights = oracle_weights(params, matched);
        const bool informative =
            std::any_of(weights.begin(), weights.end(), [](double w) { return w != 0.0; });
        label = informative ? weighted_majority_vote(votes, weights, ts).label
                            : majority_vote(std::vector<int>{1, -1}, ts).label;
        break;
      }
      case Algorithm::kPrior:
        label = infer_prior_alg(answers, clustering, i, ts);
        break;
      case Algorithm::kAlg1:
        label = infer_alg1(answers, clustering, i, params, ts);
        break;
      case Algorithm::kAlg2:
        try {
          label = infer_alg2(answers, clustering, *split, *result.estimates, i, ts);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kNoVotes) throw;
          // An empty weighted sum is zero; settle it like any other tie.
          label = majority_vote(std::vector<int>{1, -1}, ts).label;
          ++result.no_vote_tasks;
        }
        break;
    }
    result.predictions[static_cast<std::size_t>(i)] = label;
    errors += label != world.labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  result.error_fraction = static_cast<double>(errors) / m;
  return result;
}

void check_config(const World& world, const PipelineConfig& config) {
  if (config.r < 0 || config.r > world.m()) {
    throw Error(ErrorKind::kRange, "stage-one task count outside [0, m]");
  }
  if (config.l < 0) throw Error(ErrorKind::kRange, "negative per-cluster budget");
}

}  // namespace

ExperimentResult run_pipeline(const World& world, const ModelParams& params, Algorithm algorithm,
                              const PipelineConfig& config, Seed seed) {
  check_config(world, config);
  StageOne stage_one(world, params, config, seed);
  return run_one(world, params, algorithm, config, seed, stage_one);
}

PipelineBatch run_pipelines(const World& world, const ModelParams& params,
                            std::span<const Algorithm> algorithms, const PipelineConfig& config,
                            Seed seed) {
  check_config(world, config);
  StageOne stage_one(world, params, config, seed);
  PipelineBatch batch;
  batch.results.resize(algorithms.size());
  batch.errors.resize(algorithms.size());
  for (std::size_t k = 0; k < algorithms.size(); ++k) {
    try {
      batch.results[k] = run_one(world, params, algorithms[k], config, seed, stage_one);
    } catch (const std::exception& e) {
      batch.errors[k] = e.what();
    }
  }
  return batch;
}

}  // namespace typecrowd
