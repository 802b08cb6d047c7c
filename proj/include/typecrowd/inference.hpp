#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "typecrowd/cluster_sdp.hpp"
#include "typecrowd/model.hpp"
#include "typecrowd/partition.hpp"
#include "typecrowd/rng.hpp"
#include "typecrowd/voting.hpp"

namespace typecrowd {

/// Per-cluster answer statistics for one task.
struct TallyVector {
  std::vector<int> signed_sum;  // T_z = sum of m_ij over N_i in V_z
  std::vector<int> positives;   // S_iz = number of +1 answers over N_i in V_z
  std::vector<int> counts;      // |N_i in V_z|
};

TallyVector tally(const AnswerMatrix& answers, const Clustering& clustering, int task);

/// Cluster with the largest |T_z| among clusters that answered the task; ties
/// go to the lowest cluster id.
int type_match(const AnswerMatrix& answers, const Clustering& clustering, int task);

/// Majority vote restricted to the matched cluster.
int infer_prior_alg(const AnswerMatrix& answers, const Clustering& clustering, int task, Seed seed);

/// Weighted vote over all answers: 2p-1 on the matched cluster, 2q-1 elsewhere.
int infer_alg1(const AnswerMatrix& answers, const Clustering& clustering, int task,
               const ModelParams& params, Seed seed);

/// Random split of every cluster into an estimation pool (probability beta)
/// and a voting pool.
struct WorkerSplit {
  double beta = 0;
  std::vector<char> estimation_pool;               // per worker: 1 if in W^(1)
  std::vector<std::vector<int>> estimation_parts;  // V_z^(1)
  std::vector<std::vector<int>> voting_parts;      // V_z^(2)

  bool in_estimation_pool(int worker) const {
    return estimation_pool[static_cast<std::size_t>(worker)] != 0;
  }
};

WorkerSplit split_workers(const Clustering& clustering, double beta, Seed seed);

struct ReliabilityEstimates {
  double p_hat = 0.5;
  double q_hat = 0.5;
  double raw_p_hat = 0.5;  // before clamping and ordering
  double raw_q_hat = 0.5;
  bool swapped = false;
  std::vector<int> tasks;  // tasks that contributed
  std::vector<double> per_task_p;
  std::vector<double> per_task_q;
  int skipped = 0;         // tasks with an empty matched or unmatched set
};

/// Plug-in reliability estimates from the estimation pool. For every listed task
/// the matched (M) and unmatched (U) estimation-pool answer sets are formed from
/// the type match over all answers; p_i and q_i are the larger of the +1 and -1
/// fractions in M and U. Tasks with an empty M or U are skipped.
ReliabilityEstimates estimate_pq(const AnswerMatrix& answers, const Clustering& clustering,
                                 const WorkerSplit& split, std::span<const int> tasks);
/// Same, over every task of the matrix.
ReliabilityEstimates estimate_pq(const AnswerMatrix& answers, const Clustering& clustering,
                                 const WorkerSplit& split);

/// Weighted vote over the voting pool with plug-in weights 2p_hat-1 / 2q_hat-1.
int infer_alg2(const AnswerMatrix& answers, const Clustering& clustering, const WorkerSplit& split,
               const ReliabilityEstimates& estimates, int task, Seed seed);

enum class Algorithm { kMajority, kOracleWmv, kPrior, kAlg1, kAlg2 };

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

enum class StageOneMethod { kThreshold, kSdp };

const char* to_string(StageOneMethod method);
StageOneMethod parse_stage_one_method(const std::string& name);

struct PipelineConfig {
  int r = 0;                    // Stage-1 tasks answered by every worker
  int l = 1;                    // Stage-2 workers per cluster (mv/oracle draw l*d at random)
  std::optional<double> zeta;   // threshold; midpoint of agreement rates when unset
  double beta = 0.3;
  StageOneMethod clustering = StageOneMethod::kThreshold;  // for prior and alg1
  SdpSettings sdp;
};

struct ExperimentResult {
  Algorithm algorithm = Algorithm::kMajority;
  std::vector<int> predictions;
  double error_fraction = 0;
  double queries_per_task = 0;         // (n r + sum of Stage-2 |N_i|) / m
  double stage2_queries_per_task = 0;  // sum of Stage-2 |N_i| / (m - r)
  bool clustering_ok = true;           // recovered partition equals the type partition
  int clusters = 0;
  std::optional<ReliabilityEstimates> estimates;
  std::optional<EdgeDensityEstimates> densities;
  int no_vote_tasks = 0;               // alg2 tasks with an empty voting set, settled by coin
};

/// Runs one algorithm end to end on a fixed world. Every algorithm shares the
/// Stage-1 task set and its answers; per-pair answer streams make answers to the
/// same (task, worker) identical across algorithms.
ExperimentResult run_pipeline(const World& world, const ModelParams& params, Algorithm algorithm,
                              const PipelineConfig& config, Seed seed);

/// Runs several algorithms on one world, computing each Stage-1 clustering once.
/// Results equal those of separate run_pipeline calls with the same seed. A
/// failing algorithm leaves its slot empty and its message in `errors`.
struct PipelineBatch {
  std::vector<std::optional<ExperimentResult>> results;
  std::vector<std::string> errors;
};
PipelineBatch run_pipelines(const World& world, const ModelParams& params,
                            std::span<const Algorithm> algorithms, const PipelineConfig& config,
                            Seed seed);

/// Tie-break seed for a task, shared by every voting rule.
Seed tie_seed(Seed seed, int task);

}  // namespace typecrowd
