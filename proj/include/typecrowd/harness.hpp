#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "typecrowd/inference.hpp"
#include "typecrowd/model.hpp"

namespace typecrowd {

struct ExperimentConfig {
  int d = 3;
  double p = 0.9;
  double q = 0.7;
  int m = 2000;
  int n = 60;
  int r = 1000;                       // Stage-1 tasks
  std::vector<int> budgets{4, 6, 8};  // per-cluster l values
  std::vector<Algorithm> algorithms{Algorithm::kMajority, Algorithm::kOracleWmv, Algorithm::kPrior,
                                    Algorithm::kAlg1, Algorithm::kAlg2};
  int trials = 30;
  double alpha_c = 0.1;
  double beta = 0.3;
  StageOneMethod clustering = StageOneMethod::kThreshold;
  std::optional<double> zeta;
  SdpSettings sdp;
  Seed seed{0};
  int threads = 0;  // 0: hardware concurrency
  std::string output;

  ModelParams params() const { return ModelParams(d, p, q); }
  /// Throws on any invalid field.
  void validate() const;
};

/// One (algorithm, budget, trial) run.
struct TrialRow {
  Algorithm algorithm;
  int budget_index;
  int l;
  int trial;
  Seed seed;
  bool ok;             // false when a stage raised an error
  std::string status;  // "ok" or the error message
  double error_fraction;
  double queries_per_task;
  double stage2_queries_per_task;
  bool clustering_ok;
  std::optional<double> p_hat;
  std::optional<double> q_hat;
  double wall_seconds;
};

struct SummaryRow {
  Algorithm algorithm;
  int l;
  int completed;  // trials without a stage error
  double mean_queries_per_task;
  double mean_error;
  double standard_error;
  double clustering_rate;
};

struct ResultTable {
  std::vector<TrialRow> rows;  // ordered by (algorithm, budget, trial)
  std::vector<SummaryRow> summaries;

  /// Summary for one (algorithm, budget index); throws if absent.
  const SummaryRow& summary(Algorithm algorithm, int l) const;
};

/// Seed of one (budget, trial) world; shared by every algorithm.
Seed trial_seed(Seed base, int budget_index, int trial);

/// Monte Carlo sweep over algorithms x budgets x trials. Each (budget, trial)
/// draws a fresh world from its own derived seed and every algorithm runs on it.
/// Trials run in parallel; the table order does not depend on scheduling.
ResultTable run_sweep(const ExperimentConfig& config);

std::vector<SummaryRow> summarize(const std::vector<TrialRow>& rows,
                                  const std::vector<Algorithm>& algorithms,
                                  const std::vector<int>& budgets);

inline constexpr const char* kCsvHeader =
    "algorithm,budget_queries_per_task,trial,error_fraction,clustering_ok,p_hat,q_hat,seed,"
    "stage2_queries_per_task,status";

void write_csv(std::ostream& out, const std::vector<TrialRow>& rows);
/// Writes the table to `path`; throws an i/o error when the file cannot be written.
void emit_csv(const ResultTable& table, const std::string& path);

/// key=value description of the run, with asymptotic-regime flags.
void write_metadata(std::ostream& out, const ExperimentConfig& config);

void print_summary(std::ostream& out, const ResultTable& table);

}  // namespace typecrowd
