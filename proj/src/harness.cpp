#include "typecrowd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "typecrowd/budgets.hpp"
#include "typecrowd/error.hpp"

namespace typecrowd {

void ExperimentConfig::validate() const {
  (void)params();
  if (m < 1 || n < 1) throw Error(ErrorKind::kInvalidParams, "m and n must be positive");
  if (r < 0 || r > m) throw Error(ErrorKind::kInvalidParams, "r must lie in [0, m]");
  if (trials < 1) throw Error(ErrorKind::kInvalidParams, "trials must be at least 1");
  if (budgets.empty()) throw Error(ErrorKind::kInvalidParams, "budget sweep is empty");
  for (int l : budgets) {
    if (l < 1) throw Error(ErrorKind::kInvalidParams, "budgets must be positive");
  }
  if (algorithms.empty()) throw Error(ErrorKind::kInvalidParams, "no algorithms selected");
  if (!(alpha_c > 0 && alpha_c < 1)) throw Error(ErrorKind::kRange, "alpha_c must lie in (0, 1)");
  if (!(beta > 0 && beta < 1)) throw Error(ErrorKind::kRange, "beta must lie in (0, 1)");
}

const SummaryRow& ResultTable::summary(Algorithm algorithm, int l) const {
  for (const auto& s : summaries) {
    if (s.algorithm == algorithm && s.l == l) return s;
  }
  throw Error(ErrorKind::kIndexOutOfRange, std::string("no summary for ") + to_string(algorithm));
}

Seed trial_seed(Seed base, int budget_index, int trial) {
  return derive(derive(derive(base, "sweep"), static_cast<std::uint64_t>(budget_index)),
                static_cast<std::uint64_t>(trial));
}

ResultTable run_sweep(const ExperimentConfig& config) {
  config.validate();
  const ModelParams params = config.params();
  const auto num_budgets = config.budgets.size();
  const auto num_trials = static_cast<std::size_t>(config.trials);
  const auto num_algs = config.algorithms.size();

  // rows[alg][budget][trial], filled by whichever worker runs the job.
  std::vector<TrialRow> slots(num_algs * num_budgets * num_trials);
  const auto slot = [&](std::size_t a, std::size_t b, std::size_t t) -> TrialRow& {
    return slots[(a * num_budgets + b) * num_trials + t];
  };

  std::atomic<std::size_t> next{0};
  const std::size_t jobs = num_budgets * num_trials;
  const auto work = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t b = job / num_trials;
      const std::size_t t = job % num_trials;
      const Seed seed = trial_seed(config.seed, static_cast<int>(b), static_cast<int>(t));
      PipelineConfig pc;
      pc.r = config.r;
      pc.l = config.budgets[b];
      pc.zeta = config.zeta;
      pc.beta = config.beta;
      pc.clustering = config.clustering;
      pc.sdp = config.sdp;

      const auto start = std::chrono::steady_clock::now();
      const World world = sample_world(params, config.m, config.n, seed);
      const PipelineBatch batch = run_pipelines(world, params, config.algorithms, pc, seed);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() /
          static_cast<double>(num_algs);

      for (std::size_t a = 0; a < num_algs; ++a) {
        TrialRow row{};
        row.algorithm = config.algorithms[a];
        row.budget_index = static_cast<int>(b);
        row.l = config.budgets[b];
        row.trial = static_cast<int>(t);
        row.seed = seed;
        row.wall_seconds = seconds;
        if (const auto& res = batch.results[a]) {
          row.ok = true;
          row.status = "ok";
          row.error_fraction = res->error_fraction;
          row.queries_per_task = res->queries_per_task;
          row.stage2_queries_per_task = res->stage2_queries_per_task;
          row.clustering_ok = res->clustering_ok;
          if (res->estimates) {
            row.p_hat = res->estimates->p_hat;
            row.q_hat = res->estimates->q_hat;
          }
        } else {
          row.ok = false;
          row.status = batch.errors[a];
          row.error_fraction = std::nan("");
          row.queries_per_task = std::nan("");
          row.stage2_queries_per_task = std::nan("");
          row.clustering_ok = false;
        }
        slot(a, b, t) = std::move(row);
      }
    }
  };

  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  ResultTable table;
  table.rows = std::move(slots);
  table.summaries = summarize(table.rows, config.algorithms, config.budgets);
  return table;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRow>& rows,
                                  const std::vector<Algorithm>& algorithms,
                                  const std::vector<int>& budgets) {
  std::vector<SummaryRow> out;
  for (Algorithm a : algorithms) {
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      SummaryRow s{a, budgets[b], 0, 0, 0, 0, 0};
      double sum = 0, sum2 = 0, queries = 0, clustered = 0;
      for (const auto& row : rows) {
        if (row.algorithm != a || row.budget_index != static_cast<int>(b) || !row.ok) continue;
        ++s.completed;
        sum += row.error_fraction;
        sum2 += row.error_fraction * row.error_fraction;
        queries += row.queries_per_task;
        clustered += row.clustering_ok ? 1 : 0;
      }
      if (s.completed > 0) {
        const double k = s.completed;
        s.mean_error = sum / k;
        s.mean_queries_per_task = queries / k;
        s.clustering_rate = clustered / k;
        if (s.completed > 1) {
          const double var = std::max(0.0, (sum2 - k * s.mean_error * s.mean_error) / (k - 1));
          s.standard_error = std::sqrt(var / k);
        }
      } else {
        s.mean_error = s.mean_queries_per_task = std::nan("");
      }
      out.push_back(s);
    }
  }
  return out;
}

namespace {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c == '\n' ? ' ' : c;
  }
  return quoted + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& row : rows) {
    out << to_string(row.algorithm) << ',' << format_number(row.queries_per_task) << ','
        << row.trial << ',' << format_number(row.error_fraction) << ','
        << (row.clustering_ok ? 1 : 0) << ','
        << (row.p_hat ? format_number(*row.p_hat) : "") << ','
        << (row.q_hat ? format_number(*row.q_hat) : "") << ',' << row.seed.value << ','
        << format_number(row.stage2_queries_per_task) << ',' << csv_field(row.status) << '\n';
  }
}

void emit_csv(const ResultTable& table, const std::string& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  write_csv(file, table.rows);
  file.flush();
  if (!file) throw Error(ErrorKind::kIo, "failed writing '" + path + "'");
}

void write_metadata(std::ostream& out, const ExperimentConfig& config) {
  out << "d=" << config.d << "\np=" << config.p << "\nq=" << config.q << "\nm=" << config.m
      << "\nn=" << config.n << "\nr=" << config.r << "\ntrials=" << config.trials
      << "\nbeta=" << config.beta << "\nalpha=" << config.alpha_c
      << "\nclustering=" << to_string(config.clustering) << "\nseed=" << config.seed.value
      << "\nbudgets=";
  for (std::size_t k = 0; k < config.budgets.size(); ++k) out << (k ? " " : "") << config.budgets[k];
  out << "\nalgorithms=";
  for (std::size_t k = 0; k < config.algorithms.size(); ++k) {
    out << (k ? " " : "") << to_string(config.algorithms[k]);
  }
  const ModelParams params = config.params();
  const auto rec = stage1_recommendation(params, config.alpha_c, std::max(2, config.n));
  out << "\nregime_m_ge_n3=" << (satisfies_task_regime(config.m, config.n) ? 1 : 0)
      << "\nregime_r_ge_recommended=" << (config.r >= rec.r ? 1 : 0)
      << "\nregime_n_ge_recommended=" << (config.n >= rec.n_min ? 1 : 0)
      << "\nregime_r_ge_sdp_count=" << (config.r >= sdp_task_count(params, config.n) ? 1 : 0) << '\n';
}

void print_summary(std::ostream& out, const ResultTable& table) {
  out << std::left << std::setw(12) << "algorithm" << std::right << std::setw(6) << "l"
      << std::setw(10) << "queries" << std::setw(12) << "mean_err" << std::setw(12) << "std_err"
      << std::setw(10) << "clust_ok" << std::setw(8) << "runs" << '\n';
  for (const auto& s : table.summaries) {
    out << std::left << std::setw(12) << to_string(s.algorithm) << std::right << std::setw(6) << s.l
        << std::setw(10) << std::fixed << std::setprecision(2) << s.mean_queries_per_task
        << std::setw(12) << std::setprecision(5) << s.mean_error << std::setw(12) << s.standard_error
        << std::setw(10) << std::setprecision(2) << s.clustering_rate << std::setw(8) << s.completed
        << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace typecrowd
