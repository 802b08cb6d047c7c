#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "typecrowd/acceptance.hpp"
#include "typecrowd/budgets.hpp"
#include "typecrowd/cluster_sdp.hpp"
#include "typecrowd/cluster_threshold.hpp"
#include "typecrowd/error.hpp"
#include "typecrowd/harness.hpp"

namespace tc = typecrowd;

namespace {

constexpr const char* kOutputEnv = "TYPECROWD_OUTPUT_DIR";

struct ModelFlags {
  int d = 3;
  double p = 0.9;
  double q = 0.6;

  void add(CLI::App* app) {
    app->add_option("--d", d, "number of types")->capture_default_str();
    app->add_option("--p", p, "fidelity on matched types")->capture_default_str();
    app->add_option("--q", q, "fidelity on unmatched types")->capture_default_str();
  }
  tc::ModelParams params() const { return tc::ModelParams(d, p, q); }
};

void add_config(CLI::App* app) {
  app->add_option("--config", "flat key=value file; keys mirror flag names, flags win");
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Expands `--config FILE` into flag tokens placed right after the subcommand, so
// anything given explicitly on the command line wins.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k) + 2);
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  if (path.empty()) return args;
  const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind('-', 0) != 0; });
  if (sub == args.end()) return args;
  std::vector<std::string> injected;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    const std::string flag = "--" + item.name;
    if (given(args, flag) || item.inputs.empty()) continue;
    if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "false")) {
      if (item.inputs[0] == "true") injected.push_back(flag);
      continue;
    }
    injected.push_back(flag);
    injected.push_back(CLI::detail::join(item.inputs, ","));
  }
  args.insert(sub + 1, injected.begin(), injected.end());
  return args;
}

std::string default_output_dir() {
  const char* env = std::getenv(kOutputEnv);
  return env && *env ? env : ".";
}

int run_bounds(const ModelFlags& model, double alpha, long n) {
  const tc::ModelParams params = model.params();
  const tc::BudgetReport b = tc::budget_report(params, alpha);
  const tc::StageOneRecommendation rec = tc::stage1_recommendation(params, alpha, n);
  const tc::ErrorBounds e = tc::theoretical_error_bounds(params, static_cast<double>(rec.r),
                                                         static_cast<double>(rec.l), static_cast<double>(n));
  const auto row = [](const char* name, double v) {
    std::cout << "  " << std::left << std::setw(22) << name << std::right << std::setw(14)
              << std::setprecision(6) << std::fixed << v << '\n';
  };
  std::cout << "d=" << params.d() << " p=" << params.p() << " q=" << params.q() << " alpha=" << alpha
            << " n=" << n << "\n\nseparations\n";
  row("gamma_oracle", b.gamma_oracle);
  row("gamma_mv", b.gamma_mv);
  row("gamma_u", b.gamma_u);
  row("gamma_m", b.gamma_m);
  std::cout << "queries per task\n";
  row("L_oracle", b.l_oracle);
  row("L_mv", b.l_mv);
  row("L_type", b.l_type);
  row("L_alg1", b.l_alg1);
  std::cout << "stage 1 (threshold)\n";
  row("zeta", rec.zeta);
  row("r", static_cast<double>(rec.r));
  row("l", static_cast<double>(rec.l));
  row("n_min", static_cast<double>(rec.n_min));
  row("baseline_n_min", tc::baseline_n_min(params, alpha));
  row("sdp_r (c1=1)", tc::sdp_task_count(params, n));
  std::cout << "failure bounds at (r, l, n)\n";
  row("clustering", e.clustering);
  row("small_type", e.small_type);
  row("type_mismatch", e.type_mismatch);

  std::cout << std::defaultfloat << std::setprecision(10) << "\n[bounds]\n"
            << "gamma_oracle=" << b.gamma_oracle << "\ngamma_mv=" << b.gamma_mv << "\ngamma_u=" << b.gamma_u
            << "\ngamma_m=" << b.gamma_m << "\nL_oracle=" << b.l_oracle << "\nL_mv=" << b.l_mv
            << "\nL_type=" << b.l_type << "\nL_alg1=" << b.l_alg1 << "\nzeta=" << rec.zeta << "\nr=" << rec.r
            << "\nl=" << rec.l << "\nn_min=" << rec.n_min << "\nsdp_r=" << tc::sdp_task_count(params, n)
            << "\nbound_clustering=" << e.clustering << "\nbound_small_type=" << e.small_type
            << "\nbound_type_mismatch=" << e.type_mismatch << '\n';
  return 0;
}

struct ClusterFlags {
  ModelFlags model;
  int n = 60;
  int r = 1000;
  std::string method = "threshold";
  std::optional<double> zeta;
  std::uint64_t seed = 0;
  std::string answers_path;
  std::string world_path;
};

int run_cluster(const ClusterFlags& f) {
  const tc::StageOneMethod method = tc::parse_stage_one_method(f.method);
  std::optional<tc::ModelParams> params;
  tc::World world;
  std::optional<tc::AnswerMatrix> answers;
  if (!f.answers_path.empty()) {
    std::ifstream in(f.answers_path);
    if (!in) throw tc::Error(tc::ErrorKind::kIo, "cannot open " + f.answers_path);
    auto file = tc::read_answers(in);
    params = file.params;
    answers = std::move(file.answers);
    if (!f.world_path.empty()) {
      std::ifstream win(f.world_path);
      if (!win) throw tc::Error(tc::ErrorKind::kIo, "cannot open " + f.world_path);
      world = tc::read_world(win).world;
    }
  } else {
    params = f.model.params();
    world = tc::sample_world(*params, f.r, f.n, tc::derive(tc::Seed{f.seed}, "world"));
    std::vector<int> all(static_cast<std::size_t>(f.r));
    std::iota(all.begin(), all.end(), 0);
    answers = tc::sample_answers(world, *params, tc::assign_all(f.n, all), tc::derive(tc::Seed{f.seed}, "answers"));
  }

  // Stage 1 uses every task answered by all workers.
  std::vector<int> tasks;
  for (int i = 0; i < answers->m(); ++i) {
    if (static_cast<int>(answers->task(i).size()) == answers->n()) tasks.push_back(i);
  }
  const tc::StageOneBlock block = tc::make_stage_one_block(*answers, tasks);
  tc::Clustering clustering;
  std::optional<tc::EdgeDensityEstimates> densities;
  if (method == tc::StageOneMethod::kThreshold) {
    const double zeta = f.zeta.value_or(tc::stage1_recommendation(*params, 0.1, std::max(2, block.n())).zeta);
    std::cout << "zeta=" << zeta << '\n';
    clustering = tc::cluster_sequential(block, zeta);
  } else {
    const auto result = tc::cluster_workers_sdp(block, params->d(), tc::derive(tc::Seed{f.seed}, "kmedoids"));
    clustering = result.clustering;
    densities = result.estimates;
    std::cout << "sdp_iterations=" << result.iterations << "\nsdp_converged=" << result.converged << '\n';
  }
  std::cout << "method=" << tc::to_string(method) << "\nr=" << block.r() << "\nn=" << block.n()
            << "\nclusters=" << clustering.num_clusters() << '\n';
  if (densities) {
    const auto window = tc::tuning_window(*params, block.r());
    std::cout << "lambda1=" << densities->lambda1 << "\nlambda2=" << densities->lambda2
              << "\nlambda_tune=" << densities->lambda_tune << "\nlambda_window=" << window.first << ','
              << window.second << '\n';
  }
  if (world.n() == block.n()) {
    const auto truth = tc::type_partition(world).assignments();
    std::cout << "ari=" << tc::adjusted_rand_index(clustering.assignments(), truth)
              << "\nexact=" << tc::same_partition(clustering.assignments(), truth) << '\n';
  }
  std::cout << "assignments=";
  for (std::size_t j = 0; j < clustering.num_workers(); ++j) {
    std::cout << (j ? " " : "") << clustering.cluster_of(static_cast<int>(j)) + 1;
  }
  std::cout << '\n';
  return 0;
}

struct SimulateFlags {
  ModelFlags model;
  int m = 2000;
  int n = 60;
  int k = 5;
  std::uint64_t seed = 0;
  std::string answers_path = "answers.txt";
  std::string world_path = "world.txt";
};

int run_simulate(const SimulateFlags& f) {
  const tc::ModelParams params = f.model.params();
  const tc::Seed seed{f.seed};
  const tc::World world = tc::sample_world(params, f.m, f.n, tc::derive(seed, "world"));
  std::vector<int> all(static_cast<std::size_t>(f.m));
  std::iota(all.begin(), all.end(), 0);
  const auto plan = f.k >= f.n ? tc::assign_all(f.n, all) : tc::assign_uniform(f.n, all, f.k, tc::derive(seed, "assign"));
  const auto answers = tc::sample_answers(world, params, plan, tc::derive(seed, "answers"));
  std::ofstream a(f.answers_path), w(f.world_path);
  if (!a || !w) throw tc::Error(tc::ErrorKind::kIo, "cannot write output files");
  tc::write_answers(a, answers, params);
  tc::write_world(w, world, params);
  std::cout << "wrote " << answers.num_answers() << " answers to " << f.answers_path << " and truth to "
            << f.world_path << '\n';
  return 0;
}

struct SweepFlags {
  tc::ExperimentConfig config;
  ModelFlags model;
  std::vector<std::string> algorithms{"mv", "oracle_wmv", "prior", "alg1", "alg2"};
  std::string clustering = "threshold";
  std::uint64_t seed = 0;
  std::string output;
};

int run_sweep_command(SweepFlags f) {
  tc::ExperimentConfig& c = f.config;
  c.d = f.model.d;
  c.p = f.model.p;
  c.q = f.model.q;
  c.seed = tc::Seed{f.seed};
  c.clustering = tc::parse_stage_one_method(f.clustering);
  c.algorithms.clear();
  for (const auto& name : f.algorithms) c.algorithms.push_back(tc::parse_algorithm(name));
  c.validate();

  std::filesystem::path path = f.output.empty()
                                   ? std::filesystem::path(default_output_dir()) / ("sweep_" + std::to_string(f.seed) + ".csv")
                                   : std::filesystem::path(f.output);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  c.output = path.string();

  const tc::ResultTable table = tc::run_sweep(c);
  tc::emit_csv(table, c.output);
  std::ofstream meta(c.output + ".meta");
  if (!meta) throw tc::Error(tc::ErrorKind::kIo, "cannot write " + c.output + ".meta");
  tc::write_metadata(meta, c);
  tc::print_summary(std::cout, table);
  std::cout << "csv: " << c.output << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Type-aware crowdsourced label inference: budgets, clustering and Monte Carlo sweeps"};
  app.require_subcommand(1);

  ModelFlags bounds_model;
  double alpha = 0.1;
  long bounds_n = 60;
  auto* bounds = app.add_subcommand("bounds", "closed-form budgets and Stage-1 settings");
  add_config(bounds);
  bounds_model.add(bounds);
  bounds->add_option("--alpha", alpha, "target error fraction")->capture_default_str();
  bounds->add_option("--n", bounds_n, "worker count for the Stage-1 settings")->capture_default_str();

  ClusterFlags cf;
  auto* cluster = app.add_subcommand("cluster", "run Stage 1 only and compare with the true types");
  add_config(cluster);
  cf.model.add(cluster);
  cluster->add_option("--n", cf.n, "workers")->capture_default_str();
  cluster->add_option("--r", cf.r, "shared Stage-1 tasks")->capture_default_str();
  cluster->add_option("--method", cf.method, "threshold or sdp")
      ->check(CLI::IsMember({"threshold", "sdp"}))
      ->capture_default_str();
  cluster->add_option("--zeta", cf.zeta, "agreement threshold (default: midpoint)");
  cluster->add_option("--seed", cf.seed, "base seed")->capture_default_str();
  cluster->add_option("--answers", cf.answers_path, "read answers from a file instead of simulating");
  cluster->add_option("--world", cf.world_path, "truth file matching --answers");

  SimulateFlags sf;
  auto* simulate = app.add_subcommand("simulate", "write a simulated answer file and its truth");
  add_config(simulate);
  sf.model.add(simulate);
  simulate->add_option("--m", sf.m, "tasks")->capture_default_str();
  simulate->add_option("--n", sf.n, "workers")->capture_default_str();
  simulate->add_option("--k", sf.k, "workers per task (k >= n assigns everyone)")->capture_default_str();
  simulate->add_option("--seed", sf.seed, "base seed")->capture_default_str();
  simulate->add_option("--answers", sf.answers_path, "answer file")->capture_default_str();
  simulate->add_option("--world", sf.world_path, "truth file")->capture_default_str();

  SweepFlags wf;
  wf.model.q = 0.7;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over algorithms, budgets and trials");
  add_config(sweep);
  wf.model.add(sweep);
  auto& c = wf.config;
  sweep->add_option("--m", c.m, "tasks")->capture_default_str();
  sweep->add_option("--n", c.n, "workers")->capture_default_str();
  sweep->add_option("--r", c.r, "Stage-1 tasks answered by every worker")->capture_default_str();
  sweep->add_option("--budgets", c.budgets, "per-cluster Stage-2 workers l")->delimiter(',')->capture_default_str();
  sweep->add_option("--algorithms", wf.algorithms, "subset of mv,oracle_wmv,prior,alg1,alg2")
      ->delimiter(',')
      ->check(CLI::IsMember({"mv", "oracle_wmv", "prior", "alg1", "alg2"}))
      ->capture_default_str();
  sweep->add_option("--trials", c.trials, "trials per budget")->capture_default_str();
  sweep->add_option("--alpha", c.alpha_c, "target error fraction (metadata flags)")->capture_default_str();
  sweep->add_option("--beta", c.beta, "estimation share of each cluster")->capture_default_str();
  sweep->add_option("--clustering", wf.clustering, "Stage 1 for prior and alg1: threshold or sdp")
      ->check(CLI::IsMember({"threshold", "sdp"}))
      ->capture_default_str();
  sweep->add_option("--zeta", c.zeta, "agreement threshold (default: midpoint)");
  sweep->add_option("--sdp-tolerance", c.sdp.tolerance, "ADMM residual tolerance")->capture_default_str();
  sweep->add_option("--sdp-iterations", c.sdp.max_iterations, "ADMM iteration cap")->capture_default_str();
  sweep->add_option("--threads", c.threads, "worker threads, 0 for all cores")->capture_default_str();
  sweep->add_option("--seed", wf.seed, "base seed")->required();
  sweep->add_option("--output", wf.output,
                    std::string("CSV path (default: $") + kOutputEnv + "/sweep_<seed>.csv, or the current directory)");

  tc::AcceptanceOptions vo;
  std::uint64_t validate_seed = vo.seed.value;
  auto* validate = app.add_subcommand("validate", "run the acceptance suite");
  add_config(validate);
  validate->add_flag("--quick", vo.quick, "reduced trial counts");
  validate->add_option("--seed", validate_seed, "base seed")->capture_default_str();
  validate->add_option("--only", vo.only, "criterion ids to run")->delimiter(',');

  try {
    std::vector<std::string> args = expand_config(std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*bounds) return run_bounds(bounds_model, alpha, bounds_n);
    if (*cluster) return run_cluster(cf);
    if (*simulate) return run_simulate(sf);
    if (*sweep) return run_sweep_command(wf);
    if (*validate) {
      vo.seed = tc::Seed{validate_seed};
      int failed = 0;
      tc::run_acceptance(vo, [&](const tc::CriterionResult& r) {
        std::cout << tc::format_result(r) << std::endl;
        failed += !r.pass;
      });
      std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
      return failed ? 1 : 0;
    }
  } catch (const tc::Error& e) {
    std::cerr << "error (" << tc::to_string(e.kind()) << "): " << e.what() << '\n';
    return 1;
  }
  return 0;
}
