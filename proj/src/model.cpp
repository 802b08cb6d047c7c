#include "typecrowd/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "typecrowd/error.hpp"

namespace typecrowd {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParams: return "invalid parameters";
    case ErrorKind::kInvalidAssignment: return "invalid assignment";
    case ErrorKind::kInsufficientCluster: return "insufficient cluster";
    case ErrorKind::kIndexOutOfRange: return "index out of range";
    case ErrorKind::kNoVotes: return "no votes";
    case ErrorKind::kShape: return "shape mismatch";
    case ErrorKind::kInvalidWeights: return "invalid weights";
    case ErrorKind::kRange: return "out of range";
    case ErrorKind::kInvalidPair: return "invalid pair";
    case ErrorKind::kInvalidDimension: return "invalid dimension";
    case ErrorKind::kNumericalFailure: return "numerical failure";
    case ErrorKind::kEstimationFailure: return "estimation failure";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kParse: return "parse error";
  }
  return "error";
}

ModelParams::ModelParams(int d, double p, double q) : d_(d), p_(p), q_(q) {
  if (d < 1) throw Error(ErrorKind::kInvalidParams, "d must be at least 1");
  if (!std::isfinite(p) || !std::isfinite(q) || q < 0.5 || !(q < p) || p > 1.0) {
    std::ostringstream msg;
    msg << "need 1/2 <= q < p <= 1, got p=" << p << " q=" << q;
    throw Error(ErrorKind::kInvalidParams, msg.str());
  }
}

double same_type_agreement(const ModelParams& params) {
  const double p = params.p();
  const double q = params.q();
  const double d = params.d();
  return (p * p + (1 - p) * (1 - p)) / d + (d - 1) * (q * q + (1 - q) * (1 - q)) / d;
}

double cross_type_agreement(const ModelParams& params) {
  const double p = params.p();
  const double q = params.q();
  const double d = params.d();
  return 2 * (p * q + (1 - p) * (1 - q)) / d + (d - 2) * (q * q + (1 - q) * (1 - q)) / d;
}

DensityConstants density_constants(const ModelParams& params) {
  const double bp = 2 * params.p() - 1;
  const double bq = 2 * params.q() - 1;
  const double d = params.d();
  return {(bp * bp + (d - 1) * bq * bq) / d, (2 * bp * bq + (d - 2) * bq * bq) / d};
}

World sample_world(const ModelParams& params, int m, int n, Seed seed) {
  if (m < 1 || n < 1) throw Error(ErrorKind::kInvalidParams, "m and n must be positive");
  Rng rng(derive(seed, "world"));
  const auto d = static_cast<std::uint64_t>(params.d());
  World world;
  world.labels.resize(static_cast<std::size_t>(m));
  world.task_types.resize(static_cast<std::size_t>(m));
  world.worker_types.resize(static_cast<std::size_t>(n));
  for (auto& t : world.task_types) t = static_cast<int>(rng.below(d));
  for (auto& w : world.worker_types) w = static_cast<int>(rng.below(d));
  for (auto& a : world.labels) a = rng.sign();
  return world;
}

namespace {

std::vector<int> iota_vector(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

AssignmentPlan assign_uniform(int n, std::span<const int> tasks, int k, Seed seed) {
  if (k < 0 || k > n) {
    throw Error(ErrorKind::kInvalidAssignment,
                "cannot assign " + std::to_string(k) + " of " + std::to_string(n) + " workers");
  }
  const Seed stream = derive(seed, "assign-uniform");
  const std::vector<int> all = iota_vector(n);
  AssignmentPlan plan;
  plan.reserve(tasks.size());
  for (int task : tasks) {
    Rng rng(derive(stream, static_cast<std::uint64_t>(task)));
    plan.push_back({task, rng.sample(all, static_cast<std::size_t>(k))});
  }
  return plan;
}

AssignmentPlan assign_per_cluster(const Clustering& clustering, std::span<const int> tasks,
                                  int l, Seed seed) {
  if (l < 0) throw Error(ErrorKind::kInvalidAssignment, "negative per-cluster count");
  for (const auto& members : clustering.clusters()) {
    if (static_cast<int>(members.size()) < l) {
      throw Error(ErrorKind::kInsufficientCluster,
                  "cluster of size " + std::to_string(members.size()) + " cannot supply " +
                      std::to_string(l) + " workers");
    }
  }
  const Seed stream = derive(seed, "assign-cluster");
  AssignmentPlan plan;
  plan.reserve(tasks.size());
  for (int task : tasks) {
    Rng rng(derive(stream, static_cast<std::uint64_t>(task)));
    TaskAssignment entry{task, {}};
    entry.workers.reserve(static_cast<std::size_t>(l) * clustering.num_clusters());
    for (const auto& members : clustering.clusters()) {
      auto picked = rng.sample(members, static_cast<std::size_t>(l));
      entry.workers.insert(entry.workers.end(), picked.begin(), picked.end());
    }
    plan.push_back(std::move(entry));
  }
  return plan;
}

AssignmentPlan assign_all(int n, std::span<const int> tasks) {
  const std::vector<int> all = iota_vector(n);
  AssignmentPlan plan;
  plan.reserve(tasks.size());
  for (int task : tasks) plan.push_back({task, all});
  return plan;
}

AnswerMatrix::AnswerMatrix(int m, int n) : m_(m), n_(n) {
  if (m < 0 || n < 0) throw Error(ErrorKind::kInvalidDimension, "negative matrix size");
  rows_.resize(static_cast<std::size_t>(m));
}

void AnswerMatrix::set(int task, int worker, int value) {
  if (task < 0 || task >= m_ || worker < 0 || worker >= n_) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "entry (" + std::to_string(task) + ", " + std::to_string(worker) + ")");
  }
  if (value != 1 && value != -1) throw Error(ErrorKind::kRange, "answers must be -1 or +1");
  auto& row = rows_[static_cast<std::size_t>(task)];
  auto it = std::lower_bound(row.begin(), row.end(), worker,
                             [](const Answer& a, int w) { return a.worker < w; });
  if (it != row.end() && it->worker == worker) {
    it->value = value;
  } else {
    row.insert(it, Answer{worker, value});
  }
}

int AnswerMatrix::get(int task, int worker) const {
  if (task < 0 || task >= m_ || worker < 0 || worker >= n_) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "entry (" + std::to_string(task) + ", " + std::to_string(worker) + ")");
  }
  const auto& row = rows_[static_cast<std::size_t>(task)];
  auto it = std::lower_bound(row.begin(), row.end(), worker,
                             [](const Answer& a, int w) { return a.worker < w; });
  return (it != row.end() && it->worker == worker) ? it->value : 0;
}

std::size_t AnswerMatrix::num_answers() const {
  std::size_t total = 0;
  for (const auto& row : rows_) total += row.size();
  return total;
}

AnswerMatrix sample_answers(const World& world, const ModelParams& params,
                            const AssignmentPlan& plan, Seed seed) {
  AnswerMatrix answers(world.m(), world.n());
  const Seed stream = derive(seed, "answers");
  std::vector<char> seen(static_cast<std::size_t>(world.n()), 0);
  for (const auto& entry : plan) {
    if (entry.task < 0 || entry.task >= world.m()) {
      throw Error(ErrorKind::kIndexOutOfRange, "task " + std::to_string(entry.task));
    }
    const auto i = static_cast<std::size_t>(entry.task);
    if (!answers.task(entry.task).empty()) {
      throw Error(ErrorKind::kInvalidAssignment,
                  "task " + std::to_string(entry.task) + " listed twice in plan");
    }
    const Seed task_stream = derive(stream, static_cast<std::uint64_t>(entry.task));
    for (int j : entry.workers) {
      if (j < 0 || j >= world.n()) throw Error(ErrorKind::kIndexOutOfRange, "worker " + std::to_string(j));
      if (seen[static_cast<std::size_t>(j)]) {
        throw Error(ErrorKind::kInvalidAssignment, "duplicate worker " + std::to_string(j));
      }
      seen[static_cast<std::size_t>(j)] = 1;
      const bool matched = world.task_types[i] == world.worker_types[static_cast<std::size_t>(j)];
      // One stream per (task, worker) pair: an answer does not depend on who else was asked.
      Rng rng(derive(task_stream, static_cast<std::uint64_t>(j)));
      const bool correct = rng.bernoulli(params.fidelity(matched));
      answers.set(entry.task, j, correct ? world.labels[i] : -world.labels[i]);
    }
    for (int j : entry.workers) seen[static_cast<std::size_t>(j)] = 0;
  }
  return answers;
}

namespace {

void write_header(std::ostream& out, int m, int n, const ModelParams& params) {
  out << m << ' ' << n << ' ' << params.d() << ' ' << std::setprecision(17) << params.p() << ' '
      << params.q() << '\n';
}

struct Header {
  int m;
  int n;
  int d;
  double p;
  double q;
};

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kParse, "missing header");
  std::istringstream fields(line);
  Header h{};
  if (!(fields >> h.m >> h.n >> h.d >> h.p >> h.q)) {
    throw Error(ErrorKind::kParse, "malformed header '" + line + "'");
  }
  return h;
}

}  // namespace

void write_answers(std::ostream& out, const AnswerMatrix& answers, const ModelParams& params) {
  write_header(out, answers.m(), answers.n(), params);
  for (int i = 0; i < answers.m(); ++i) {
    for (const Answer& a : answers.task(i)) out << i + 1 << ' ' << a.worker + 1 << ' ' << a.value << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing answers");
}

AnswerFile read_answers(std::istream& in) {
  const Header h = read_header(in);
  AnswerFile file{ModelParams(h.d, h.p, h.q), AnswerMatrix(h.m, h.n)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    int i = 0;
    int j = 0;
    int v = 0;
    if (!(fields >> i >> j >> v)) throw Error(ErrorKind::kParse, "malformed triple '" + line + "'");
    file.answers.set(i - 1, j - 1, v);
  }
  return file;
}

void write_world(std::ostream& out, const World& world, const ModelParams& params) {
  write_header(out, world.m(), world.n(), params);
  for (int i = 0; i < world.m(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << "task " << i + 1 << ' ' << world.labels[k] << ' ' << world.task_types[k] + 1 << '\n';
  }
  for (int j = 0; j < world.n(); ++j) {
    out << "worker " << j + 1 << ' ' << world.worker_types[static_cast<std::size_t>(j)] + 1 << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing world");
}

WorldFile read_world(std::istream& in) {
  const Header h = read_header(in);
  WorldFile file{ModelParams(h.d, h.p, h.q), World{}};
  World& w = file.world;
  w.labels.assign(static_cast<std::size_t>(h.m), 0);
  w.task_types.assign(static_cast<std::size_t>(h.m), -1);
  w.worker_types.assign(static_cast<std::size_t>(h.n), -1);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    int index = 0;
    fields >> kind >> index;
    const bool is_task = kind == "task";
    const int limit = is_task ? h.m : h.n;
    if (!fields || (!is_task && kind != "worker") || index < 1 || index > limit) {
      throw Error(ErrorKind::kParse, "malformed line '" + line + "'");
    }
    const auto k = static_cast<std::size_t>(index - 1);
    int type = 0;
    if (is_task) {
      int label = 0;
      fields >> label >> type;
      if (!fields || (label != 1 && label != -1)) throw Error(ErrorKind::kParse, "bad task line '" + line + "'");
      w.labels[k] = label;
      w.task_types[k] = type - 1;
    } else {
      fields >> type;
      w.worker_types[k] = type - 1;
    }
    if (!fields || type < 1 || type > h.d) throw Error(ErrorKind::kParse, "bad type in '" + line + "'");
  }
  const auto missing = [](const std::vector<int>& v) {
    return std::find(v.begin(), v.end(), -1) != v.end();
  };
  if (missing(w.task_types) || missing(w.worker_types)) {
    throw Error(ErrorKind::kParse, "world file is missing task or worker lines");
  }
  return file;
}

}  // namespace typecrowd
