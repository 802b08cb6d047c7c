#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "typecrowd/partition.hpp"
#include "typecrowd/rng.hpp"

namespace typecrowd {

/// Reliability model: d types, fidelity p on matched (task, worker) type
/// pairs and q otherwise, with 1/2 <= q < p <= 1.
class ModelParams {
 public:
  ModelParams(int d, double p, double q);

  int d() const { return d_; }
  double p() const { return p_; }
  double q() const { return q_; }

  double fidelity(bool matched) const { return matched ? p_ : q_; }

 private:
  int d_;
  double p_;
  double q_;
};

/// Probability that two workers of the same type agree on a random task.
double same_type_agreement(const ModelParams& params);
/// Probability that two workers of different types agree on a random task.
double cross_type_agreement(const ModelParams& params);

/// Expected per-task answer product for same-type (within) and
/// different-type (across) worker pairs.
struct DensityConstants {
  double within;  // p_m
  double across;  // p_u
};
DensityConstants density_constants(const ModelParams& params);

/// Ground truth. Types are stored 0-based in [0, d).
struct World {
  std::vector<int> labels;        // a_i in {-1, +1}
  std::vector<int> task_types;    // t_i
  std::vector<int> worker_types;  // w_j

  int m() const { return static_cast<int>(labels.size()); }
  int n() const { return static_cast<int>(worker_types.size()); }
};

World sample_world(const ModelParams& params, int m, int n, Seed seed);

/// Workers assigned to each listed task.
struct TaskAssignment {
  int task;
  std::vector<int> workers;
};
using AssignmentPlan = std::vector<TaskAssignment>;

/// k distinct workers per task, uniform without replacement.
AssignmentPlan assign_uniform(int n, std::span<const int> tasks, int k, Seed seed);

/// l distinct workers from every cluster for each task (l * c in total).
AssignmentPlan assign_per_cluster(const Clustering& clustering, std::span<const int> tasks,
                                  int l, Seed seed);

/// Every listed task assigned to all n workers.
AssignmentPlan assign_all(int n, std::span<const int> tasks);

struct Answer {
  int worker;
  int value;  // -1 or +1
};

/// Sparse m x n answer matrix. Absent entries are unassigned pairs (m_ij = 0).
class AnswerMatrix {
 public:
  AnswerMatrix(int m, int n);

  int m() const { return m_; }
  int n() const { return n_; }

  /// Stores m_ij; v must be -1 or +1. Re-setting an existing pair overwrites it.
  void set(int task, int worker, int value);
  /// m_ij, or 0 when unassigned.
  int get(int task, int worker) const;

  /// Answers to one task, ordered by worker index.
  std::span<const Answer> task(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  std::size_t num_answers() const;

 private:
  int m_;
  int n_;
  std::vector<std::vector<Answer>> rows_;
};

/// Draws m_ij = a_i with probability f_ij, -a_i otherwise, for every assigned pair.
AnswerMatrix sample_answers(const World& world, const ModelParams& params,
                            const AssignmentPlan& plan, Seed seed);

/// Line-oriented text formats. Header `m n d p q`; answers follow as `i j v`
/// triples with 1-based indices. World files carry `task i a_i t_i` and
/// `worker j w_j` lines (1-based indices and types).
void write_answers(std::ostream& out, const AnswerMatrix& answers, const ModelParams& params);
struct AnswerFile {
  ModelParams params;
  AnswerMatrix answers;
};
AnswerFile read_answers(std::istream& in);

void write_world(std::ostream& out, const World& world, const ModelParams& params);
struct WorldFile {
  ModelParams params;
  World world;
};
WorldFile read_world(std::istream& in);

}  // namespace typecrowd
