#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "typecrowd/error.hpp"
#include "typecrowd/model.hpp"

using namespace typecrowd;

namespace {

std::vector<int> range(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("model params enforce 1/2 <= q < p <= 1") {
  CHECK_NOTHROW(ModelParams(3, 0.9, 0.6));
  CHECK_NOTHROW(ModelParams(1, 1.0, 0.5));
  CHECK_THROWS_AS(ModelParams(3, 0.6, 0.6), Error);  // degenerate
  CHECK_THROWS_AS(ModelParams(3, 0.6, 0.7), Error);
  CHECK_THROWS_AS(ModelParams(3, 0.9, 0.4), Error);
  CHECK_THROWS_AS(ModelParams(3, 1.1, 0.6), Error);
  CHECK_THROWS_AS(ModelParams(0, 0.9, 0.6), Error);
  CHECK_THROWS_AS(ModelParams(3, NAN, 0.6), Error);
}

TEST_CASE("sample_world") {
  SUBCASE("single type") {
    const World w = sample_world(ModelParams(1, 0.9, 0.6), 50, 20, Seed{1});
    for (int t : w.task_types) CHECK(t == 0);
    for (int t : w.worker_types) CHECK(t == 0);
  }
  SUBCASE("uniform type and label frequencies") {
    const World w = sample_world(ModelParams(3, 0.9, 0.6), 30000, 300, Seed{2});
    std::vector<double> tasks(3, 0), workers(3, 0);
    for (int t : w.task_types) tasks[static_cast<std::size_t>(t)] += 1.0 / 30000;
    for (int t : w.worker_types) workers[static_cast<std::size_t>(t)] += 1.0 / 300;
    for (int z = 0; z < 3; ++z) {
      CHECK(std::abs(tasks[static_cast<std::size_t>(z)] - 1.0 / 3) <= 0.02);
      CHECK(std::abs(workers[static_cast<std::size_t>(z)] - 1.0 / 3) <= 3 * std::sqrt(2.0 / 9 / 300));
    }
    const double positives = std::count(w.labels.begin(), w.labels.end(), 1) / 30000.0;
    CHECK(std::abs(positives - 0.5) <= 3 * std::sqrt(0.25 / 30000));
  }
  SUBCASE("determinism") {
    const ModelParams params(4, 0.8, 0.55);
    const World a = sample_world(params, 200, 40, Seed{99});
    const World b = sample_world(params, 200, 40, Seed{99});
    const World c = sample_world(params, 200, 40, Seed{100});
    CHECK(a.labels == b.labels);
    CHECK(a.task_types == b.task_types);
    CHECK(a.worker_types == b.worker_types);
    CHECK(a.labels != c.labels);
  }
  CHECK_THROWS_AS(sample_world(ModelParams(2, 0.9, 0.6), 0, 5, Seed{}), Error);
}

TEST_CASE("assign_uniform") {
  const std::vector<int> tasks = range(1000);
  SUBCASE("k = n assigns everyone") {
    for (const auto& entry : assign_uniform(7, tasks, 7, Seed{3})) {
      std::vector<int> sorted = entry.workers;
      std::sort(sorted.begin(), sorted.end());
      CHECK(sorted == range(7));
    }
  }
  SUBCASE("k = 0 is empty") {
    for (const auto& entry : assign_uniform(7, tasks, 0, Seed{3})) CHECK(entry.workers.empty());
  }
  SUBCASE("k > n is rejected") {
    try {
      assign_uniform(5, tasks, 6, Seed{3});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kInvalidAssignment);
    }
  }
  SUBCASE("per-worker load concentrates at n=10, k=3") {
    // Each worker lands in a task with probability k/n, so its load is
    // Binomial(1000, 0.3): mean 300, sd sqrt(210).
    std::vector<int> load(10, 0);
    for (const auto& entry : assign_uniform(10, tasks, 3, Seed{4})) {
      std::vector<int> sorted = entry.workers;
      std::sort(sorted.begin(), sorted.end());
      CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
      CHECK(sorted.size() == 3);
      for (int j : entry.workers) ++load[static_cast<std::size_t>(j)];
    }
    for (int c : load) CHECK(std::abs(c - 300) <= 3 * std::sqrt(210.0));
  }
}

TEST_CASE("assign_per_cluster") {
  const std::vector<int> tasks = range(50);
  SUBCASE("one cluster of size n with l = n") {
    const Clustering one = Clustering::from_labels(std::vector<int>(6, 0));
    for (const auto& entry : assign_per_cluster(one, tasks, 6, Seed{5})) CHECK(entry.workers.size() == 6);
  }
  SUBCASE("l workers from each of c clusters") {
    const Clustering three = Clustering::from_labels({0, 1, 2, 0, 1, 2, 0, 1, 2, 2});
    for (const auto& entry : assign_per_cluster(three, tasks, 2, Seed{5})) {
      REQUIRE(entry.workers.size() == 6);
      std::vector<int> per(3, 0);
      for (int j : entry.workers) ++per[static_cast<std::size_t>(three.cluster_of(j))];
      CHECK(per == std::vector<int>{2, 2, 2});
    }
  }
  SUBCASE("cluster smaller than l") {
    const Clustering small = Clustering::from_labels({0, 0, 0, 1});
    try {
      assign_per_cluster(small, tasks, 2, Seed{5});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kInsufficientCluster);
    }
  }
}

TEST_CASE("sample_answers") {
  SUBCASE("noiseless fidelity returns the truth") {
    // q < p is required, so take q within 1e-12 of 1.
    const ModelParams params(3, 1.0, 1.0 - 1e-12);
    const World w = sample_world(params, 300, 12, Seed{6});
    const auto answers = sample_answers(w, params, assign_all(12, range(300)), Seed{7});
    for (int i = 0; i < 300; ++i) {
      for (const Answer& a : answers.task(i)) CHECK(a.value == w.labels[static_cast<std::size_t>(i)]);
    }
  }
  SUBCASE("p = 1 on matched pairs never errs") {
    const ModelParams params(3, 1.0, 0.5);
    const World w = sample_world(params, 400, 30, Seed{8});
    AssignmentPlan plan;
    for (int i = 0; i < 400; ++i) {
      TaskAssignment entry{i, {}};
      for (int j = 0; j < 30; ++j) {
        if (w.worker_types[static_cast<std::size_t>(j)] == w.task_types[static_cast<std::size_t>(i)]) {
          entry.workers.push_back(j);
        }
      }
      plan.push_back(entry);
    }
    const auto answers = sample_answers(w, params, plan, Seed{9});
    for (int i = 0; i < 400; ++i) {
      for (const Answer& a : answers.task(i)) CHECK(a.value == w.labels[static_cast<std::size_t>(i)]);
    }
  }
  SUBCASE("matched correct rate at d=2, p=0.9 over 1e5 pairs") {
    // 10 workers per type; each task goes to the 10 workers of its own type.
    const ModelParams params(2, 0.9, 0.6);
    World w;
    w.worker_types.resize(20);
    for (int j = 0; j < 20; ++j) w.worker_types[static_cast<std::size_t>(j)] = j % 2;
    w.task_types.resize(10000);
    w.labels.resize(10000);
    AssignmentPlan plan;
    for (int i = 0; i < 10000; ++i) {
      w.task_types[static_cast<std::size_t>(i)] = i % 2;
      w.labels[static_cast<std::size_t>(i)] = (i / 2) % 2 ? 1 : -1;
      TaskAssignment entry{i, {}};
      for (int j = i % 2; j < 20; j += 2) entry.workers.push_back(j);
      plan.push_back(entry);
    }
    const auto answers = sample_answers(w, params, plan, Seed{10});
    REQUIRE(answers.num_answers() == 100000);
    long correct = 0;
    for (int i = 0; i < 10000; ++i) {
      for (const Answer& a : answers.task(i)) correct += a.value == w.labels[static_cast<std::size_t>(i)];
    }
    const double rate = correct / 1e5;
    CHECK(rate >= 0.897);
    CHECK(rate <= 0.903);
  }
  SUBCASE("plan validation") {
    const ModelParams params(2, 0.9, 0.6);
    const World w = sample_world(params, 5, 4, Seed{11});
    CHECK_THROWS_AS(sample_answers(w, params, {{0, {0, 0}}}, Seed{1}), Error);
    CHECK_THROWS_AS(sample_answers(w, params, {{0, {4}}}, Seed{1}), Error);
    CHECK_THROWS_AS(sample_answers(w, params, {{5, {0}}}, Seed{1}), Error);
  }
}

TEST_CASE("pairwise agreement and answer products follow the model") {
  // Frequencies over every task for fixed worker pairs, compared with the
  // closed forms at 3 binomial standard deviations.
  const ModelParams params(3, 0.9, 0.6);
  const int m = 40000;
  World w = sample_world(params, m, 3, Seed{12});
  w.worker_types = {0, 0, 1};
  const auto answers = sample_answers(w, params, assign_all(3, range(m)), Seed{13});
  double same = 0, cross = 0, same_prod = 0, cross_prod = 0;
  for (int i = 0; i < m; ++i) {
    same += answers.get(i, 0) == answers.get(i, 1);
    cross += answers.get(i, 0) == answers.get(i, 2);
    same_prod += answers.get(i, 0) * answers.get(i, 1);
    cross_prod += answers.get(i, 0) * answers.get(i, 2);
  }
  const double s = same_type_agreement(params);
  const double c = cross_type_agreement(params);
  CHECK(std::abs(same / m - s) <= 3 * std::sqrt(s * (1 - s) / m));
  CHECK(std::abs(cross / m - c) <= 3 * std::sqrt(c * (1 - c) / m));
  const DensityConstants rho = density_constants(params);
  CHECK(std::abs(same_prod / m - rho.within) <= 3 * std::sqrt((1 - rho.within * rho.within) / m));
  CHECK(std::abs(cross_prod / m - rho.across) <= 3 * std::sqrt((1 - rho.across * rho.across) / m));
  // Products and agreements are two views of the same event: E[m m'] = 2 P(agree) - 1.
  CHECK(rho.within == doctest::Approx(2 * s - 1));
  CHECK(rho.across == doctest::Approx(2 * c - 1));
}

TEST_CASE("answer matrix storage") {
  AnswerMatrix a(3, 4);
  a.set(1, 3, 1);
  a.set(1, 0, -1);
  CHECK(a.get(1, 3) == 1);
  CHECK(a.get(1, 0) == -1);
  CHECK(a.get(1, 1) == 0);
  CHECK(a.task(1).size() == 2);
  CHECK(a.task(1)[0].worker == 0);
  CHECK_THROWS_AS(a.set(0, 0, 0), Error);
  CHECK_THROWS_AS(a.set(3, 0, 1), Error);
}

TEST_CASE("text formats round-trip") {
  const ModelParams params(3, 0.9, 0.6);
  const World w = sample_world(params, 40, 9, Seed{14});
  const auto answers = sample_answers(w, params, assign_uniform(9, range(40), 4, Seed{15}), Seed{16});

  std::stringstream buffer;
  write_answers(buffer, answers, params);
  CHECK(buffer.str().rfind("40 9 3 0.9", 0) == 0);
  const AnswerFile back = read_answers(buffer);
  CHECK(back.params.d() == 3);
  CHECK(back.params.p() == 0.9);
  CHECK(back.params.q() == 0.6);
  REQUIRE(back.answers.num_answers() == answers.num_answers());
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 9; ++j) CHECK(back.answers.get(i, j) == answers.get(i, j));
  }

  std::stringstream world_buffer;
  write_world(world_buffer, w, params);
  const WorldFile wf = read_world(world_buffer);
  CHECK(wf.world.labels == w.labels);
  CHECK(wf.world.task_types == w.task_types);
  CHECK(wf.world.worker_types == w.worker_types);

  std::stringstream bad("2 2 2 0.9 0.6\n1 1 5\n");
  CHECK_THROWS_AS(read_answers(bad), Error);
  std::stringstream truncated("2 2 2 0.9 0.6\ntask 1 1 1\n");
  CHECK_THROWS_AS(read_world(truncated), Error);
}
