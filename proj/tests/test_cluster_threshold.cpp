#include <cmath>
#include <numeric>

#include "doctest.h"
#include "typecrowd/budgets.hpp"
#include "typecrowd/cluster_threshold.hpp"
#include "typecrowd/error.hpp"

using namespace typecrowd;

namespace {

StageOneBlock block_of(const Eigen::MatrixXd& s) {
  StageOneBlock b;
  b.tasks.resize(static_cast<std::size_t>(s.rows()));
  std::iota(b.tasks.begin(), b.tasks.end(), 0);
  b.answers = s;
  return b;
}

bool valid_partition(const Clustering& c, int n) {
  if (static_cast<int>(c.num_workers()) != n) return false;
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (std::size_t z = 0; z < c.num_clusters(); ++z) {
    if (c.members(static_cast<int>(z)).empty()) return false;
    for (int j : c.members(static_cast<int>(z))) {
      if (c.cluster_of(j) != static_cast<int>(z)) return false;
      ++seen[static_cast<std::size_t>(j)];
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int k) { return k == 1; });
}

}  // namespace

TEST_CASE("agreement_fraction") {
  Eigen::MatrixXd s(4, 3);
  s << 1, 1, -1,
      -1, -1, 1,
       1, 1, -1,
       1, -1, -1;
  const StageOneBlock b = block_of(s);
  CHECK(agreement_fraction(b, 0, 1) == doctest::Approx(0.75));
  CHECK(agreement_fraction(b, 1, 2) == doctest::Approx(0.25));
  Eigen::MatrixXd t(3, 2);
  t << 1, 1, -1, -1, 1, 1;
  CHECK(agreement_fraction(block_of(t), 0, 1) == 1.0);
  t.col(1) = -t.col(0);
  CHECK(agreement_fraction(block_of(t), 0, 1) == 0.0);
  try {
    agreement_fraction(b, 2, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidPair);
  }
}

TEST_CASE("cluster_sequential examples") {
  Eigen::MatrixXd same(5, 6);
  same.setOnes();
  same.row(2) *= -1;
  CHECK(cluster_sequential(block_of(same), 0.99).num_clusters() == 1);

  Eigen::MatrixXd opposite(4, 2);
  opposite << 1, -1, -1, 1, 1, -1, 1, -1;
  CHECK(cluster_sequential(block_of(opposite), 0.01).num_clusters() == 2);

  // Worker 2 agrees with 0 but not with 1, so unanimity sends it elsewhere.
  Eigen::MatrixXd chain(4, 3);
  chain << 1, 1, 1,
           1, 1, 1,
           1, -1, 1,
           1, -1, -1;
  const Clustering c = cluster_sequential(block_of(chain), 0.6);
  CHECK(c.cluster_of(0) == 0);
  CHECK(c.cluster_of(1) == 1);
  CHECK(c.cluster_of(2) == 0);
}

TEST_CASE("make_stage_one_block requires every worker") {
  AnswerMatrix a(3, 2);
  a.set(0, 0, 1);
  a.set(0, 1, -1);
  a.set(1, 0, 1);
  const std::vector<int> ok{0};
  const StageOneBlock b = make_stage_one_block(a, ok);
  CHECK(b.r() == 1);
  CHECK(b.answers(0, 1) == -1);
  const std::vector<int> bad{0, 1};
  CHECK_THROWS_AS(make_stage_one_block(a, bad), Error);
}

TEST_CASE("threshold clustering always returns a valid partition") {
  Rng rng(Seed{20});
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + static_cast<int>(rng.below(30));
    const int n = 1 + static_cast<int>(rng.below(25));
    Eigen::MatrixXd s(r, n);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < n; ++j) s(i, j) = rng.sign();
    const double zeta = rng.uniform();
    CHECK(valid_partition(cluster_sequential(block_of(s), zeta), n));
  }
}

TEST_CASE("recommended settings recover the types") {
  const ModelParams params(3, 0.9, 0.6);
  const int n = 30;
  const auto rec = stage1_recommendation(params, 0.1, n);
  const int r = static_cast<int>(rec.r);
  std::vector<int> tasks(static_cast<std::size_t>(r));
  std::iota(tasks.begin(), tasks.end(), 0);
  int exact = 0;
  for (std::uint64_t t = 0; t < 30; ++t) {
    const Seed seed = derive(Seed{21}, t);
    const World w = sample_world(params, r, n, derive(seed, "world"));
    const auto answers = sample_answers(w, params, assign_all(n, tasks), derive(seed, "answers"));
    const Clustering c = cluster_sequential(make_stage_one_block(answers, tasks), rec.zeta);
    exact += same_partition(c.assignments(), type_partition(w).assignments());
  }
  CHECK(exact >= 27);
}
