#include "typecrowd/partition.hpp"

#include <map>
#include <unordered_map>

#include "typecrowd/error.hpp"

namespace typecrowd {

Clustering Clustering::from_labels(const std::vector<int>& labels) {
  Clustering out;
  std::unordered_map<int, int> dense;
  out.assignments_.reserve(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    auto [it, inserted] = dense.try_emplace(labels[j], static_cast<int>(dense.size()));
    if (inserted) out.clusters_.emplace_back();
    out.assignments_.push_back(it->second);
    out.clusters_[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(j));
  }
  return out;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  return Clustering::from_labels(a) == Clustering::from_labels(b);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kShape, "labelings differ in length");
  const auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t k = 0; k < a.size(); ++k) {
    joint[{a[k], b[k]}] += 1.0;
    rows[a[k]] += 1.0;
    cols[b[k]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, count] : joint) index += choose2(count);
  double sum_rows = 0.0;
  double sum_cols = 0.0;
  for (const auto& [key, count] : rows) sum_rows += choose2(count);
  for (const auto& [key, count] : cols) sum_cols += choose2(count);
  const double total = choose2(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace typecrowd
