#pragma once

#include <cstddef>
#include <vector>

namespace typecrowd {

/// Partition of workers [0, n) into clusters V_0..V_{c-1}. Cluster ids are
/// dense and numbered in order of first appearance.
class Clustering {
 public:
  Clustering() = default;

  /// Builds a partition from arbitrary per-worker labels; labels are renumbered
  /// densely by first appearance, so equal partitions compare equal.
  static Clustering from_labels(const std::vector<int>& labels);

  std::size_t num_workers() const { return assignments_.size(); }
  std::size_t num_clusters() const { return clusters_.size(); }

  int cluster_of(int worker) const { return assignments_[static_cast<std::size_t>(worker)]; }
  const std::vector<int>& assignments() const { return assignments_; }
  const std::vector<int>& members(int cluster) const {
    return clusters_[static_cast<std::size_t>(cluster)];
  }
  const std::vector<std::vector<int>>& clusters() const { return clusters_; }

  friend bool operator==(const Clustering&, const Clustering&) = default;

 private:
  std::vector<int> assignments_;
  std::vector<std::vector<int>> clusters_;
};

/// True when both label vectors induce the same partition (ids ignored).
bool same_partition(const std::vector<int>& a, const std::vector<int>& b);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace typecrowd
