#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace typecrowd {

/// Root of a deterministic random stream. Identical seeds and identical call
/// sequences always produce identical draws.
struct Seed {
  std::uint64_t value = 0;

  friend bool operator==(Seed, Seed) = default;
};

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Named substream: streams with different names are statistically independent.
constexpr Seed derive(Seed parent, std::string_view name) {
  return Seed{detail::mix64(parent.value ^ detail::mix64(detail::fnv1a(name)))};
}

/// Indexed substream (per task, per trial, ...).
constexpr Seed derive(Seed parent, std::uint64_t index) {
  return Seed{detail::mix64(parent.value + detail::kGolden * (index + 1))};
}

/// Counter-based generator: draw k is a pure function of (key, k).
class Rng {
 public:
  explicit constexpr Rng(Seed seed) : key_(detail::mix64(seed.value ^ 0x5851f42d4c957f2dULL)) {}

  constexpr std::uint64_t next() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform on [0, bound), unbiased (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  /// Fair sign in {-1, +1}.
  int sign() { return (next() >> 63) ? 1 : -1; }

  /// First k entries of a uniformly random permutation of `items`
  /// (partial Fisher-Yates, sampling without replacement).
  template <typename T>
  std::vector<T> sample(std::vector<T> items, std::size_t k) {
    for (std::size_t i = 0; i < k && i < items.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(items.size() - i));
      std::swap(items[i], items[j]);
    }
    items.resize(k < items.size() ? k : items.size());
    return items;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace typecrowd
