#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace sqa {

// Mixes a base seed with a stream index (splitmix64 finalizer). Used so that
// every random stream in a run derives from the single user-facing seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Seeded generator with platform-stable distributions. std::mt19937_64 is
/// fully specified by the standard; the distributions in <random> are not,
/// so the sampling helpers are written out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // [0, 1) with 53 random bits.
  double uniform();
  double uniform(double low, double high) { return low + (high - low) * uniform(); }
  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sqa
