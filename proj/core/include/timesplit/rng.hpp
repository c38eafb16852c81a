#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace timesplit {

// splitmix64. Used to expand a user seed into generator state and to derive
// independent stream seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

// xoshiro256**. Every randomized step in the pipeline (splits, folds,
// shuffles, permutation draws) goes through this generator so results are
// reproducible bit for bit across platforms.
class Xoshiro256StarStar {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256StarStar(std::uint64_t seed);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }

  // Unbiased draw from [0, n) by rejection; n must be nonzero.
  std::uint64_t bounded(std::uint64_t n);

  // [0, 1) with 53 random bits.
  double uniform01();

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

 private:
  std::array<std::uint64_t, 4> state_;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Stable seed derivation: mixes the base seed with a stream tag. Used so
// that parallel tasks own independent generators regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// In-place Fisher-Yates. std::shuffle leaves the sequence of generator draws
// implementation-defined, which would break cross-platform reproducibility.
template <class T>
void fisher_yates_shuffle(std::vector<T>& v, Xoshiro256StarStar& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(v[i - 1], v[j]);
  }
}

// Uniform k-subset of {0, .., n-1} via a partial Fisher-Yates pass.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    Xoshiro256StarStar& rng);

}  // namespace timesplit
