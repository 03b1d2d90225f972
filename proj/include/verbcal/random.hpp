#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace verbcal {

// mt19937_64 output is fixed by the standard but library distributions are
// not, so index draws are done here to keep shuffles identical across
// toolchains.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform real in [0, 1) with 53 random bits.
  double unit();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace verbcal
