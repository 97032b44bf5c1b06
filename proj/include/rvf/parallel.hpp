#pragma once

#include <cstdint>
#include <random>

namespace rvf {

/// Applies the RVF_THREADS cap (if set) to the OpenMP runtime. Safe to call
/// repeatedly.
void configure_threads();

/// Number of worker threads parallel loops will use.
int thread_count();

/// Independent generator for replicate `index` of a run seeded with `seed`.
/// Streams depend only on (seed, index), never on scheduling order.
inline std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x52564621u};
  return std::mt19937_64(seq);
}

/// Uniform index in [0, n) from raw engine output. Unlike
/// std::uniform_int_distribution this is identical across standard libraries.
inline std::size_t uniform_index(std::mt19937_64 &rng, std::size_t n) {
  // Lemire's multiply-shift with rejection.
  using u128 = unsigned __int128;
  std::uint64_t x = rng();
  u128 m = static_cast<u128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<u128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

}  // namespace rvf
