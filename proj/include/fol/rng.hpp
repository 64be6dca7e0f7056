#pragma once
#include <cstdint>
#include <vector>

namespace fol {

// SplitMix64. Small, fast and fully portable: unlike the std:: distributions,
// the output stream is identical on every platform/toolchain, which the
// dataset-determinism guarantees rely on.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }
};

// Decorrelated child stream for (seed, a, b). Used to give every sample,
// sub-network and layer its own stream so parallel and serial generation
// agree bit-for-bit.
inline SplitMix64 derive_stream(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b = 0) {
  SplitMix64 g(seed);
  std::uint64_t s = g.next();
  s ^= SplitMix64(a ^ 0x9e3779b97f4a7c15ULL).next();
  s ^= SplitMix64(b ^ 0xbf58476d1ce4e5b9ULL).next() * 3;
  return SplitMix64(s);
}

// Fisher-Yates; std::shuffle is implementation-defined, this is not.
template <typename T>
void shuffle_in_place(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace fol
