#pragma once

#include <cmath>
#include <cstdint>

namespace nlmd {

// splitmix64: tiny, well-mixed 64-bit generator. Used instead of <random>
// engines so sampled noise is bytewise identical across platforms and
// standard-library versions.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in (0, 1]: never returns 0, so log() below is safe
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }
};

// Standard-normal pairs via Box-Muller on the splitmix stream.
struct GaussianStream {
  SplitMix64 gen;
  double cached = 0.0;
  bool have_cached = false;

  explicit GaussianStream(std::uint64_t seed) : gen(seed) {}

  double next() {
    if (have_cached) {
      have_cached = false;
      return cached;
    }
    const double u1 = gen.next_unit();
    const double u2 = gen.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached = r * std::sin(a);
    have_cached = true;
    return r * std::cos(a);
  }
};

// Decorrelates a base seed and a stream index into an independent substream
// seed (one splitmix application over the combined words).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull + stream * 0xda942042e4dd58b5ull));
  return g.next_u64();
}

}  // namespace nlmd
