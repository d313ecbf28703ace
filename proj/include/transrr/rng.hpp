#pragma once

#include <cstdint>
#include <cmath>

namespace transrr {

/// Purpose tags for derived random streams. One root seed plus a
/// (purpose, index) pair identifies a stream; replicates and roles never
/// share state, which makes results independent of thread scheduling.
enum class StreamRole : std::uint64_t {
  target_design = 1,
  target_noise = 2,
  target_scale = 3,
  source_design = 4,
  source_noise = 5,
  source_scale = 6,
  coef_beta = 7,
  coef_w = 8,
  cv_folds = 9,
  generic = 10,
};

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic sequential stream (splitmix64 over a hashed key).
/// No rejection loops anywhere downstream, so draw counts are data-independent.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, StreamRole role, std::uint64_t index = 0) {
    std::uint64_t h = splitmix64_mix(root_seed ^ 0x243F6A8885A308D3ULL);
    h = splitmix64_mix(h ^ static_cast<std::uint64_t>(role));
    h = splitmix64_mix(h ^ (index * 0x9E3779B97F4A7C15ULL + 0x13198A2E03707344ULL));
    state_ = h;
  }

  std::uint64_t next_u64() { return splitmix64_mix(state_ += 0x9E3779B97F4A7C15ULL); }

  /// uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// uniform on the open interval (0, 1); safe for log/tan transforms
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// standard normal via Box–Muller (pair cached)
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586477 * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

  /// Cauchy(0, scale) via inverse CDF
  double cauchy(double scale) {
    return scale * std::tan(3.14159265358979324 * (uniform_open() - 0.5));
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace transrr
