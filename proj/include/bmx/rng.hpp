#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace bmx {

// A reproducible random stream identified by (seed, stream_id). Distinct
// stream ids give independent streams; the same pair always replays the same
// draws. Simulations give each path its own stream so results never depend on
// how paths are scheduled across workers.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(mix(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Uniform on the open interval (0, 1).
  double uniform() {
    // 53 random mantissa bits, offset by half a ulp so 0 is never returned.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  std::complex<double> normal2() {
    const double x = normal_(engine_);
    const double y = normal_(engine_);
    return {x, y};
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    return splitmix(splitmix(seed) ^ splitmix(stream + 0x632BE59BD9B4E019ULL));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bmx
