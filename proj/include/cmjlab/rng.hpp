#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cmjlab {

/// 64-bit avalanche mixer (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
  return mix64(mix64(master_seed) ^ mix64(stream_id + 0x632be59bd9b4e019ULL));
}

/// Deterministic random stream. Two streams built from the same
/// (master_seed, stream_id) pair produce identical draws, independent of
/// which thread owns them.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : engine_(derive_seed(master_seed, stream_id)), stream_id_(stream_id) {}

  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Uniform on [0, 1).
  double uniform() { return unit_(engine_); }

  /// Uniform on (0, 1]; safe to take the logarithm of.
  double uniform_pos() { return 1.0 - unit_(engine_); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  double normal() { return normal_(engine_); }

  double gamma(double shape, double rate) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(engine_);
  }

  /// Uniform integer on {0, ..., n - 1}; n must be positive.
  std::uint64_t index(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
    return d(engine_);
  }

  engine_type& engine() noexcept { return engine_; }

 private:
  engine_type engine_;
  std::uint64_t stream_id_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cmjlab
