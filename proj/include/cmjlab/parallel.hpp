#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <type_traits>
#include <vector>

#include <omp.h>

#include "cmjlab/rng.hpp"

namespace cmjlab {

/// Sets the OpenMP worker count used by every parallel kernel.
inline void set_workers(int workers) {
  if (workers >= 1) omp_set_num_threads(workers);
}

inline int current_workers() { return omp_get_max_threads(); }

namespace serial {

/// Reference replicate loop: replicate r draws from RngStream(seed, r).
template <class Fn>
auto run_replicates(std::size_t count, std::uint64_t seed, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, RngStream&, std::size_t>> {
  using T = std::invoke_result_t<Fn&, RngStream&, std::size_t>;
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    RngStream rng(seed, r);
    out.push_back(fn(rng, r));
  }
  return out;
}

}  // namespace serial

/// OpenMP replicate loop. Output slot r depends only on (seed, r), so the
/// result is identical to serial::run_replicates for any worker count.
template <class Fn>
auto run_replicates(std::size_t count, std::uint64_t seed, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, RngStream&, std::size_t>> {
  using T = std::invoke_result_t<Fn&, RngStream&, std::size_t>;
  std::vector<T> out(count);
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t r = 0; r < n; ++r) {
    try {
      RngStream rng(seed, static_cast<std::uint64_t>(r));
      out[static_cast<std::size_t>(r)] = fn(rng, static_cast<std::size_t>(r));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace cmjlab
