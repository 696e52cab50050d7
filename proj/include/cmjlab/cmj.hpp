#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cmjlab/distributions.hpp"
#include "cmjlab/recursive_tree.hpp"
#include "cmjlab/renewal.hpp"

namespace cmjlab {

inline constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();
inline constexpr std::size_t kDefaultEventCap = std::size_t{1} << 28;

struct BirthEvent {
  double time = 0.0;
  std::uint32_t generation = 0;
  std::uint32_t ancestor1 = 0;  // index (into events) of the first-generation ancestor
  std::uint32_t parent = kNoParent;  // index of the mother, kNoParent for generation 1
};

/// All births of generations 1..k_max up to the horizon, sorted by
/// (time, generation, creation order).
class CmjTrajectory {
 public:
  CmjTrajectory(IncrementDistribution dist, double horizon, std::size_t k_max,
                std::vector<BirthEvent> events);

  const IncrementDistribution& dist() const noexcept { return dist_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t k_max() const noexcept { return k_max_; }
  const std::vector<BirthEvent>& events() const noexcept { return events_; }

  /// Sorted birth times of generation k.
  const std::vector<double>& generation_times(std::size_t k) const;

  /// Indices (into events) of the generation-1 individuals, in birth order.
  const std::vector<std::uint32_t>& first_generation() const noexcept { return first_gen_; }

 private:
  IncrementDistribution dist_;
  double horizon_;
  std::size_t k_max_;
  std::vector<BirthEvent> events_;
  std::vector<std::vector<double>> times_by_gen_;
  std::vector<std::uint32_t> first_gen_;
};

/// Exact simulation of the CMJ process generated by the random walk with
/// increments `dist`, truncated at time T and generation k_max.
CmjTrajectory simulate_cmj(const IncrementDistribution& dist, double T, std::size_t k_max,
                           RngStream& rng, std::size_t event_cap = kDefaultEventCap);

/// Y_k(t): number of generation-k births in [0, t].
std::uint64_t count_generation(const CmjTrajectory& traj, std::size_t k, double t);

/// Genealogical tree of the exponential CMJ process stopped at its n-th birth.
struct EmbeddedTree {
  RecursiveTree tree;              // n + 1 vertices, insertion order = birth order
  std::vector<double> birth_times;  // tau_1 < ... < tau_n
};

/// Every vertex carries its own unit-rate Poisson clock; the process is run
/// until n vertices besides the root have been born.
EmbeddedTree simulate_embedded_rrt(std::size_t n, RngStream& rng);

struct Decomposition {
  double y1;        // sum over first-generation j of (subtree count - U_{k-1}(t - S_j))
  double y2;        // sum_j U_{k-1}(t - S_j) - mu^{-1} int_0^t U_{k-1}
  double y3;        // mu^{-1} int_0^t U_{k-1} - t^k/(k! mu^k)
  double y2_star;   // sum_j U_{k-1}(t - S_j) - U_k(t)
  double yk;        // Y_k(t)
  double centered;  // Y_k(t) - t^k/(k! mu^k)
};

/// Splits Y_k(t) - t^k/(k! mu^k) into its three summands for k >= 2.
Decomposition decomposition_terms(const CmjTrajectory& traj, const RenewalTable& table,
                                  std::size_t k, double t);

/// M independent draws of N(t); replicate r uses RngStream(seed, r).
std::vector<std::uint64_t> renewal_count_samples(const IncrementDistribution& dist, double t,
                                                 std::size_t M, std::uint64_t seed);

std::string trajectory_csv(const CmjTrajectory& traj);
std::string embedded_tree_csv(const EmbeddedTree& et);

}  // namespace cmjlab
