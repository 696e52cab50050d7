#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cmjlab/rng.hpp"

namespace cmjlab {

inline constexpr std::size_t kDefaultVertexCap = std::size_t{1} << 27;

/// Recursive tree in insertion order. parent[0] is unused (root); for i >= 1,
/// parent[i] < i.
struct RecursiveTree {
  std::vector<std::uint32_t> parent;

  std::size_t vertex_count() const noexcept { return parent.size(); }
};

/// counts[k] is the number of vertices at distance k from the root.
struct ProfileVector {
  std::vector<std::uint64_t> counts;

  /// The tree has n + 1 vertices.
  std::uint64_t n() const noexcept;
  /// Count at level k, 0 beyond the height of the tree.
  std::uint64_t at(std::size_t k) const noexcept { return k < counts.size() ? counts[k] : 0; }
};

/// Snapshots of one growing tree: values[i][k - 1] = X(k) at t_grid[i].
struct ProfilePath {
  std::vector<double> t_grid;
  std::size_t k_max = 0;
  std::uint64_t n_base = 0;
  std::vector<std::uint64_t> sizes;  // vertex count at each snapshot
  std::vector<std::vector<std::uint64_t>> values;
};

/// Uniform random recursive tree on `vertex_count` vertices.
RecursiveTree generate_rrt(std::size_t vertex_count, RngStream& rng);

ProfileVector profile(const RecursiveTree& tree);

/// floor(n^t) computed as exp(t ln n), snapping values within 1e-9 below an
/// integer up to that integer.
std::uint64_t floor_power(std::uint64_t n, double t);

/// Grows a single tree and records levels 1..k_max when it reaches
/// floor(n_base^t) vertices for each t in the (increasing) grid.
ProfilePath grow_and_record(std::uint64_t n_base, std::span<const double> t_grid, std::size_t k_max,
                            RngStream& rng, std::size_t vertex_cap = kDefaultVertexCap);

/// Exact law of the profile (X(1), ..., X(n)) of a random recursive tree on
/// `vertex_count` <= 9 vertices, by enumerating all attachment sequences.
/// Keys have length vertex_count - 1 (X(k) for k = 1..n).
struct ExactProfileLaw {
  std::size_t vertex_count = 0;
  std::map<std::vector<std::uint32_t>, double> pmf;

  /// Marginal pmf of X(k): entry j is P(X(k) = j).
  std::vector<double> marginal(std::size_t k) const;
};

ExactProfileLaw exact_profile_distribution(std::size_t vertex_count);

struct Moments {
  double mean;
  double variance;
};

/// Mean and variance of X_n(1): partial harmonic sums.
Moments level1_moments(std::uint64_t n);

// CSV exports.
std::string tree_csv(const RecursiveTree& tree);
std::string profile_csv(const ProfileVector& p);
std::string profile_path_csv(const ProfilePath& path);

}  // namespace cmjlab
