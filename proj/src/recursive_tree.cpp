#include "cmjlab/recursive_tree.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cmjlab/format.hpp"

namespace cmjlab {

std::uint64_t ProfileVector::n() const noexcept {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  return total == 0 ? 0 : total - 1;
}

RecursiveTree generate_rrt(std::size_t vertex_count, RngStream& rng) {
  if (vertex_count == 0) throw std::invalid_argument("generate_rrt: need at least one vertex");
  if (vertex_count > std::size_t{1} << 32) throw std::invalid_argument("generate_rrt: too many vertices");
  RecursiveTree tree;
  tree.parent.resize(vertex_count);
  tree.parent[0] = 0;
  for (std::size_t i = 1; i < vertex_count; ++i) {
    tree.parent[i] = static_cast<std::uint32_t>(rng.index(i));
  }
  return tree;
}

ProfileVector profile(const RecursiveTree& tree) {
  ProfileVector p;
  if (tree.parent.empty()) return p;
  std::vector<std::uint32_t> depth(tree.parent.size(), 0);
  p.counts.assign(1, 1);
  for (std::size_t i = 1; i < tree.parent.size(); ++i) {
    const std::uint32_t d = depth[tree.parent[i]] + 1;
    depth[i] = d;
    if (d >= p.counts.size()) p.counts.resize(d + 1, 0);
    ++p.counts[d];
  }
  return p;
}

std::uint64_t floor_power(std::uint64_t n, double t) {
  if (n == 0) throw std::invalid_argument("floor_power: base must be positive");
  if (t < 0.0) throw std::invalid_argument("floor_power: exponent must be nonnegative");
  const double x = std::exp(t * std::log(static_cast<double>(n)));
  const double up = std::ceil(x);
  if (up - x < 1e-9) return static_cast<std::uint64_t>(up);
  return static_cast<std::uint64_t>(std::floor(x));
}

ProfilePath grow_and_record(std::uint64_t n_base, std::span<const double> t_grid, std::size_t k_max,
                            RngStream& rng, std::size_t vertex_cap) {
  if (n_base < 2) throw std::invalid_argument("grow_and_record: n_base must be at least 2");
  if (k_max < 1) throw std::invalid_argument("grow_and_record: k_max must be at least 1");
  ProfilePath path;
  path.t_grid.assign(t_grid.begin(), t_grid.end());
  path.k_max = k_max;
  path.n_base = n_base;
  if (t_grid.empty()) return path;

  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0) throw std::invalid_argument("grow_and_record: negative t");
    if (i > 0 && t_grid[i] < t_grid[i - 1]) {
      throw std::invalid_argument("grow_and_record: t_grid must be increasing");
    }
  }
  const double largest = std::exp(t_grid.back() * std::log(static_cast<double>(n_base)));
  if (!(largest < static_cast<double>(vertex_cap) + 1.0)) {
    throw std::length_error("grow_and_record: tree size exceeds memory cap");
  }
  const std::uint64_t final_size = floor_power(n_base, t_grid.back());
  if (final_size > vertex_cap) throw std::length_error("grow_and_record: tree size exceeds memory cap");

  std::vector<std::uint32_t> depth;
  depth.reserve(final_size);
  depth.push_back(0);
  std::vector<std::uint64_t> level(k_max + 1, 0);
  level[0] = 1;

  path.sizes.reserve(t_grid.size());
  path.values.reserve(t_grid.size());
  for (const double t : t_grid) {
    const std::uint64_t target = floor_power(n_base, t);
    while (depth.size() < target) {
      const std::uint32_t d = depth[rng.index(depth.size())] + 1;
      depth.push_back(d);
      if (d <= k_max) ++level[d];
    }
    path.sizes.push_back(depth.size());
    path.values.emplace_back(level.begin() + 1, level.end());
  }
  return path;
}

std::vector<double> ExactProfileLaw::marginal(std::size_t k) const {
  const std::size_t n = vertex_count == 0 ? 0 : vertex_count - 1;
  std::vector<double> out(n + 1, 0.0);
  for (const auto& [key, prob] : pmf) {
    const std::uint32_t x = (k >= 1 && k <= key.size()) ? key[k - 1] : 0;
    out[x] += prob;
  }
  return out;
}

namespace {

struct Enumerator {
  std::size_t vertex_count;
  double weight;
  std::vector<std::uint32_t> depth;
  std::vector<std::uint32_t> counts;  // counts[k - 1] = X(k)
  std::map<std::vector<std::uint32_t>, double>* pmf;

  void run(std::size_t next) {
    if (next == vertex_count) {
      (*pmf)[counts] += weight;
      return;
    }
    for (std::size_t p = 0; p < next; ++p) {
      const std::uint32_t d = depth[p] + 1;
      depth[next] = d;
      ++counts[d - 1];
      run(next + 1);
      --counts[d - 1];
    }
  }
};

}  // namespace

ExactProfileLaw exact_profile_distribution(std::size_t vertex_count) {
  if (vertex_count == 0) throw std::invalid_argument("exact_profile_distribution: need a vertex");
  if (vertex_count > 9) {
    throw std::invalid_argument("exact_profile_distribution: at most 9 vertices supported");
  }
  ExactProfileLaw law;
  law.vertex_count = vertex_count;
  double trees = 1.0;
  for (std::size_t i = 2; i < vertex_count; ++i) trees *= static_cast<double>(i);

  Enumerator e{vertex_count, 1.0 / trees, std::vector<std::uint32_t>(vertex_count, 0),
               std::vector<std::uint32_t>(vertex_count - 1, 0), &law.pmf};
  e.run(1);
  return law;
}

Moments level1_moments(std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("level1_moments: n must be at least 1");
  // Vertex j (1-based) attaches to the root with probability 1/j.
  double mean = 0.0;
  double var = 0.0;
  for (std::uint64_t j = n; j >= 1; --j) {
    const double p = 1.0 / static_cast<double>(j);
    mean += p;
    var += p * (1.0 - p);
  }
  return {mean, var};
}

std::string tree_csv(const RecursiveTree& tree) {
  std::string out = "vertex,parent\n";
  for (std::size_t i = 1; i < tree.parent.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(tree.parent[i]) + "\n";
  }
  return out;
}

std::string profile_csv(const ProfileVector& p) {
  std::string out = "level,count\n";
  for (std::size_t k = 0; k < p.counts.size(); ++k) {
    out += std::to_string(k) + "," + std::to_string(p.counts[k]) + "\n";
  }
  return out;
}

std::string profile_path_csv(const ProfilePath& path) {
  std::string out = "t,k,count\n";
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    for (std::size_t k = 1; k <= path.k_max; ++k) {
      out += format_g17(path.t_grid[i]) + "," + std::to_string(k) + "," +
             std::to_string(path.values[i][k - 1]) + "\n";
    }
  }
  return out;
}

}  // namespace cmjlab
