#include "cmjlab/cmj.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "cmjlab/format.hpp"
#include "cmjlab/parallel.hpp"

namespace cmjlab {

CmjTrajectory::CmjTrajectory(IncrementDistribution dist, double horizon, std::size_t k_max,
                             std::vector<BirthEvent> events)
    : dist_(dist), horizon_(horizon), k_max_(k_max), events_(std::move(events)),
      times_by_gen_(k_max) {
  for (std::uint32_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    if (e.generation < 1 || e.generation > k_max_) {
      throw std::invalid_argument("CmjTrajectory: generation out of range");
    }
    times_by_gen_[e.generation - 1].push_back(e.time);
    if (e.generation == 1) first_gen_.push_back(i);
  }
}

const std::vector<double>& CmjTrajectory::generation_times(std::size_t k) const {
  if (k < 1 || k > k_max_) {
    throw std::out_of_range("generation " + std::to_string(k) + " outside 1.." + std::to_string(k_max_));
  }
  return times_by_gen_[k - 1];
}

CmjTrajectory simulate_cmj(const IncrementDistribution& dist, double T, std::size_t k_max,
                           RngStream& rng, std::size_t event_cap) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("simulate_cmj: T must be nonnegative");
  if (k_max < 1) throw std::invalid_argument("simulate_cmj: k_max must be at least 1");
  event_cap = std::min<std::size_t>(event_cap, std::numeric_limits<std::uint32_t>::max() - 1);

  // Expected number of events, sum_k (T/mu)^k / k!, must fit the budget.
  double expected = 0.0;
  double term = 1.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    term *= T / dist.mu() / static_cast<double>(k);
    expected += term;
  }
  if (expected > static_cast<double>(event_cap)) {
    throw std::length_error("simulate_cmj: expected event count exceeds cap");
  }

  std::vector<BirthEvent> raw;
  raw.reserve(static_cast<std::size_t>(expected * 1.1) + 16);
  auto push = [&](const BirthEvent& e) {
    if (raw.size() >= event_cap) throw std::length_error("simulate_cmj: event-count cap exceeded");
    raw.push_back(e);
  };

  for (double s = dist.sample(rng); s <= T; s += dist.sample(rng)) {
    const auto self = static_cast<std::uint32_t>(raw.size());
    push({s, 1, self, kNoParent});
  }
  std::size_t gen_begin = 0;
  for (std::uint32_t g = 1; g < k_max; ++g) {
    const std::size_t gen_end = raw.size();
    for (std::size_t m = gen_begin; m < gen_end; ++m) {
      const double born = raw[m].time;
      const std::uint32_t anc = raw[m].ancestor1;
      for (double s = born + dist.sample(rng); s <= T; s += dist.sample(rng)) {
        push({s, g + 1, anc, static_cast<std::uint32_t>(m)});
      }
    }
    gen_begin = gen_end;
  }

  // Sort by (time, generation, creation order) and remap cross references.
  std::vector<std::uint32_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (raw[a].time != raw[b].time) return raw[a].time < raw[b].time;
    return raw[a].generation < raw[b].generation;
  });
  std::vector<std::uint32_t> rank(raw.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  std::vector<BirthEvent> events(raw.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) {
    BirthEvent e = raw[order[i]];
    e.ancestor1 = rank[e.ancestor1];
    if (e.parent != kNoParent) e.parent = rank[e.parent];
    events[i] = e;
  }
  return CmjTrajectory(dist, T, k_max, std::move(events));
}

std::uint64_t count_generation(const CmjTrajectory& traj, std::size_t k, double t) {
  if (t < 0.0) throw std::out_of_range("count_generation: negative time");
  if (t > traj.horizon()) throw std::out_of_range("count_generation: t beyond simulated horizon");
  const auto& times = traj.generation_times(k);
  return static_cast<std::uint64_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

EmbeddedTree simulate_embedded_rrt(std::size_t n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("simulate_embedded_rrt: n must be at least 1");
  if (n >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("simulate_embedded_rrt: n too large");
  }
  struct Clock {
    double time;
    std::uint32_t vertex;
    bool operator>(const Clock& o) const { return time > o.time; }
  };
  std::priority_queue<Clock, std::vector<Clock>, std::greater<>> clocks;
  EmbeddedTree et;
  et.tree.parent.reserve(n + 1);
  et.tree.parent.push_back(0);
  et.birth_times.reserve(n);
  clocks.push({rng.exponential(1.0), 0});
  while (et.birth_times.size() < n) {
    const Clock c = clocks.top();
    clocks.pop();
    const auto child = static_cast<std::uint32_t>(et.tree.parent.size());
    et.tree.parent.push_back(c.vertex);
    et.birth_times.push_back(c.time);
    // The mother's next offspring and the newborn's first one.
    clocks.push({c.time + rng.exponential(1.0), c.vertex});
    clocks.push({c.time + rng.exponential(1.0), child});
  }
  return et;
}

Decomposition decomposition_terms(const CmjTrajectory& traj, const RenewalTable& table,
                                  std::size_t k, double t) {
  if (k < 2) throw std::invalid_argument("decomposition_terms: k must be at least 2");
  if (k > traj.k_max()) throw std::out_of_range("decomposition_terms: k beyond simulated generations");
  if (t < 0.0 || t > traj.horizon()) throw std::out_of_range("decomposition_terms: t outside horizon");
  if (table.k_max() < k - 1 || t > table.horizon() * (1.0 + 1e-12)) {
    throw std::out_of_range("decomposition_terms: renewal table coverage insufficient");
  }

  const auto& events = traj.events();
  std::vector<std::uint32_t> per_ancestor(events.size(), 0);
  std::uint64_t yk = 0;
  for (const auto& e : events) {
    if (e.time > t) break;
    if (e.generation == k) {
      ++per_ancestor[e.ancestor1];
      ++yk;
    }
  }

  double y1 = 0.0;
  double shot = 0.0;
  for (const std::uint32_t j : traj.first_generation()) {
    const double s = events[j].time;
    if (s > t) break;
    const double mean = table.value(k - 1, t - s);
    y1 += static_cast<double>(per_ancestor[j]) - mean;
    shot += mean;
  }

  const double y3 = yk3_exact(table, k, t);
  const double mu = table.mu();
  double poly = std::pow(t / mu, static_cast<double>(k));
  for (std::size_t i = 2; i <= k; ++i) poly /= static_cast<double>(i);
  const double integral_term = y3 + poly;  // mu^{-1} int_0^t U_{k-1}

  Decomposition d{};
  d.y1 = y1;
  d.y2 = shot - integral_term;
  d.y3 = y3;
  d.y2_star = table.k_max() >= k ? shot - table.value(k, t) : std::nan("");
  d.yk = static_cast<double>(yk);
  d.centered = static_cast<double>(yk) - poly;
  return d;
}

std::vector<std::uint64_t> renewal_count_samples(const IncrementDistribution& dist, double t,
                                                 std::size_t M, std::uint64_t seed) {
  if (t < 0.0) throw std::invalid_argument("renewal_count_samples: t must be nonnegative");
  return run_replicates(M, seed, [&](RngStream& rng, std::size_t) { return renewal_count(dist, t, rng); });
}

std::string trajectory_csv(const CmjTrajectory& traj) {
  std::string out = "time,generation,ancestor1\n";
  for (const auto& e : traj.events()) {
    out += format_g17(e.time) + "," + std::to_string(e.generation) + "," + std::to_string(e.ancestor1) + "\n";
  }
  return out;
}

std::string embedded_tree_csv(const EmbeddedTree& et) {
  std::string out = "vertex,parent,birth_time\n";
  for (std::size_t i = 1; i < et.tree.parent.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(et.tree.parent[i]) + "," +
           format_g17(et.birth_times[i - 1]) + "\n";
  }
  return out;
}

}  // namespace cmjlab
