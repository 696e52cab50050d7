#include "cmjlab/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cmjlab/format.hpp"
#include "cmjlab/parallel.hpp"

namespace cmjlab {

RenewalTable::RenewalTable(IncrementDistribution dist, double h,
                           std::vector<std::vector<double>> levels)
    : dist_(dist), h_(h), lorden_(lorden_constant(dist)), levels_(std::move(levels)) {
  if (!(h_ > 0.0)) throw std::invalid_argument("RenewalTable: step must be positive");
  if (levels_.empty() || levels_.front().empty()) {
    throw std::invalid_argument("RenewalTable: empty table");
  }
  for (const auto& lv : levels_) {
    if (lv.size() != levels_.front().size()) {
      throw std::invalid_argument("RenewalTable: ragged levels");
    }
  }
}

std::span<const double> RenewalTable::level(std::size_t k) const {
  if (k < 1 || k > levels_.size()) {
    throw std::out_of_range("RenewalTable: level " + std::to_string(k) + " not available");
  }
  return levels_[k - 1];
}

double RenewalTable::value(std::size_t k, double t) const {
  if (t < 0.0) return 0.0;
  if (t > horizon() * (1.0 + 1e-12)) {
    throw std::out_of_range("RenewalTable: table coverage insufficient for t = " + format_number(t));
  }
  if (k == 0) return 1.0;
  const auto u = level(k);
  const double pos = t / h_;
  const auto i = std::min(static_cast<std::size_t>(pos), u.size() - 1);
  if (i + 1 >= u.size()) return u.back();
  const double frac = pos - static_cast<double>(i);
  return u[i] + frac * (u[i + 1] - u[i]);
}

std::size_t RenewalTable::node_index(double t) const {
  const double pos = t / h_;
  const double r = std::round(pos);
  if (t < 0.0 || std::abs(pos - r) > 1e-9 * std::max(1.0, pos)) {
    throw std::invalid_argument("RenewalTable: t = " + format_number(t) + " is not a grid node");
  }
  const auto i = static_cast<std::size_t>(r);
  if (i >= nodes()) throw std::out_of_range("RenewalTable: table coverage insufficient");
  return i;
}

void RenewalTable::push_level(std::vector<double> values) {
  if (values.size() != nodes()) throw std::invalid_argument("RenewalTable: level size mismatch");
  levels_.push_back(std::move(values));
}

namespace {

std::size_t grid_steps(double T, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("renewal grid: h must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("renewal grid: T must be nonnegative");
  const double steps = std::ceil(T / h - 1e-9);
  if (steps + 1.0 > static_cast<double>(kMaxRenewalNodes)) {
    throw std::length_error("renewal grid: more than 1e7 steps");
  }
  return static_cast<std::size_t>(steps);
}

std::size_t lattice_offset(const IncrementDistribution& dist, double h) {
  const double ratio = dist.lattice_span() / h;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9 * ratio) {
    throw std::invalid_argument("renewal grid: step must divide the lattice span of " +
                                dist.descriptor());
  }
  return static_cast<std::size_t>(r);
}

}  // namespace

RenewalWeights renewal_weights(const IncrementDistribution& dist, double h, std::size_t nodes) {
  RenewalWeights rw;
  rw.cdf.assign(nodes, 0.0);
  rw.weight.assign(nodes, 0.0);
  if (dist.is_lattice()) {
    const std::size_t j = lattice_offset(dist, h);
    if (j < nodes) {
      rw.weight[j] = 1.0;
      std::fill(rw.cdf.begin() + static_cast<std::ptrdiff_t>(j), rw.cdf.end(), 1.0);
    }
    return rw;
  }
  // Cell j = ((j-1)h, jh]. Linear interpolation of U across the cell splits
  // its mass into alpha_j (towards offset j-1) and beta_j (towards offset j).
  std::vector<double> pm(nodes + 1);
  std::vector<double> cdf_ext(nodes + 1);
  for (std::size_t i = 0; i <= nodes; ++i) {
    const double x = h * static_cast<double>(i);
    cdf_ext[i] = dist.cdf(x);
    pm[i] = dist.partial_mean(x);
  }
  for (std::size_t j = 1; j <= nodes; ++j) {
    const double mass = cdf_ext[j] - cdf_ext[j - 1];
    const double first = pm[j] - pm[j - 1];
    const double alpha = std::max(0.0, (h * static_cast<double>(j) * mass - first) / h);
    const double beta = std::max(0.0, mass - alpha);
    if (j < nodes) rw.weight[j] += beta;
    rw.weight[j - 1] += alpha;
  }
  std::copy(cdf_ext.begin(), cdf_ext.begin() + static_cast<std::ptrdiff_t>(nodes), rw.cdf.begin());
  return rw;
}

RenewalTable renewal_function_grid(const IncrementDistribution& dist, double T, double h) {
  const std::size_t n = grid_steps(T, h) + 1;
  const RenewalWeights rw = renewal_weights(dist, h, n);
  const double* w = rw.weight.data();
  const double scale = 1.0 / (1.0 - w[0]);

  std::vector<double> u(n, 0.0);
  std::vector<double> history(n, 0.0);
  u[0] = rw.cdf[0] * scale;

  // Blocked Volterra solve. Contributions from earlier blocks are computed in
  // parallel, each with a fixed serial summation order, so the result does not
  // depend on the worker count.
  constexpr std::size_t kBlock = 256;
  for (std::size_t b0 = 1; b0 < n; b0 += kBlock) {
    const std::size_t b1 = std::min(n, b0 + kBlock);
    const auto lo = static_cast<std::int64_t>(b0);
    const auto hi = static_cast<std::int64_t>(b1);
#pragma omp parallel for schedule(static) if (b0 > 4 * kBlock)
    for (std::int64_t ii = lo; ii < hi; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double acc = 0.0;
      for (std::size_t o = i - b0 + 1; o < i; ++o) acc += w[o] * u[i - o];
      history[i] = acc;
    }
    for (std::size_t i = b0; i < b1; ++i) {
      double acc = history[i];
      for (std::size_t o = 1; o <= i - b0; ++o) acc += w[o] * u[i - o];
      u[i] = (rw.cdf[i] + acc) * scale;
    }
  }
  return RenewalTable(dist, h, {std::move(u)});
}

namespace {

double convolve_at(std::span<const double> prev, std::span<const double> du, double u0,
                   bool lattice, std::size_t i) {
  double acc = u0 * prev[i];
  if (lattice) {
    for (std::size_t j = 1; j <= i; ++j) acc += du[j] * prev[i - j];
  } else {
    for (std::size_t j = 1; j <= i; ++j) acc += du[j] * 0.5 * (prev[i - j] + prev[i - j + 1]);
  }
  return acc;
}

std::vector<double> increments(std::span<const double> u) {
  std::vector<double> du(u.size(), 0.0);
  for (std::size_t j = 1; j < u.size(); ++j) du[j] = u[j] - u[j - 1];
  return du;
}

}  // namespace

void higher_renewal_grid(RenewalTable& table, std::size_t k_max) {
  const auto u = table.level(1);
  const std::vector<double> du = increments(u);
  const bool lattice = table.dist().is_lattice();
  const std::size_t n = table.nodes();
  while (table.k_max() < k_max) {
    const auto prev = table.level(table.k_max());
    std::vector<double> next(n, 0.0);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      next[i] = convolve_at(prev, du, u[0], lattice, i);
    }
    table.push_level(std::move(next));
  }
}

RenewalTable build_renewal_table(const IncrementDistribution& dist, double T, double h,
                                 std::size_t k_max) {
  RenewalTable table = renewal_function_grid(dist, T, h);
  higher_renewal_grid(table, k_max);
  return table;
}

namespace serial {

RenewalTable renewal_function_grid(const IncrementDistribution& dist, double T, double h) {
  const std::size_t n = grid_steps(T, h) + 1;
  const RenewalWeights rw = renewal_weights(dist, h, n);
  const double scale = 1.0 / (1.0 - rw.weight[0]);
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = rw.cdf[i];
    for (std::size_t o = 1; o < i; ++o) acc += rw.weight[o] * u[i - o];
    u[i] = acc * scale;
  }
  return RenewalTable(dist, h, {std::move(u)});
}

void higher_renewal_grid(RenewalTable& table, std::size_t k_max) {
  const auto u = table.level(1);
  const std::vector<double> du = increments(u);
  const bool lattice = table.dist().is_lattice();
  while (table.k_max() < k_max) {
    const auto prev = table.level(table.k_max());
    std::vector<double> next(table.nodes(), 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = convolve_at(prev, du, u[0], lattice, i);
    table.push_level(std::move(next));
  }
}

}  // namespace serial

double stieltjes_against_renewal(const RenewalTable& table, std::span<const double> g,
                                 std::size_t i) {
  const auto u = table.level(1);
  if (i >= u.size() || i >= g.size()) throw std::out_of_range("stieltjes: index beyond table");
  double acc = u[0] * g[i];
  if (table.dist().is_lattice()) {
    for (std::size_t j = 1; j <= i; ++j) acc += (u[j] - u[j - 1]) * g[i - j];
  } else {
    for (std::size_t j = 1; j <= i; ++j) acc += (u[j] - u[j - 1]) * 0.5 * (g[i - j] + g[i - j + 1]);
  }
  return acc;
}

namespace {

// Evaluates f(i) at the two nodes bracketing t and interpolates linearly.
template <class F>
double at_time(const RenewalTable& table, double t, F&& f) {
  if (t < 0.0) throw std::invalid_argument("negative time");
  if (t > table.horizon() * (1.0 + 1e-12)) {
    throw std::out_of_range("renewal table coverage insufficient for t = " + format_number(t));
  }
  const double pos = t / table.h();
  const double r = std::round(pos);
  if (std::abs(pos - r) <= 1e-9 * std::max(1.0, pos)) {
    return f(std::min(static_cast<std::size_t>(r), table.nodes() - 1));
  }
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return (1.0 - frac) * f(i) + frac * f(i + 1);
}

double factorial(std::size_t k) {
  double f = 1.0;
  for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

}  // namespace

LordenExtremes lorden_check(const RenewalTable& table) {
  const auto u = table.level(1);
  LordenExtremes e{u[0], u[0]};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double dev = u[i] - table.h() * static_cast<double>(i) / table.mu();
    e.min_dev = std::min(e.min_dev, dev);
    e.max_dev = std::max(e.max_dev, dev);
  }
  return e;
}

double uk_bound(double t, std::size_t k, double mu, double c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sum += binomial(k, i) * std::pow(t, static_cast<double>(i)) *
           std::pow(c, static_cast<double>(k - i)) / (factorial(i) * std::pow(mu, static_cast<double>(i)));
  }
  return sum;
}

BoundCheck uk_bound_check(const RenewalTable& table, std::size_t k) {
  const auto uk = table.level(k);
  const double mu = table.mu();
  const double c = table.lorden().c;
  const double lead = factorial(k) * std::pow(mu, static_cast<double>(k));
  BoundCheck out{-INFINITY, 0.0, -INFINITY};
  for (std::size_t i = 0; i < uk.size(); ++i) {
    const double t = table.h() * static_cast<double>(i);
    const double dev = std::abs(uk[i] - std::pow(t, static_cast<double>(k)) / lead);
    const double slack = dev - uk_bound(t, k, mu, c);
    const double tol = 10.0 * table.h() * std::pow(1.0 + t, static_cast<double>(k - 1));
    if (slack > out.worst_slack) {
      out.worst_slack = slack;
      out.worst_t = t;
    }
    out.worst_excess = std::max(out.worst_excess, slack - tol);
  }
  return out;
}

namespace {

std::vector<double> power_samples(std::size_t n, double h, unsigned m) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(h * static_cast<double>(i), static_cast<double>(m));
  return g;
}

}  // namespace

double renewal_power_integral(const RenewalTable& table, unsigned m, double t) {
  const std::vector<double> g = power_samples(table.nodes(), table.h(), m);
  return at_time(table, t, [&](std::size_t i) { return stieltjes_against_renewal(table, g, i); });
}

BoundCheck power_integral_check(const RenewalTable& table, unsigned m) {
  const std::vector<double> g = power_samples(table.nodes(), table.h(), m);
  const double mu = table.mu();
  const double c = table.lorden().c;
  const auto n = static_cast<std::int64_t>(table.nodes());
  std::vector<double> slack(table.nodes());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double t = table.h() * static_cast<double>(i);
    const double integral = stieltjes_against_renewal(table, g, i);
    const double dev = std::abs(integral - std::pow(t, m + 1.0) / ((m + 1.0) * mu));
    slack[i] = dev - c * std::pow(t, static_cast<double>(m));
  }
  BoundCheck out{-INFINITY, 0.0, -INFINITY};
  for (std::size_t i = 0; i < slack.size(); ++i) {
    const double t = table.h() * static_cast<double>(i);
    if (slack[i] > out.worst_slack) {
      out.worst_slack = slack[i];
      out.worst_t = t;
    }
    const double tol = 10.0 * table.h() * std::pow(1.0 + t, static_cast<double>(m));
    out.worst_excess = std::max(out.worst_excess, slack[i] - tol);
  }
  return out;
}

double second_moment_rhs(const RenewalTable& table, std::size_t k, double t) {
  if (k < 1) throw std::invalid_argument("second_moment_rhs: k must be at least 1");
  const std::size_t n = table.nodes();
  const auto uk = table.level(k);
  std::vector<double> prev(n, 1.0);
  if (k >= 2) {
    const auto p = table.level(k - 1);
    prev.assign(p.begin(), p.end());
  }
  std::vector<double> cross(n);
  std::vector<double> square(n);
  for (std::size_t i = 0; i < n; ++i) {
    cross[i] = prev[i] * uk[i];
    square[i] = prev[i] * prev[i];
  }
  return at_time(table, t, [&](std::size_t i) {
    return 2.0 * stieltjes_against_renewal(table, cross, i) +
           stieltjes_against_renewal(table, square, i);
  });
}

double yk3_exact(const RenewalTable& table, std::size_t k, double t) {
  if (k < 1) throw std::invalid_argument("yk3_exact: k must be at least 1");
  if (t < 0.0) throw std::invalid_argument("yk3_exact: negative time");
  if (t > table.horizon() * (1.0 + 1e-12)) {
    throw std::out_of_range("yk3_exact: table coverage insufficient");
  }
  const double mu = table.mu();
  const double poly = std::pow(t, static_cast<double>(k)) / (factorial(k) * std::pow(mu, static_cast<double>(k)));
  if (k == 1) return t / mu - poly;
  const auto prev = table.level(k - 1);
  const double h = table.h();
  const auto full = std::min(static_cast<std::size_t>(t / h), table.nodes() - 1);
  double integral = 0.0;
  for (std::size_t i = 0; i < full; ++i) integral += 0.5 * h * (prev[i] + prev[i + 1]);
  if (full >= 3) {
    // Endpoint correction -h^2/12 (f'(b) - f'(a)) with 4-point one-sided
    // derivatives; exact for cubics.
    const std::size_t m = full;
    const double da = -11.0 * prev[0] + 18.0 * prev[1] - 9.0 * prev[2] + 2.0 * prev[3];
    const double db = 11.0 * prev[m] - 18.0 * prev[m - 1] + 9.0 * prev[m - 2] - 2.0 * prev[m - 3];
    integral -= h * (db - da) / 72.0;
  }
  const double rest = t - h * static_cast<double>(full);
  if (rest > 0.0) integral += 0.5 * rest * (prev[full] + table.value(k - 1, t));
  return integral / mu - poly;
}

std::uint64_t renewal_count(const IncrementDistribution& dist, double t, RngStream& rng) {
  std::uint64_t count = 0;
  double s = dist.sample(rng);
  while (s <= t) {
    ++count;
    s += dist.sample(rng);
  }
  return count;
}

double normal_abs_moment(double variance, double p) {
  return std::pow(2.0 * variance, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

MomentRatio moment_ratio(const IncrementDistribution& dist, double t, double p, std::size_t M,
                         std::uint64_t seed, const RenewalTable* table) {
  if (!(dist.sigma2() > 0.0)) throw std::invalid_argument("moment_ratio: degenerate increment law");
  if (!(p >= 2.0)) throw std::invalid_argument("moment_ratio: p must be at least 2");
  if (!(t > 0.0)) throw std::invalid_argument("moment_ratio: t must be positive");
  if (M < 2) throw std::invalid_argument("moment_ratio: need at least two samples");

  double u_t = 0.0;
  if (table != nullptr) {
    u_t = table->value(1, t);
  } else {
    const double h = std::max(0.01, t / 1.0e4);
    u_t = renewal_function_grid(dist, t + h, h).value(1, t);
  }

  const auto dev = run_replicates(M, seed, [&](RngStream& rng, std::size_t) {
    return std::pow(std::abs(static_cast<double>(renewal_count(dist, t, rng)) - u_t), p);
  });
  double mean = 0.0;
  for (const double d : dev) mean += d;
  mean /= static_cast<double>(M);
  double ss = 0.0;
  for (const double d : dev) ss += (d - mean) * (d - mean);
  const double se = std::sqrt(ss / static_cast<double>(M - 1) / static_cast<double>(M));

  const double variance = dist.sigma2() / std::pow(dist.mu(), 3.0);
  const double denom = std::pow(t, p / 2.0) * normal_abs_moment(variance, p);
  return {mean / denom, mean, denom, se / denom, u_t};
}

std::string renewal_table_csv(const RenewalTable& table) {
  std::string out = "t,U";
  for (std::size_t k = 2; k <= table.k_max(); ++k) out += ",U" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < table.nodes(); ++i) {
    out += format_g17(table.h() * static_cast<double>(i));
    for (std::size_t k = 1; k <= table.k_max(); ++k) out += "," + format_g17(table.level(k)[i]);
    out += "\n";
  }
  return out;
}

RenewalTable parse_renewal_table_csv(std::string_view csv, const IncrementDistribution& dist) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("renewal table csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "t" || header[1] != "U") {
    throw std::invalid_argument("renewal table csv: header must start with t,U");
  }
  for (std::size_t k = 2; k < header.size(); ++k) {
    if (header[k] != "U" + std::to_string(k)) {
      throw std::invalid_argument("renewal table csv: unexpected column " + header[k]);
    }
  }
  const std::size_t levels = header.size() - 1;
  std::vector<double> ts;
  std::vector<std::vector<double>> cols(levels);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("renewal table csv: bad number '" + cell + "'");
      }
    }
    if (row.size() != header.size()) throw std::invalid_argument("renewal table csv: ragged row");
    ts.push_back(row[0]);
    for (std::size_t k = 0; k < levels; ++k) cols[k].push_back(row[k + 1]);
  }
  if (ts.size() < 2) throw std::invalid_argument("renewal table csv: need at least two rows");
  const double h = ts[1] - ts[0];
  if (ts[0] != 0.0 || !(h > 0.0)) throw std::invalid_argument("renewal table csv: grid must start at 0");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (std::abs(ts[i] - h * static_cast<double>(i)) > 1e-9 * std::max(1.0, ts[i])) {
      throw std::invalid_argument("renewal table csv: grid is not uniform");
    }
  }
  return RenewalTable(dist, h, std::move(cols));
}

}  // namespace cmjlab
