#include "cmjlab/stat_tests.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cmjlab/cmj.hpp"
#include "cmjlab/parallel.hpp"
#include "cmjlab/recursive_tree.hpp"

namespace cmjlab {

namespace {

double factorial(unsigned k) {
  double f = 1.0;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

double normalize_tree_profile(double x, double n, unsigned k, double s) {
  if (!(n >= 2.0)) throw std::invalid_argument("normalize_tree_profile: n must be at least 2");
  if (k < 1) throw std::invalid_argument("normalize_tree_profile: k must be at least 1");
  const double ln = std::log(n);
  const double centre = std::pow(s * ln, static_cast<double>(k)) / factorial(k);
  return factorial(k - 1) * (x - centre) / std::pow(ln, k - 0.5);
}

double normalize_cmj(double y, double t, unsigned k, double mu, double sigma2, double s) {
  if (k < 1) throw std::invalid_argument("normalize_cmj: k must be at least 1");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("normalize_cmj: sigma2 must be positive");
  if (!(mu > 0.0)) throw std::invalid_argument("normalize_cmj: mu must be positive");
  if (!(t > 0.0)) {
    if (y == 0.0) return 0.0;
    throw std::invalid_argument("normalize_cmj: t must be positive");
  }
  const double centre = std::pow(s * t / mu, static_cast<double>(k)) / factorial(k);
  const double scale =
      std::sqrt(sigma2 * std::pow(mu, -(2.0 * k + 1.0)) * std::pow(t, 2.0 * k - 1.0));
  return factorial(k - 1) * (y - centre) / scale;
}

CdfTarget normal_target(double mean, double sd) {
  if (sd < 0.0) throw std::invalid_argument("normal_target: negative sd");
  if (sd == 0.0) {
    return {[mean](double x) { return x >= mean ? 1.0 : 0.0; },
            [mean](double x) { return x > mean ? 1.0 : 0.0; }};
  }
  auto cdf = [mean, sd](double x) { return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2)); };
  return {cdf, cdf};
}

double kolmogorov_pvalue(double lambda) {
  if (!(lambda > 0.3)) return 1.0;  // the series equals 1 to better than 1e-5 here
  double sum = 0.0;
  for (int j = 1; j <= 20; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1) ? term : -term;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_critical_value(double alpha, double n_eff) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n_eff);
}

KsReport ks_one_sample(std::span<const double> values, const CdfTarget& target) {
  if (values.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < x.size()) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double below = static_cast<double>(i) / n;  // ECDF left limit
    const double at = static_cast<double>(j) / n;     // ECDF at x[i]
    d = std::max(d, std::abs(at - target.cdf(x[i])));
    d = std::max(d, std::abs(below - target.cdf_left(x[i])));
    i = j;
  }
  KsReport r;
  r.statistic = std::min(d, 1.0);
  r.n_eff = n;
  r.p_value = kolmogorov_pvalue(std::sqrt(n) * r.statistic);
  r.mode = KsMode::OneSample;
  return r;
}

KsReport ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) {
      v = x[i];
    } else {
      v = y[j];
    }
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsReport r;
  r.statistic = d;
  r.n_eff = na * nb / (na + nb);
  r.p_value = kolmogorov_pvalue(std::sqrt(r.n_eff) * d);
  r.mode = KsMode::TwoSample;
  return r;
}

CovEstimate empirical_cov(const Eigen::MatrixXd& samples) {
  const Eigen::Index m = samples.rows();
  if (m < 2) throw std::invalid_argument("empirical_cov: need at least two draws");
  CovEstimate est;
  est.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centred = samples.rowwise() - est.mean.transpose();
  est.cov = (centred.transpose() * centred) / static_cast<double>(m - 1);
  const Eigen::MatrixXd sq = centred.array().square().matrix();
  const Eigen::MatrixXd fourth = (sq.transpose() * sq) / static_cast<double>(m);
  const Eigen::MatrixXd biased = (centred.transpose() * centred) / static_cast<double>(m);
  est.se = ((fourth.array() - biased.array().square()).max(0.0) / static_cast<double>(m)).sqrt().matrix();
  return est;
}

CovComparison compare_covariance(const CovEstimate& est, const Eigen::MatrixXd& reference,
                                 double z_budget) {
  if (est.cov.rows() != reference.rows() || est.cov.cols() != reference.cols()) {
    throw std::invalid_argument("compare_covariance: shape mismatch");
  }
  CovComparison c;
  c.z_budget = z_budget;
  for (Eigen::Index a = 0; a < reference.rows(); ++a) {
    for (Eigen::Index b = a; b < reference.cols(); ++b) {
      const double diff = std::abs(est.cov(a, b) - reference(a, b));
      const double se = est.se(a, b);
      c.max_abs_diff = std::max(c.max_abs_diff, diff);
      if (se > 0.0) c.max_z = std::max(c.max_z, diff / se);
      if (diff > z_budget * se) ++c.violations;
    }
  }
  return c;
}

FunctionalGridReport functional_grid_test(const FunctionalGridConfig& config, std::uint64_t seed) {
  if (config.s_grid.empty()) throw std::invalid_argument("functional_grid_test: empty grid");
  if (config.k_max < 1) throw std::invalid_argument("functional_grid_test: k_max must be at least 1");
  for (std::size_t i = 0; i < config.s_grid.size(); ++i) {
    if (config.s_grid[i] < 0.0 || (i > 0 && config.s_grid[i] < config.s_grid[i - 1])) {
      throw std::invalid_argument("functional_grid_test: grid must be nonnegative and increasing");
    }
  }
  FunctionalGridReport report;
  report.index = grid_index(config.k_max, config.s_grid);
  const std::size_t dim = report.index.size();
  const double s_max = config.s_grid.back();

  const auto rows = run_replicates(config.M, seed, [&](RngStream& rng, std::size_t) {
    std::vector<double> row(dim);
    if (config.mode == GridMode::Cmj) {
      const auto& d = config.dist;
      const CmjTrajectory traj = simulate_cmj(d, config.t * s_max, config.k_max, rng);
      for (std::size_t a = 0; a < dim; ++a) {
        const auto& g = report.index[a];
        const double y = static_cast<double>(count_generation(traj, g.k, config.t * g.t));
        row[a] = normalize_cmj(y, config.t, g.k, d.mu(), d.sigma2(), g.t);
      }
    } else {
      const ProfilePath path = grow_and_record(config.n_base, config.s_grid, config.k_max, rng);
      const auto n = static_cast<double>(config.n_base);
      const std::size_t per_k = config.s_grid.size();
      for (std::size_t a = 0; a < dim; ++a) {
        const auto& g = report.index[a];
        const double x = static_cast<double>(path.values[a % per_k][g.k - 1]);
        row[a] = g.t == 0.0 ? 0.0 : normalize_tree_profile(x, n, g.k, g.t);
      }
    }
    return row;
  });

  report.normalized.resize(static_cast<Eigen::Index>(config.M), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t a = 0; a < dim; ++a) {
      report.normalized(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = rows[r][a];
    }
  }

  std::vector<double> column(config.M);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t r = 0; r < config.M; ++r) column[r] = rows[r][a];
    const auto& g = report.index[a];
    report.marginals.push_back(ks_one_sample(column, normal_target(0.0, marginal_sd(g.k, g.t))));
  }

  report.empirical = empirical_cov(report.normalized);
  report.reference = build_cov_matrix(config.k_max, config.s_grid);
  report.covariance = compare_covariance(report.empirical, report.reference.entries);
  return report;
}

}  // namespace cmjlab
