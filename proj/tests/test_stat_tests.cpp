#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cmjlab/cmj.hpp"
#include "cmjlab/parallel.hpp"
#include "cmjlab/stat_tests.hpp"

using namespace cmjlab;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> normals(std::size_t M, double mean, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> x(M);
  for (auto& v : x) v = mean + rng.normal();
  return x;
}

}  // namespace

TEST_CASE("normalize_tree_profile") {
  const double n = 1000.0;
  for (unsigned k = 1; k <= 4; ++k) {
    double centre = std::pow(std::log(n), k);
    for (unsigned i = 2; i <= k; ++i) centre /= i;
    CHECK(normalize_tree_profile(centre, n, k) == doctest::Approx(0.0).scale(1.0));
  }
  CHECK(normalize_tree_profile(4.0, std::exp(2.0), 1) == doctest::Approx(std::sqrt(2.0)));
  // s rescales the centring
  CHECK(normalize_tree_profile(1.0, std::exp(2.0), 1, 0.5) == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS(normalize_tree_profile(1.0, 1.0, 1));
  CHECK_THROWS(normalize_tree_profile(1.0, 10.0, 0));
}

TEST_CASE("normalize_cmj") {
  CHECK(normalize_cmj(5000.0, 100.0, 2, 1.0, 1.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(normalize_cmj(110.0, 100.0, 1, 1.0, 1.0) == doctest::Approx(1.0));
  // k = 1 with general moments is (y - t/mu) / sqrt(sigma2 t / mu^3)
  CHECK(normalize_cmj(60.0, 100.0, 1, 2.0, 0.5) == doctest::Approx(10.0 / std::sqrt(0.5 * 100.0 / 8.0)));
  // gamma(2,2), k = 3
  const double t = 50.0;
  const double y = std::pow(t, 3) / 6.0;
  CHECK(normalize_cmj(y, t, 3, 1.0, 0.5) == doctest::Approx(0.0).scale(1.0));
  CHECK(normalize_cmj(0.0, 0.0, 2, 1.0, 1.0) == 0.0);
  CHECK_THROWS(normalize_cmj(1.0, 0.0, 1, 1.0, 1.0));
  CHECK_THROWS(normalize_cmj(1.0, 1.0, 1, 1.0, 0.0));
}

TEST_CASE("normalizations are order preserving") {
  RngStream rng(3, 0);
  std::vector<double> raw(200);
  for (auto& v : raw) v = static_cast<double>(rng.index(1000));
  for (unsigned k = 1; k <= 3; ++k) {
    std::vector<double> a(raw.size()), b(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      a[i] = normalize_tree_profile(raw[i], 5000.0, k);
      b[i] = normalize_cmj(raw[i], 40.0, k, 1.3, 0.7);
    }
    std::vector<std::size_t> o0(raw.size()), o1(raw.size()), o2(raw.size());
    std::iota(o0.begin(), o0.end(), 0);
    o1 = o0;
    o2 = o0;
    std::stable_sort(o0.begin(), o0.end(), [&](auto i, auto j) { return raw[i] < raw[j]; });
    std::stable_sort(o1.begin(), o1.end(), [&](auto i, auto j) { return a[i] < a[j]; });
    std::stable_sort(o2.begin(), o2.end(), [&](auto i, auto j) { return b[i] < b[j]; });
    CHECK(o0 == o1);
    CHECK(o0 == o2);
  }
}

TEST_CASE("kolmogorov_pvalue") {
  CHECK(kolmogorov_pvalue(0.0) == 1.0);
  CHECK(kolmogorov_pvalue(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_pvalue(1.9495) == doctest::Approx(0.001).epsilon(1e-2));
  double last = 1.0;
  for (double l = 0.05; l < 3.0; l += 0.05) {
    const double p = kolmogorov_pvalue(l);
    CHECK(p <= last);
    CHECK(p >= 0.0);
    last = p;
  }
  CHECK(ks_critical_value(0.001, 2500.0) == doctest::Approx(1.9495 / 50.0).epsilon(1e-3));
}

TEST_CASE("ks_one_sample under the null") {
  const auto x = normals(10000, 0.0, 5);
  const auto r = ks_one_sample(x, normal_target(0.0, 1.0));
  CHECK(r.n_eff == 10000.0);
  CHECK(r.mode == KsMode::OneSample);
  CHECK(r.statistic <= ks_critical_value(0.001, r.n_eff));
  CHECK(r.p_value > 0.001);
}

TEST_CASE("ks_one_sample: constant sample and exact cases") {
  const std::vector<double> constant(50, 0.3);
  CHECK(ks_one_sample(constant, normal_target(0.0, 1.0)).statistic >= 0.5);
  const std::vector<double> one{0.0};
  CHECK(ks_one_sample(one, normal_target(0.0, 1.0)).statistic == doctest::Approx(0.5));
  // point mass target: a sample sitting on the atom matches exactly
  const std::vector<double> atoms(10, 2.0);
  CHECK(ks_one_sample(atoms, normal_target(2.0, 0.0)).statistic == 0.0);
  CHECK_THROWS(ks_one_sample(std::vector<double>{}, normal_target(0.0, 1.0)));
  CHECK_THROWS(normal_target(0.0, -1.0));
}

TEST_CASE("ks_one_sample is invariant under increasing transforms") {
  const auto x = normals(3000, 0.2, 6);
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::exp(v); });
  const auto a = ks_one_sample(x, normal_target(0.0, 1.0));
  auto lognormal = [](double v) { return v <= 0.0 ? 0.0 : phi(std::log(v)); };
  const auto b = ks_one_sample(y, CdfTarget{lognormal, lognormal});
  CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-9));
}

TEST_CASE("ks_two_sample") {
  const auto a = normals(5000, 0.0, 7);
  const auto self = ks_two_sample(a, a);
  CHECK(self.statistic <= 1.0 / 5000.0);
  CHECK(self.n_eff == doctest::Approx(2500.0));
  CHECK(self.mode == KsMode::TwoSample);

  const auto b = normals(5000, 1.0, 8);
  const auto shifted = ks_two_sample(a, b);
  CHECK(shifted.statistic == doctest::Approx(2.0 * phi(0.5) - 1.0).epsilon(0.08));
  CHECK(shifted.statistic > ks_critical_value(0.001, shifted.n_eff));
  CHECK(shifted.p_value < 1e-10);

  const auto c = normals(3000, 0.0, 9);
  const auto same = ks_two_sample(a, c);
  CHECK(same.statistic <= ks_critical_value(0.001, same.n_eff));
  CHECK(same.n_eff == doctest::Approx(5000.0 * 3000.0 / 8000.0));

  // ties across samples are handled at the shared value
  const std::vector<double> x{1, 1, 2, 2};
  const std::vector<double> y{1, 2, 2, 2};
  CHECK(ks_two_sample(x, y).statistic == doctest::Approx(0.25));
  CHECK_THROWS(ks_two_sample(std::vector<double>{}, y));
}

TEST_CASE("empirical_cov") {
  Eigen::MatrixXd s(200, 3);
  RngStream rng(10, 0);
  for (int r = 0; r < 200; ++r) {
    const double z = rng.normal();
    s(r, 0) = z;
    s(r, 1) = z;
    s(r, 2) = rng.normal();
  }
  const auto est = empirical_cov(s);
  CHECK(est.cov(0, 0) == doctest::Approx(est.cov(1, 1)));
  CHECK(est.cov(0, 1) / std::sqrt(est.cov(0, 0) * est.cov(1, 1)) == doctest::Approx(1.0));
  CHECK(est.cov(0, 2) == doctest::Approx(est.cov(2, 0)));
  CHECK((est.se.array() > 0.0).all());
  CHECK_THROWS(empirical_cov(Eigen::MatrixXd(1, 2)));

  Eigen::MatrixXd tiny(2, 1);
  tiny << 1.0, 3.0;
  CHECK(empirical_cov(tiny).cov(0, 0) == doctest::Approx(2.0));

  Eigen::MatrixXd other = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS(compare_covariance(est, Eigen::MatrixXd::Identity(2, 2)));
  const auto cmp = compare_covariance(est, other);
  CHECK(cmp.max_abs_diff > 0.5);
  CHECK(cmp.violations >= 1);
}

TEST_CASE("standardized CMJ vector at t = 200, exp(1)") {
  FunctionalGridConfig cfg;
  cfg.s_grid = {1.0};
  cfg.k_max = 2;
  cfg.M = 2000;
  const auto rep = functional_grid_test(cfg, 77);
  REQUIRE(rep.index.size() == 2);
  // k = 1 with unit scaling against normal(0,1)
  std::vector<double> y1(cfg.M);
  for (std::size_t r = 0; r < cfg.M; ++r) y1[r] = rep.normalized(r, 0);
  CHECK(ks_one_sample(y1, normal_target(0.0, 1.0)).statistic <= 0.05);
  // off-diagonal of (Y1, sqrt(3) Y2) is sqrt(3)/2
  const double sqrt3 = std::sqrt(3.0);
  const double off = sqrt3 * rep.empirical.cov(0, 1);
  const double se = sqrt3 * rep.empirical.se(0, 1);
  CHECK(std::abs(off - sqrt3 / 2.0) <= 4.0 * se);
  CHECK(rep.covariance.max_z <= 4.0);
}

TEST_CASE("functional grid: s = 0 coordinates vanish") {
  FunctionalGridConfig cfg;
  cfg.s_grid = {0.0, 1.0};
  cfg.t = 30.0;
  cfg.M = 100;
  const auto rep = functional_grid_test(cfg, 1);
  for (std::size_t a = 0; a < rep.index.size(); ++a) {
    if (rep.index[a].t == 0.0) CHECK(rep.normalized.col(a).cwiseAbs().maxCoeff() == 0.0);
  }
  cfg.mode = GridMode::Tree;
  cfg.n_base = 500;
  const auto tree = functional_grid_test(cfg, 2);
  for (std::size_t a = 0; a < tree.index.size(); ++a) {
    if (tree.index[a].t == 0.0) CHECK(tree.normalized.col(a).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("functional grid: tree mode shape and sanity") {
  FunctionalGridConfig cfg;
  cfg.mode = GridMode::Tree;
  cfg.n_base = 2000;
  cfg.s_grid = {0.5, 1.0};
  cfg.k_max = 2;
  cfg.M = 400;
  const auto rep = functional_grid_test(cfg, 3);
  CHECK(rep.index.size() == 4);
  CHECK(rep.marginals.size() == 4);
  CHECK(rep.normalized.rows() == 400);
  CHECK(rep.reference.entries.rows() == 4);
  for (const auto& m : rep.marginals) CHECK(m.statistic < 0.5);
}

TEST_CASE("functional grid validation") {
  FunctionalGridConfig cfg;
  cfg.M = 10;
  cfg.s_grid = {};
  CHECK_THROWS(functional_grid_test(cfg, 1));
  cfg.s_grid = {1.0, 0.5};
  CHECK_THROWS(functional_grid_test(cfg, 1));
  cfg.s_grid = {1.0};
  cfg.k_max = 0;
  CHECK_THROWS(functional_grid_test(cfg, 1));
}
