#include "cmjlab/limit_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cmjlab/format.hpp"
#include "cmjlab/parallel.hpp"

namespace cmjlab {

namespace {

double binomial(unsigned n, unsigned k) {
  double b = 1.0;
  for (unsigned i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

void check_args(unsigned k, unsigned l, double s, double u) {
  if (k < 1 || l < 1) throw std::invalid_argument("covariance: levels start at 1");
  if (s < 0.0 || u < 0.0) throw std::invalid_argument("covariance: times must be nonnegative");
}

}  // namespace

double cov_rkl(unsigned k, unsigned l, double s, double u) {
  check_args(k, l, s, u);
  if (u < s) return cov_rkl(l, k, u, s);
  // u >= s: expand (u - y)^{l-1} = ((u - s) + (s - y))^{l-1}.
  double sum = 0.0;
  for (unsigned j = 0; j < l; ++j) {
    sum += binomial(l - 1, j) / (k + j) * std::pow(s, static_cast<double>(k + j)) *
           std::pow(u - s, static_cast<double>(l - 1 - j));
  }
  return sum;
}

double cov_rkl_integral(unsigned k, unsigned l, double s, double u) {
  check_args(k, l, s, u);
  const double upper = std::min(s, u);
  if (upper == 0.0) return 0.0;
  auto integrand = [&](double y) {
    return std::pow(s - y, static_cast<double>(k - 1)) * std::pow(u - y, static_cast<double>(l - 1));
  };
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 15,
                                                                       1e-14, &error);
}

double marginal_sd(unsigned k, double s) {
  if (k < 1) throw std::invalid_argument("marginal_sd: k must be at least 1");
  if (s < 0.0) throw std::invalid_argument("marginal_sd: s must be nonnegative");
  return std::sqrt(std::pow(s, 2.0 * k - 1.0) / (2.0 * k - 1.0));
}

std::vector<GridIndex> grid_index(unsigned k_max, std::span<const double> t_grid) {
  std::vector<GridIndex> idx;
  idx.reserve(k_max * t_grid.size());
  for (unsigned k = 1; k <= k_max; ++k) {
    for (const double t : t_grid) idx.push_back({k, t});
  }
  return idx;
}

CovMatrix build_cov_matrix(unsigned k_max, std::span<const double> t_grid) {
  if (k_max < 1) throw std::invalid_argument("build_cov_matrix: k_max must be at least 1");
  CovMatrix cov;
  cov.index = grid_index(k_max, t_grid);
  const auto d = static_cast<Eigen::Index>(cov.index.size());
  cov.entries.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      const auto& ia = cov.index[static_cast<std::size_t>(a)];
      const auto& ib = cov.index[static_cast<std::size_t>(b)];
      const double v = cov_rkl(ia.k, ib.k, ia.t, ib.t);
      cov.entries(a, b) = v;
      cov.entries(b, a) = v;
    }
  }
  return cov;
}

CholeskyFactor factor_covariance(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("factor_covariance: matrix not square");
  if (!cov.isApprox(cov.transpose(), 1e-12)) {
    throw std::invalid_argument("factor_covariance: matrix not symmetric");
  }
  CholeskyFactor out;
  if (cov.size() == 0) return out;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    out.lower = llt.matrixL();
    return out;
  }
  const double jitter = 1e-12 * cov.diagonal().maxCoeff();
  Eigen::MatrixXd shifted = cov;
  shifted.diagonal().array() += jitter;
  llt.compute(shifted);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("factor_covariance: matrix is not positive semidefinite");
  }
  out.lower = llt.matrixL();
  out.jitter = jitter;
  return out;
}

GaussianGridSample sample_limit(const CovMatrix& cov, std::size_t M, std::uint64_t seed) {
  const CholeskyFactor chol = factor_covariance(cov.entries);
  const auto d = static_cast<Eigen::Index>(cov.dim());
  auto rows = run_replicates(M, seed, [&](RngStream& rng, std::size_t) {
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = rng.normal();
    return Eigen::VectorXd(chol.lower * z);
  });
  GaussianGridSample out;
  out.index = cov.index;
  out.jitter = chol.jitter;
  out.samples.resize(static_cast<Eigen::Index>(M), d);
  for (std::size_t r = 0; r < M; ++r) out.samples.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return out;
}

std::string index_label(const GridIndex& g) {
  return "R" + std::to_string(g.k) + "(" + format_number(g.t) + ")";
}

std::string cov_matrix_csv(const CovMatrix& cov) {
  std::string out = "index";
  for (const auto& g : cov.index) out += "," + index_label(g);
  out += "\n";
  for (Eigen::Index a = 0; a < cov.entries.rows(); ++a) {
    out += index_label(cov.index[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < cov.entries.cols(); ++b) out += "," + format_g17(cov.entries(a, b));
    out += "\n";
  }
  return out;
}

std::string samples_csv(const GaussianGridSample& s) {
  std::string out;
  for (std::size_t i = 0; i < s.index.size(); ++i) out += (i ? "," : "") + index_label(s.index[i]);
  out += "\n";
  for (Eigen::Index r = 0; r < s.samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.samples.cols(); ++c) out += (c ? "," : "") + format_g17(s.samples(r, c));
    out += "\n";
  }
  return out;
}

}  // namespace cmjlab
