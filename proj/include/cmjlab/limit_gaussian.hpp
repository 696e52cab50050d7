#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cmjlab {

/// E R_k(s) R_l(u) for the Riemann-Liouville processes
/// R_k(s) = int_0^s (s - y)^{k-1} dB(y), from the binomial expansion.
double cov_rkl(unsigned k, unsigned l, double s, double u);

/// Same covariance by adaptive Gauss-Kronrod quadrature of
/// int_0^{min(s,u)} (s - y)^{k-1} (u - y)^{l-1} dy. Independent oracle for cov_rkl.
double cov_rkl_integral(unsigned k, unsigned l, double s, double u);

/// Standard deviation of R_k(s): sqrt(s^{2k-1} / (2k - 1)).
double marginal_sd(unsigned k, double s);

struct GridIndex {
  unsigned k;
  double t;
};

/// Covariance over the index set {(k, t) : 1 <= k <= k_max, t in t_grid},
/// ordered k-major.
struct CovMatrix {
  std::vector<GridIndex> index;
  Eigen::MatrixXd entries;

  std::size_t dim() const noexcept { return index.size(); }
};

std::vector<GridIndex> grid_index(unsigned k_max, std::span<const double> t_grid);
CovMatrix build_cov_matrix(unsigned k_max, std::span<const double> t_grid);

/// Lower Cholesky factor; retries once with diagonal jitter 1e-12 * max
/// diagonal. Throws std::runtime_error if the matrix is still not factorable.
struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // added to the diagonal, 0 when none was needed
};
CholeskyFactor factor_covariance(const Eigen::MatrixXd& cov);

struct GaussianGridSample {
  std::vector<GridIndex> index;
  Eigen::MatrixXd samples;  // M x dim
  double jitter = 0.0;
};

/// M exact draws of the Gaussian vector with covariance `cov`; row r uses
/// RngStream(seed, r).
GaussianGridSample sample_limit(const CovMatrix& cov, std::size_t M, std::uint64_t seed);

std::string index_label(const GridIndex& g);
std::string cov_matrix_csv(const CovMatrix& cov);
std::string samples_csv(const GaussianGridSample& s);

}  // namespace cmjlab
