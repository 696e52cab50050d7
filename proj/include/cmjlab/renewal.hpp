#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmjlab/distributions.hpp"

namespace cmjlab {

/// Renewal function U = U_1 and its convolution powers U_2, ..., U_k on the
/// uniform grid 0, h, ..., N h.
///
/// Nonlattice laws are discretized by product integration against the
/// piecewise-linear interpolant of U, which is exact whenever U is linear
/// (exponential increments). Lattice laws put every atom on a grid node and
/// the recursion is then exact at the nodes.
class RenewalTable {
 public:
  RenewalTable(IncrementDistribution dist, double h, std::vector<std::vector<double>> levels);

  const IncrementDistribution& dist() const noexcept { return dist_; }
  double h() const noexcept { return h_; }
  double mu() const noexcept { return dist_.mu(); }
  const LordenConstant& lorden() const noexcept { return lorden_; }
  std::size_t nodes() const noexcept { return levels_.front().size(); }
  double horizon() const noexcept { return h_ * static_cast<double>(nodes() - 1); }
  std::size_t k_max() const noexcept { return levels_.size(); }

  /// Grid values of U_k, k >= 1.
  std::span<const double> level(std::size_t k) const;

  /// U_k(t) by linear interpolation; U_0 := 1 on [0, inf), every U_k vanishes
  /// on (-inf, 0). Throws std::out_of_range beyond the table horizon.
  double value(std::size_t k, double t) const;

  /// Grid index of t, requiring t to sit on a node (within 1e-9 h).
  std::size_t node_index(double t) const;

  /// Appends U_{k_max + 1}.
  void push_level(std::vector<double> values);

 private:
  IncrementDistribution dist_;
  double h_;
  LordenConstant lorden_;
  std::vector<std::vector<double>> levels_;
};

inline constexpr std::size_t kMaxRenewalNodes = 10'000'001;

/// Solves U = F + U * F on [0, T] with step h. Rejects grids with more than
/// 1e7 steps, and lattice laws whose span is not a multiple of h.
RenewalTable renewal_function_grid(const IncrementDistribution& dist, double T, double h);

/// Fills U_2..U_{k_max} by Stieltjes convolution with dU.
void higher_renewal_grid(RenewalTable& table, std::size_t k_max);

/// Convenience: renewal_function_grid followed by higher_renewal_grid.
RenewalTable build_renewal_table(const IncrementDistribution& dist, double T, double h,
                                 std::size_t k_max);

namespace serial {
// Straight-line reference implementations of the two O(N^2) kernels.
RenewalTable renewal_function_grid(const IncrementDistribution& dist, double T, double h);
void higher_renewal_grid(RenewalTable& table, std::size_t k_max);
}  // namespace serial

/// Discretization weights of dF: U_i = (F_i + sum_{o>=1} w_o U_{i-o}) / (1 - w_0).
struct RenewalWeights {
  std::vector<double> cdf;     // F at the nodes
  std::vector<double> weight;  // w_o
};
RenewalWeights renewal_weights(const IncrementDistribution& dist, double h, std::size_t nodes);

/// Stieltjes integral over [0, t_i] of g(t_i - y) dU(y) for grid-sampled g.
double stieltjes_against_renewal(const RenewalTable& table, std::span<const double> g, std::size_t i);

struct LordenExtremes {
  double min_dev;  // min over the grid of U(t) - t/mu
  double max_dev;
};
LordenExtremes lorden_check(const RenewalTable& table);

struct BoundCheck {
  double worst_slack;   // max over grid of |dev| - bound(t)
  double worst_t;       // where worst_slack is attained
  double worst_excess;  // max over grid of |dev| - bound(t) - tol(t)
};

/// Bound on |U_k(t) - t^k/(k! mu^k)|: sum_{i<k} C(k,i) t^i c^{k-i} / (i! mu^i).
double uk_bound(double t, std::size_t k, double mu, double c);

/// Checks the U_k bound on every grid node; tol(t) = 10 h (1 + t)^(k-1).
BoundCheck uk_bound_check(const RenewalTable& table, std::size_t k);

/// int_[0,t] (t - z)^m dU(z).
double renewal_power_integral(const RenewalTable& table, unsigned m, double t);

/// Checks |int (t-z)^m dU(z) - t^{m+1}/((m+1) mu)| <= c t^m on every node;
/// tol(t) = 10 h (1 + t)^m.
BoundCheck power_integral_check(const RenewalTable& table, unsigned m);

/// 2 int U_{k-1}(t-y) U_k(t-y) dU(y) + int U_{k-1}^2(t-y) dU(y), the second
/// moment of sum_i U_{k-1}(t - S_i) 1{S_i <= t}.
double second_moment_rhs(const RenewalTable& table, std::size_t k, double t);

/// mu^{-1} int_0^t U_{k-1}(y) dy - t^k / (k! mu^k); trapezoid rule with a
/// fourth-order endpoint correction.
double yk3_exact(const RenewalTable& table, std::size_t k, double t);

/// Number of partial sums S_1, S_2, ... that are <= t.
std::uint64_t renewal_count(const IncrementDistribution& dist, double t, RngStream& rng);

struct MomentRatio {
  double ratio;
  double numerator;    // Monte Carlo E|N(t) - U(t)|^p
  double denominator;  // t^{p/2} E|Z|^p
  double std_error;    // standard error of ratio
  double u_at_t;
};

/// E|Z|^p for Z ~ normal(0, sigma2 / mu^3).
double normal_abs_moment(double variance, double p);

/// Monte Carlo estimate of E|N(t) - U(t)|^p / (t^{p/2} E|Z|^p). Builds a
/// renewal table for U(t) unless one covering t is supplied.
MomentRatio moment_ratio(const IncrementDistribution& dist, double t, double p, std::size_t M,
                         std::uint64_t seed, const RenewalTable* table = nullptr);

/// CSV `t,U,U2,...,Uk`.
std::string renewal_table_csv(const RenewalTable& table);
RenewalTable parse_renewal_table_csv(std::string_view csv, const IncrementDistribution& dist);

}  // namespace cmjlab
