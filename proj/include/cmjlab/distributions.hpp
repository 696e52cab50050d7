#pragma once

#include <string>
#include <string_view>

#include "cmjlab/rng.hpp"

namespace cmjlab {

enum class IncrementKind { Exponential, Gamma, Uniform, Deterministic };

/// Law of a positive random-walk increment. Immutable after construction.
class IncrementDistribution {
 public:
  static IncrementDistribution exponential(double rate);
  static IncrementDistribution gamma(double shape, double rate);
  static IncrementDistribution uniform(double a, double b);
  static IncrementDistribution deterministic(double d);

  IncrementKind kind() const noexcept { return kind_; }
  double param1() const noexcept { return p1_; }
  double param2() const noexcept { return p2_; }

  double mu() const noexcept { return mu_; }
  double sigma2() const noexcept { return sigma2_; }
  double second_moment() const noexcept { return second_moment_; }
  /// Span of the lattice carrying the law, 0 for nonlattice laws.
  double lattice_span() const noexcept { return lattice_span_; }
  bool is_lattice() const noexcept { return lattice_span_ > 0.0; }

  /// P(xi <= x), right-continuous.
  double cdf(double x) const;
  /// E[xi; xi <= x].
  double partial_mean(double x) const;

  double sample(RngStream& rng) const;

  /// Canonical descriptor, e.g. "gamma(2,2)".
  std::string descriptor() const;

 private:
  IncrementDistribution(IncrementKind kind, double p1, double p2);

  IncrementKind kind_;
  double p1_;
  double p2_;
  double mu_ = 0.0;
  double sigma2_ = 0.0;
  double second_moment_ = 0.0;
  double lattice_span_ = 0.0;
};

/// Parses `name(p1[,p2])` with name in exp|gamma|uniform|det.
/// Throws std::invalid_argument on unknown names or invalid parameters.
IncrementDistribution make_distribution(std::string_view descriptor);

inline double sample_increment(const IncrementDistribution& dist, RngStream& rng) {
  return dist.sample(rng);
}

struct LordenConstant {
  double c0;
  double c;  // max(c0, 1)
};

/// Constant in the renewal-function bound -1 <= U(t) - t/mu <= c0:
/// c0 = Var/E xi^2 for nonlattice laws, 2*span/mu + Var/E xi^2 for lattice laws.
LordenConstant lorden_constant(const IncrementDistribution& dist);

}  // namespace cmjlab
