#include "cmjlab/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "cmjlab/format.hpp"

namespace cmjlab {

IncrementDistribution::IncrementDistribution(IncrementKind kind, double p1, double p2)
    : kind_(kind), p1_(p1), p2_(p2) {
  switch (kind_) {
    case IncrementKind::Exponential:
      mu_ = 1.0 / p1_;
      sigma2_ = 1.0 / (p1_ * p1_);
      break;
    case IncrementKind::Gamma:
      mu_ = p1_ / p2_;
      sigma2_ = p1_ / (p2_ * p2_);
      break;
    case IncrementKind::Uniform:
      mu_ = 0.5 * (p1_ + p2_);
      sigma2_ = (p2_ - p1_) * (p2_ - p1_) / 12.0;
      break;
    case IncrementKind::Deterministic:
      mu_ = p1_;
      sigma2_ = 0.0;
      lattice_span_ = p1_;
      break;
  }
  second_moment_ = mu_ * mu_ + sigma2_;
}

IncrementDistribution IncrementDistribution::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("exp: rate must be positive");
  }
  return {IncrementKind::Exponential, rate, 0.0};
}

IncrementDistribution IncrementDistribution::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw std::invalid_argument("gamma: shape and rate must be positive");
  }
  return {IncrementKind::Gamma, shape, rate};
}

IncrementDistribution IncrementDistribution::uniform(double a, double b) {
  if (!(a >= 0.0)) throw std::invalid_argument("uniform: a must be nonnegative");
  if (!(b > a) || !std::isfinite(b)) throw std::invalid_argument("uniform: b must exceed a");
  return {IncrementKind::Uniform, a, b};
}

IncrementDistribution IncrementDistribution::deterministic(double d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("det: value must be positive");
  return {IncrementKind::Deterministic, d, 0.0};
}

double IncrementDistribution::cdf(double x) const {
  if (x < 0.0) return 0.0;
  switch (kind_) {
    case IncrementKind::Exponential:
      return -std::expm1(-p1_ * x);
    case IncrementKind::Gamma:
      return boost::math::gamma_p(p1_, p2_ * x);
    case IncrementKind::Uniform:
      if (x <= p1_) return 0.0;
      if (x >= p2_) return 1.0;
      return (x - p1_) / (p2_ - p1_);
    case IncrementKind::Deterministic:
      return x >= p1_ ? 1.0 : 0.0;
  }
  return 0.0;
}

double IncrementDistribution::partial_mean(double x) const {
  if (x <= 0.0) return 0.0;
  switch (kind_) {
    case IncrementKind::Exponential: {
      // int_0^x y r e^{-r y} dy
      const double rx = p1_ * x;
      return (-std::expm1(-rx) - rx * std::exp(-rx)) / p1_;
    }
    case IncrementKind::Gamma:
      return mu_ * boost::math::gamma_p(p1_ + 1.0, p2_ * x);
    case IncrementKind::Uniform: {
      const double hi = std::clamp(x, p1_, p2_);
      return (hi * hi - p1_ * p1_) / (2.0 * (p2_ - p1_));
    }
    case IncrementKind::Deterministic:
      return x >= p1_ ? p1_ : 0.0;
  }
  return 0.0;
}

double IncrementDistribution::sample(RngStream& rng) const {
  switch (kind_) {
    case IncrementKind::Exponential:
      return rng.exponential(p1_);
    case IncrementKind::Gamma:
      return rng.gamma(p1_, p2_);
    case IncrementKind::Uniform:
      return p1_ + (p2_ - p1_) * rng.uniform_pos();
    case IncrementKind::Deterministic:
      return p1_;
  }
  return 0.0;
}

std::string IncrementDistribution::descriptor() const {
  switch (kind_) {
    case IncrementKind::Exponential:
      return "exp(" + format_number(p1_) + ")";
    case IncrementKind::Gamma:
      return "gamma(" + format_number(p1_) + "," + format_number(p2_) + ")";
    case IncrementKind::Uniform:
      return "uniform(" + format_number(p1_) + "," + format_number(p2_) + ")";
    case IncrementKind::Deterministic:
      return "det(" + format_number(p1_) + ")";
  }
  return {};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_param(std::string_view s, std::string_view descriptor) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("bad parameter '" + std::string(s) + "' in '" +
                                std::string(descriptor) + "'");
  }
  return value;
}

}  // namespace

IncrementDistribution make_distribution(std::string_view descriptor) {
  const std::string_view d = trim(descriptor);
  const auto open = d.find('(');
  if (open == std::string_view::npos || d.back() != ')') {
    throw std::invalid_argument("distribution descriptor must look like name(p1[,p2]): '" +
                                std::string(descriptor) + "'");
  }
  const std::string_view name = trim(d.substr(0, open));
  const std::string_view body = d.substr(open + 1, d.size() - open - 2);

  std::vector<double> params;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    params.push_back(parse_param(body.substr(start, comma - start), descriptor));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }

  auto expect = [&](std::size_t n) {
    if (params.size() != n) {
      throw std::invalid_argument(std::string(name) + " expects " + std::to_string(n) +
                                  " parameter(s)");
    }
  };

  if (name == "exp") {
    expect(1);
    return IncrementDistribution::exponential(params[0]);
  }
  if (name == "gamma") {
    expect(2);
    return IncrementDistribution::gamma(params[0], params[1]);
  }
  if (name == "uniform") {
    expect(2);
    return IncrementDistribution::uniform(params[0], params[1]);
  }
  if (name == "det") {
    expect(1);
    return IncrementDistribution::deterministic(params[0]);
  }
  throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

LordenConstant lorden_constant(const IncrementDistribution& dist) {
  double c0 = dist.sigma2() / dist.second_moment();
  if (dist.is_lattice()) c0 += 2.0 * dist.lattice_span() / dist.mu();
  return {c0, std::max(c0, 1.0)};
}

}  // namespace cmjlab
