#include "qcert/interval.hpp"

#include <cmath>

#include "qcert/error.hpp"

namespace qcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Error-free transformations tell whether a rounded result is exact; only
// inexact results are pushed one ulp outward.
double two_sum_err(double a, double b, double s) {
  double bb = s - a;
  return (a - (s - bb)) + (b - bb);
}

double add_down(double a, double b) {
  double s = a + b;
  if (!std::isfinite(s)) return s;
  double e = two_sum_err(a, b, s);
  return e < 0.0 ? std::nextafter(s, -kInf) : s;
}

double add_up(double a, double b) {
  double s = a + b;
  if (!std::isfinite(s)) return s;
  double e = two_sum_err(a, b, s);
  return e > 0.0 ? std::nextafter(s, kInf) : s;
}

double mul_down(double a, double b) {
  double p = a * b;
  if (!std::isfinite(p)) return p;
  double e = std::fma(a, b, -p);
  return e < 0.0 ? std::nextafter(p, -kInf) : p;
}

double mul_up(double a, double b) {
  double p = a * b;
  if (!std::isfinite(p)) return p;
  double e = std::fma(a, b, -p);
  return e > 0.0 ? std::nextafter(p, kInf) : p;
}

// Residual a - q*b has the sign of (a/b - q) when b > 0.
double div_down(double a, double b) {
  double q = a / b;
  if (!std::isfinite(q) || b == 0.0) return q;
  double r = -std::fma(q, b, -a);
  if (b < 0.0) r = -r;
  return r < 0.0 ? std::nextafter(q, -kInf) : q;
}

double div_up(double a, double b) {
  double q = a / b;
  if (!std::isfinite(q) || b == 0.0) return q;
  double r = -std::fma(q, b, -a);
  if (b < 0.0) r = -r;
  return r > 0.0 ? std::nextafter(q, kInf) : q;
}

}  // namespace

double round_down(double v) { return std::nextafter(v, -kInf); }
double round_up(double v) { return std::nextafter(v, kInf); }

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  require(!(lo > hi), ErrorCode::InvalidArgument, "interval with lo > hi");
  require(!std::isnan(lo) && !std::isnan(hi), ErrorCode::InvalidArgument,
          "interval endpoint is NaN");
}

Interval Interval::widened() const { return {round_down(lo_), round_up(hi_)}; }

Interval& Interval::operator+=(const Interval& o) {
  lo_ = add_down(lo_, o.lo_);
  hi_ = add_up(hi_, o.hi_);
  return *this;
}

Interval& Interval::operator*=(double s) {
  if (s >= 0.0) {
    lo_ = mul_down(lo_, s);
    hi_ = mul_up(hi_, s);
  } else {
    double lo = mul_down(hi_, s);
    double hi = mul_up(lo_, s);
    lo_ = lo;
    hi_ = hi;
  }
  return *this;
}

Interval operator-(const Interval& a, const Interval& b) {
  return {add_down(a.lo_, -b.hi_), add_up(a.hi_, -b.lo_)};
}

Interval operator*(const Interval& a, const Interval& b) {
  double c[4][2] = {{a.lo_, b.lo_}, {a.lo_, b.hi_}, {a.hi_, b.lo_}, {a.hi_, b.hi_}};
  double lo = kInf, hi = -kInf;
  for (auto& p : c) {
    lo = std::min(lo, mul_down(p[0], p[1]));
    hi = std::max(hi, mul_up(p[0], p[1]));
  }
  return {lo, hi};
}

Interval operator/(const Interval& a, const Interval& b) {
  require(b.lo_ > 0.0 || b.hi_ < 0.0, ErrorCode::InvalidArgument,
          "interval division by an interval containing zero");
  double c[4][2] = {{a.lo_, b.lo_}, {a.lo_, b.hi_}, {a.hi_, b.lo_}, {a.hi_, b.hi_}};
  double lo = kInf, hi = -kInf;
  for (auto& p : c) {
    lo = std::min(lo, div_down(p[0], p[1]));
    hi = std::max(hi, div_up(p[0], p[1]));
  }
  return {lo, hi};
}

Interval join(const Interval& a, const Interval& b) {
  return {std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi())};
}

Interval pow(const Interval& base, double exponent) {
  require(base.lo() >= 0.0, ErrorCode::InvalidArgument, "pow of a possibly negative interval");
  double lo = std::pow(base.lo(), exponent);
  double hi = std::pow(base.hi(), exponent);
  if (exponent < 0.0) std::swap(lo, hi);
  // std::pow is not correctly rounded; pad unless the result is exact 0 or 1.
  auto pad_dn = [](double v) { return (v == 0.0 || v == 1.0) ? v : round_down(v); };
  auto pad_up = [](double v) { return (v == 0.0 || v == 1.0) ? v : round_up(v); };
  return {pad_dn(lo), pad_up(hi)};
}

Interval sqrt(const Interval& x) {
  require(x.lo() >= 0.0, ErrorCode::InvalidArgument, "sqrt of a possibly negative interval");
  // IEEE sqrt is correctly rounded; check exactness by squaring back.
  double lo = std::sqrt(x.lo());
  if (std::fma(lo, lo, -x.lo()) > 0.0) lo = round_down(lo);
  double hi = std::sqrt(x.hi());
  if (std::fma(hi, hi, -x.hi()) < 0.0) hi = round_up(hi);
  return {lo, hi};
}

std::ostream& operator<<(std::ostream& os, const Interval& iv) {
  return os << '[' << iv.lo() << ", " << iv.hi() << ']';
}

}  // namespace qcert
