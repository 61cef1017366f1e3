#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace qcert {

/// Closed interval [lo, hi] of reals. Arithmetic widens each endpoint by
/// one ulp outward so that the true value stays enclosed under
/// round-to-nearest.
class Interval {
 public:
  constexpr Interval() = default;
  constexpr explicit Interval(double point) : lo_(point), hi_(point) {}
  Interval(double lo, double hi);

  static Interval unbounded() {
    return {0.0, std::numeric_limits<double>::infinity()};
  }
  static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double mid() const { return 0.5 * (lo_ + hi_); }
  double width() const { return hi_ - lo_; }
  bool is_bounded() const { return std::isfinite(lo_) && std::isfinite(hi_); }
  bool contains(double v) const { return lo_ <= v && v <= hi_; }
  bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }

  /// Pads both ends outward by one ulp.
  Interval widened() const;

  Interval& operator+=(const Interval& o);
  Interval& operator*=(double s);

  friend Interval operator+(Interval a, const Interval& b) { return a += b; }
  friend Interval operator-(const Interval& a, const Interval& b);
  friend Interval operator*(const Interval& a, const Interval& b);
  friend Interval operator*(Interval a, double s) { return a *= s; }
  friend Interval operator*(double s, Interval a) { return a *= s; }
  friend Interval operator/(const Interval& a, const Interval& b);

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

Interval join(const Interval& a, const Interval& b);
Interval pow(const Interval& base, double exponent);
Interval sqrt(const Interval& x);

double round_down(double v);
double round_up(double v);

std::ostream& operator<<(std::ostream& os, const Interval& iv);

}  // namespace qcert
