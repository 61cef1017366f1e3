#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qcert/error.hpp"
#include "qcert/interval.hpp"

namespace qcert {

using Index = std::size_t;
using Complex = std::complex<double>;

/// Discrete state space. A finite space has states 0..n-1; a windowed
/// countable space exposes the window 0..x_max of an infinite space and
/// treats everything beyond x_max as tail.
class StateSpace {
 public:
  enum class Kind { Finite, WindowedCountable };

  static StateSpace finite(Index n);
  static StateSpace windowed(Index x_max);

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  /// Number of states represented explicitly.
  Index size() const { return size_; }
  Index x_max() const { return size_ - 1; }

  friend bool operator==(const StateSpace&, const StateSpace&) = default;

 private:
  StateSpace(Kind kind, Index size) : kind_(kind), size_(size) {}
  Kind kind_ = Kind::Finite;
  Index size_ = 1;
};

template <class Scalar>
struct Atom {
  Index state;
  Scalar weight;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finitely supported measure on a window, plus a bound on the total
/// variation of whatever is not represented (mass outside the window, or
/// mass routed through it). `tail_reach` is how far beyond x_max that
/// unrepresented mass can sit, when known.
template <class Scalar>
class BasicMeasure {
 public:
  BasicMeasure() : space_(StateSpace::finite(1)) {}
  BasicMeasure(StateSpace space, std::vector<Atom<Scalar>> atoms,
               double tail_bound = 0.0,
               std::optional<Index> tail_reach = std::nullopt);

  static BasicMeasure dirac(StateSpace space, Index x);
  static BasicMeasure uniform(StateSpace space);
  static BasicMeasure from_dense(StateSpace space, std::span<const Scalar> w,
                                 double tail_bound = 0.0,
                                 std::optional<Index> tail_reach = std::nullopt);

  const StateSpace& space() const { return space_; }
  std::span<const Atom<Scalar>> atoms() const { return atoms_; }
  double tail_bound() const { return tail_bound_; }
  std::optional<Index> tail_reach() const { return tail_reach_; }

  Scalar at(Index x) const;
  Scalar sum() const;
  /// Σ|weight| over the window.
  double abs_mass() const;
  // Certified upper bound on |mu|(E), rounded like sup_norm.
  double total_variation() const;
  bool is_positive() const;
  std::vector<Scalar> dense() const;

  friend bool operator==(const BasicMeasure&, const BasicMeasure&) = default;

 private:
  StateSpace space_;
  std::vector<Atom<Scalar>> atoms_;
  double tail_bound_ = 0.0;
  std::optional<Index> tail_reach_;
};

using Measure = BasicMeasure<double>;
using ComplexMeasure = BasicMeasure<Complex>;

/// Row-indexed family of measures, one per window state.
template <class Scalar>
class BasicKernel {
 public:
  using Row = BasicMeasure<Scalar>;

  BasicKernel() = default;
  BasicKernel(StateSpace space, std::vector<Row> rows, bool markov = false);

  static BasicKernel identity(StateSpace space);
  static BasicKernel from_dense(StateSpace space,
                                const std::vector<std::vector<Scalar>>& rows,
                                bool markov = false);

  const StateSpace& space() const { return space_; }
  Index size() const { return space_.size(); }
  const Row& row(Index x) const { return rows_.at(x); }
  std::span<const Row> rows() const { return rows_; }
  bool is_markov() const { return markov_; }
  bool is_positive() const;
  bool has_tail() const;
  Scalar at(Index x, Index y) const { return rows_.at(x).at(y); }
  std::vector<std::vector<Scalar>> dense() const;

  friend bool operator==(const BasicKernel&, const BasicKernel&) = default;

 private:
  StateSpace space_ = StateSpace::finite(1);
  std::vector<Row> rows_;
  bool markov_ = false;
};

using Kernel = BasicKernel<double>;
using ComplexKernel = BasicKernel<Complex>;

/// Pointwise weight w >= 1 on the window, optionally extended beyond x_max
/// by w(x) = w(x_max) * ratio^(x - x_max).
class WeightFn {
 public:
  WeightFn() = default;
  explicit WeightFn(std::vector<double> values,
                    std::optional<double> tail_ratio = std::nullopt);

  static WeightFn constant(Index n, double c = 1.0);
  /// w(x) = z^x on 0..n-1 with geometric tail of ratio z.
  static WeightFn geometric(Index n, double z);

  Index size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::optional<double> tail_ratio() const { return tail_ratio_; }
  bool is_constant_one() const;

  /// Extrapolates past the window through the tail model; throws
  /// IncompatibleTail when there is none.
  double operator()(Index x) const;

  friend bool operator==(const WeightFn&, const WeightFn&) = default;

 private:
  std::vector<double> values_;
  std::optional<double> tail_ratio_;
};

/// Complex multiplier chi(x, y) with a declared bound on sup|chi|.
class Multiplier {
 public:
  using Fn = std::function<Complex(Index, Index)>;

  Multiplier(Fn chi, double norm_bound);

  static Multiplier constant(Complex c);
  static Multiplier of_target(std::vector<Complex> values);
  static Multiplier of_source(std::vector<Complex> values);
  /// chi_t(x, y) = exp(i t xi(y)).
  static Multiplier fourier(std::vector<double> xi, double t);

  Complex operator()(Index x, Index y) const { return chi_(x, y); }
  double norm_bound() const { return norm_; }

 private:
  Fn chi_;
  double norm_;
};

template <class Scalar>
struct Bracketed {
  std::vector<Scalar> value;
  std::vector<double> radius;
};

// ---- operator algebra ----------------------------------------------------

template <class Scalar>
Bracketed<Scalar> apply_fn(const BasicKernel<Scalar>& q, std::span<const Scalar> f,
                           std::optional<double> tail_sup = std::nullopt);

/// mu Q, i.e. (Q* mu)({y}) = Σ_x mu({x}) Q(x,{y}).
Measure adjoint_apply(const Kernel& q, const Measure& mu);

template <class Scalar>
BasicKernel<Scalar> compose(const BasicKernel<Scalar>& a, const BasicKernel<Scalar>& b);

template <class Scalar>
BasicKernel<Scalar> power(const BasicKernel<Scalar>& q, unsigned n);

/// sup_x (Σ_y |Q(x,y)| + tail(x)).
template <class Scalar>
double sup_norm(const BasicKernel<Scalar>& q);

/// (Q w)(x) for positive kernels; tail mass is bracketed through the weight's
/// tail model.
std::vector<Interval> apply_weight(const Kernel& q, const WeightFn& w);

Interval weighted_norm(const Kernel& q, const WeightFn& w);

struct RadiusBound {
  double bound;
  std::optional<double> exact;
};

/// ||Q^n||_w^(1/n); every n gives an upper bound on r^w(Q).
RadiusBound spectral_radius_upper(const Kernel& q, const WeightFn& w, unsigned n);

/// Q^(w)(x,{y}) = w(x)^-1 Q(x,{y}) w(y).
Kernel conjugate(const Kernel& q, const WeightFn& w);
/// Conjugation by an arbitrary positive scaling (e.g. 1/w).
Kernel conjugate(const Kernel& q, std::span<const double> scale,
                 std::optional<double> tail_ratio = std::nullopt);

ComplexKernel multiplier(const Kernel& q, const Multiplier& chi);
ComplexKernel fourier_kernel(const Kernel& p, std::vector<double> xi, double t);

ComplexKernel to_complex(const Kernel& q);

/// Truncates a windowed kernel to 0..x_max; mass leaving the smaller window
/// is moved into the row tail.
Kernel restrict_window(const Kernel& q, Index x_max);

/// Dense copy of the truncation with every tail dropped.
std::vector<std::vector<double>> truncation(const Kernel& q);

}  // namespace qcert
