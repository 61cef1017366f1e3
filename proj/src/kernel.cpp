#include "qcert/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qcert {

namespace {

constexpr double kMarkovTol = 1e-12;

double magnitude(double v) { return std::fabs(v); }
// std::abs on complex is not correctly rounded; keep it as an upper bound.
double magnitude(const Complex& v) {
  double a = std::abs(v);
  return (v.imag() == 0.0 || v.real() == 0.0) ? a : round_up(a);
}

bool is_zero(double v) { return v == 0.0; }
bool is_zero(const Complex& v) { return v == Complex(0.0, 0.0); }

std::optional<Index> max_reach(std::optional<Index> a, std::optional<Index> b) {
  if (!a || !b) return std::nullopt;
  return std::max(*a, *b);
}

// Largest ratio s(x_max + k) / s(x_max + 0) over k = 1..reach for a scaling
// extended geometrically (or constantly) past the window.
double beyond_window_max(std::span<const double> scale, std::optional<double> ratio,
                         Index reach, bool constant) {
  double last = scale.back();
  if (constant) return last;
  double r = *ratio;
  return r >= 1.0 ? last * std::pow(r, static_cast<double>(reach)) : last * r;
}

double beyond_window_min(std::span<const double> scale, std::optional<double> ratio,
                         Index reach, bool constant) {
  double last = scale.back();
  if (constant) return last;
  double r = *ratio;
  return r >= 1.0 ? last * r : last * std::pow(r, static_cast<double>(reach));
}

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

// ---- StateSpace ------------------------------------------------------------

StateSpace StateSpace::finite(Index n) {
  require(n >= 1, ErrorCode::InvalidArgument, "finite space needs n >= 1");
  return {Kind::Finite, n};
}

StateSpace StateSpace::windowed(Index x_max) {
  require(x_max >= 1, ErrorCode::InvalidArgument, "windowed space needs x_max >= 1");
  return {Kind::WindowedCountable, x_max + 1};
}

// ---- BasicMeasure ------------------------------------------------------------

template <class Scalar>
BasicMeasure<Scalar>::BasicMeasure(StateSpace space, std::vector<Atom<Scalar>> atoms,
                                   double tail_bound, std::optional<Index> tail_reach)
    : space_(space), atoms_(std::move(atoms)), tail_bound_(tail_bound), tail_reach_(tail_reach) {
  require(std::isfinite(tail_bound) && tail_bound >= 0.0, ErrorCode::InvalidArgument,
          "tail bound must be finite and nonnegative");
  require(space.kind() == StateSpace::Kind::WindowedCountable || tail_bound == 0.0,
          ErrorCode::InvalidArgument, "finite-space measures carry no tail");
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom<Scalar>& a, const Atom<Scalar>& b) { return a.state < b.state; });
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    require(atoms_[i].state < space.size(), ErrorCode::InvalidArgument,
            "atom state " + std::to_string(atoms_[i].state) + " outside the space");
    require(i == 0 || atoms_[i - 1].state != atoms_[i].state, ErrorCode::InvalidArgument,
            "duplicate atom state " + std::to_string(atoms_[i].state));
    require(std::isfinite(magnitude(atoms_[i].weight)), ErrorCode::InvalidArgument,
            "non-finite atom weight");
  }
}

template <class Scalar>
BasicMeasure<Scalar> BasicMeasure<Scalar>::dirac(StateSpace space, Index x) {
  return BasicMeasure(space, {{x, Scalar(1.0)}});
}

template <class Scalar>
BasicMeasure<Scalar> BasicMeasure<Scalar>::uniform(StateSpace space) {
  std::vector<Atom<Scalar>> atoms;
  atoms.reserve(space.size());
  double w = 1.0 / static_cast<double>(space.size());
  for (Index x = 0; x < space.size(); ++x) atoms.push_back({x, Scalar(w)});
  return BasicMeasure(space, std::move(atoms));
}

template <class Scalar>
BasicMeasure<Scalar> BasicMeasure<Scalar>::from_dense(StateSpace space, std::span<const Scalar> w,
                                                      double tail_bound,
                                                      std::optional<Index> tail_reach) {
  require(w.size() == space.size(), ErrorCode::SpaceMismatch, "dense vector size mismatch");
  std::vector<Atom<Scalar>> atoms;
  for (Index x = 0; x < w.size(); ++x)
    if (!is_zero(w[x])) atoms.push_back({x, w[x]});
  return BasicMeasure(space, std::move(atoms), tail_bound, tail_reach);
}

template <class Scalar>
Scalar BasicMeasure<Scalar>::at(Index x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                             [](const Atom<Scalar>& a, Index s) { return a.state < s; });
  return (it != atoms_.end() && it->state == x) ? it->weight : Scalar(0.0);
}

template <class Scalar>
Scalar BasicMeasure<Scalar>::sum() const {
  Scalar s(0.0);
  for (const auto& a : atoms_) s += a.weight;
  return s;
}

template <class Scalar>
double BasicMeasure<Scalar>::total_variation() const {
  Interval s(0.0);
  for (const auto& a : atoms_) s += Interval(magnitude(a.weight));
  s += Interval(tail_bound_);
  return s.hi();
}

template <class Scalar>
double BasicMeasure<Scalar>::abs_mass() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += magnitude(a.weight);
  return s;
}

template <class Scalar>
bool BasicMeasure<Scalar>::is_positive() const {
  if constexpr (std::is_same_v<Scalar, double>) {
    return std::all_of(atoms_.begin(), atoms_.end(),
                       [](const Atom<double>& a) { return a.weight >= 0.0; });
  } else {
    return std::all_of(atoms_.begin(), atoms_.end(), [](const Atom<Complex>& a) {
      return a.weight.imag() == 0.0 && a.weight.real() >= 0.0;
    });
  }
}

template <class Scalar>
std::vector<Scalar> BasicMeasure<Scalar>::dense() const {
  std::vector<Scalar> out(space_.size(), Scalar(0.0));
  for (const auto& a : atoms_) out[a.state] = a.weight;
  return out;
}

// ---- BasicKernel -----------------------------------------------------------

template <class Scalar>
BasicKernel<Scalar>::BasicKernel(StateSpace space, std::vector<Row> rows, bool markov)
    : space_(space), rows_(std::move(rows)), markov_(markov) {
  require(rows_.size() == space.size(), ErrorCode::SpaceMismatch,
          "kernel needs one row per window state");
  for (Index x = 0; x < rows_.size(); ++x) {
    require(rows_[x].space() == space, ErrorCode::SpaceMismatch,
            "row " + std::to_string(x) + " lives on a different space");
  }
  if (markov_) {
    require(is_positive(), ErrorCode::NotMarkov, "Markov kernel with a negative entry");
    for (Index x = 0; x < rows_.size(); ++x) {
      double mass = std::abs(rows_[x].sum()) + rows_[x].tail_bound();
      require(std::fabs(mass - 1.0) <= kMarkovTol, ErrorCode::NotMarkov,
              "row " + std::to_string(x) + " has mass " + std::to_string(mass));
    }
  }
}

template <class Scalar>
BasicKernel<Scalar> BasicKernel<Scalar>::identity(StateSpace space) {
  std::vector<Row> rows;
  rows.reserve(space.size());
  for (Index x = 0; x < space.size(); ++x) rows.push_back(Row::dirac(space, x));
  return BasicKernel(space, std::move(rows), true);
}

template <class Scalar>
BasicKernel<Scalar> BasicKernel<Scalar>::from_dense(StateSpace space,
                                                    const std::vector<std::vector<Scalar>>& rows,
                                                    bool markov) {
  require(rows.size() == space.size(), ErrorCode::SpaceMismatch, "dense row count mismatch");
  std::vector<Row> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(Row::from_dense(space, r));
  return BasicKernel(space, std::move(out), markov);
}

template <class Scalar>
bool BasicKernel<Scalar>::is_positive() const {
  return std::all_of(rows_.begin(), rows_.end(), [](const Row& r) { return r.is_positive(); });
}

template <class Scalar>
bool BasicKernel<Scalar>::has_tail() const {
  return std::any_of(rows_.begin(), rows_.end(), [](const Row& r) { return r.tail_bound() > 0.0; });
}

template <class Scalar>
std::vector<std::vector<Scalar>> BasicKernel<Scalar>::dense() const {
  std::vector<std::vector<Scalar>> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.dense());
  return out;
}

template class BasicMeasure<double>;
template class BasicMeasure<Complex>;
template class BasicKernel<double>;
template class BasicKernel<Complex>;

// ---- WeightFn / Multiplier ------------------------------------------------

WeightFn::WeightFn(std::vector<double> values, std::optional<double> tail_ratio)
    : values_(std::move(values)), tail_ratio_(tail_ratio) {
  require(!values_.empty(), ErrorCode::InvalidArgument, "weight needs at least one value");
  for (double v : values_)
    require(std::isfinite(v) && v >= 1.0, ErrorCode::InvalidArgument, "weights must be >= 1");
  require(!tail_ratio_ || (std::isfinite(*tail_ratio_) && *tail_ratio_ > 1.0),
          ErrorCode::InvalidArgument, "tail ratio must exceed 1");
}

WeightFn WeightFn::constant(Index n, double c) { return WeightFn(std::vector<double>(n, c)); }

WeightFn WeightFn::geometric(Index n, double z) {
  std::vector<double> v(n);
  double p = 1.0;
  for (Index x = 0; x < n; ++x) {
    v[x] = p;
    p *= z;
  }
  return WeightFn(std::move(v), z);
}

bool WeightFn::is_constant_one() const {
  return !tail_ratio_ &&
         std::all_of(values_.begin(), values_.end(), [](double v) { return v == 1.0; });
}

double WeightFn::operator()(Index x) const {
  if (x < values_.size()) return values_[x];
  if (tail_ratio_)
    return values_.back() * std::pow(*tail_ratio_, static_cast<double>(x - (values_.size() - 1)));
  require(all_equal(values_), ErrorCode::IncompatibleTail,
          "weight has no tail model beyond the window");
  return values_.back();
}

Multiplier::Multiplier(Fn chi, double norm_bound) : chi_(std::move(chi)), norm_(norm_bound) {
  require(std::isfinite(norm_bound) && norm_bound >= 0.0, ErrorCode::InvalidArgument,
          "multiplier norm must be finite");
}

Multiplier Multiplier::constant(Complex c) {
  return Multiplier([c](Index, Index) { return c; }, std::abs(c));
}

Multiplier Multiplier::of_target(std::vector<Complex> values) {
  double norm = 0.0;
  for (auto v : values) norm = std::max(norm, std::abs(v));
  return Multiplier(
      [v = std::move(values)](Index, Index y) {
        require(y < v.size(), ErrorCode::InvalidArgument, "multiplier undefined at target");
        return v[y];
      },
      norm);
}

Multiplier Multiplier::of_source(std::vector<Complex> values) {
  double norm = 0.0;
  for (auto v : values) norm = std::max(norm, std::abs(v));
  return Multiplier(
      [v = std::move(values)](Index x, Index) {
        require(x < v.size(), ErrorCode::InvalidArgument, "multiplier undefined at source");
        return v[x];
      },
      norm);
}

Multiplier Multiplier::fourier(std::vector<double> xi, double t) {
  return Multiplier(
      [xi = std::move(xi), t](Index, Index y) {
        require(y < xi.size(), ErrorCode::InvalidArgument, "xi undefined at target");
        return std::polar(1.0, t * xi[y]);
      },
      1.0);
}

// ---- operator algebra ----------------------------------------------------

template <class Scalar>
Bracketed<Scalar> apply_fn(const BasicKernel<Scalar>& q, std::span<const Scalar> f,
                           std::optional<double> tail_sup) {
  require(f.size() == q.size(), ErrorCode::SpaceMismatch, "function size differs from window");
  Bracketed<Scalar> out{std::vector<Scalar>(q.size(), Scalar(0.0)),
                        std::vector<double>(q.size(), 0.0)};
  for (Index x = 0; x < q.size(); ++x) {
    const auto& row = q.row(x);
    Scalar s(0.0);
    for (const auto& a : row.atoms()) s += a.weight * f[a.state];
    out.value[x] = s;
    if (row.tail_bound() > 0.0) {
      require(tail_sup.has_value(), ErrorCode::MissingTailBound,
              "row " + std::to_string(x) + " has tail mass but f has no declared sup bound");
      out.radius[x] = round_up(row.tail_bound() * *tail_sup);
    }
  }
  return out;
}

template Bracketed<double> apply_fn(const Kernel&, std::span<const double>, std::optional<double>);
template Bracketed<Complex> apply_fn(const ComplexKernel&, std::span<const Complex>,
                                     std::optional<double>);

Measure adjoint_apply(const Kernel& q, const Measure& mu) {
  require(mu.space() == q.space(), ErrorCode::SpaceMismatch, "measure and kernel spaces differ");
  std::vector<double> acc(q.size(), 0.0);
  double tail = 0.0;
  std::optional<Index> reach = Index{0};
  bool any_tail = false;
  for (const auto& a : mu.atoms()) {
    const auto& row = q.row(a.state);
    for (const auto& b : row.atoms()) acc[b.state] += a.weight * b.weight;
    if (row.tail_bound() > 0.0) {
      tail += std::fabs(a.weight) * row.tail_bound();
      reach = any_tail ? max_reach(reach, row.tail_reach()) : row.tail_reach();
      any_tail = true;
    }
  }
  if (mu.tail_bound() > 0.0) {
    tail += mu.tail_bound() * sup_norm(q);
    reach = std::nullopt;
    any_tail = true;
  }
  return Measure::from_dense(q.space(), acc, tail > 0.0 ? round_up(tail) : 0.0,
                             any_tail ? reach : std::nullopt);
}

template <class Scalar>
BasicKernel<Scalar> compose(const BasicKernel<Scalar>& a, const BasicKernel<Scalar>& b) {
  require(a.space() == b.space(), ErrorCode::SpaceMismatch, "compose on different spaces");
  const Index n = a.size();
  const double b_norm = sup_norm(b);
  std::optional<Index> b_reach = Index{0};
  for (const auto& r : b.rows())
    if (r.tail_bound() > 0.0) b_reach = max_reach(b_reach, r.tail_reach());

  std::vector<Scalar> acc(n, Scalar(0.0));
  std::vector<char> mark(n, 0);
  std::vector<Index> touched;
  std::vector<typename BasicKernel<Scalar>::Row> rows;
  rows.reserve(n);
  for (Index x = 0; x < n; ++x) {
    const auto& ra = a.row(x);
    double tail = 0.0;
    bool any_tail = false;
    std::optional<Index> reach = Index{0};
    for (const auto& ea : ra.atoms()) {
      const auto& rb = b.row(ea.state);
      for (const auto& eb : rb.atoms()) {
        if (!mark[eb.state]) {
          mark[eb.state] = 1;
          touched.push_back(eb.state);
        }
        acc[eb.state] += ea.weight * eb.weight;
      }
      if (rb.tail_bound() > 0.0) {
        tail += magnitude(ea.weight) * rb.tail_bound();
        reach = any_tail ? max_reach(reach, rb.tail_reach()) : rb.tail_reach();
        any_tail = true;
      }
    }
    if (ra.tail_bound() > 0.0) {
      tail += ra.tail_bound() * b_norm;
      std::optional<Index> r2;
      if (ra.tail_reach() && b_reach) r2 = *ra.tail_reach() + *b_reach;
      reach = any_tail ? max_reach(reach, r2) : r2;
      any_tail = true;
    }
    std::sort(touched.begin(), touched.end());
    std::vector<Atom<Scalar>> atoms;
    atoms.reserve(touched.size());
    for (Index y : touched) {
      if (!is_zero(acc[y])) atoms.push_back({y, acc[y]});
      acc[y] = Scalar(0.0);
      mark[y] = 0;
    }
    touched.clear();
    rows.emplace_back(a.space(), std::move(atoms), tail > 0.0 ? round_up(tail) : 0.0,
                      any_tail ? reach : std::nullopt);
  }

  bool markov = a.is_markov() && b.is_markov();
  if (markov) {
    for (const auto& r : rows) {
      double mass = std::abs(r.sum()) + r.tail_bound();
      if (std::fabs(mass - 1.0) > kMarkovTol) {
        markov = false;
        break;
      }
    }
  }
  return BasicKernel<Scalar>(a.space(), std::move(rows), markov);
}

template Kernel compose(const Kernel&, const Kernel&);
template ComplexKernel compose(const ComplexKernel&, const ComplexKernel&);

template <class Scalar>
BasicKernel<Scalar> power(const BasicKernel<Scalar>& q, unsigned n) {
  auto result = BasicKernel<Scalar>::identity(q.space());
  if (n == 0) return result;
  auto base = q;
  bool first = true;
  while (n > 0) {
    if (n & 1u) {
      result = first ? base : compose(result, base);
      first = false;
    }
    n >>= 1u;
    if (n > 0) base = compose(base, base);
  }
  return result;
}

template Kernel power(const Kernel&, unsigned);
template ComplexKernel power(const ComplexKernel&, unsigned);

template <class Scalar>
double sup_norm(const BasicKernel<Scalar>& q) {
  double best = 0.0;
  for (const auto& row : q.rows()) {
    Interval s(0.0);
    for (const auto& a : row.atoms()) s += Interval(magnitude(a.weight));
    s += Interval(row.tail_bound());
    best = std::max(best, s.hi());
  }
  return best;
}

template double sup_norm(const Kernel&);
template double sup_norm(const ComplexKernel&);

std::vector<Interval> apply_weight(const Kernel& q, const WeightFn& w) {
  require(w.size() == q.size(), ErrorCode::SpaceMismatch, "weight size differs from window");
  const bool constant = all_equal(w.values()) && !w.tail_ratio();
  std::vector<Interval> out;
  out.reserve(q.size());
  for (Index x = 0; x < q.size(); ++x) {
    const auto& row = q.row(x);
    Interval s(0.0);
    for (const auto& a : row.atoms()) s += Interval(a.weight) * Interval(w.values()[a.state]);
    if (row.tail_bound() > 0.0) {
      double hi_w, lo_w;
      if (constant) {
        hi_w = lo_w = w.values().back();
      } else {
        require(w.tail_ratio().has_value() && row.tail_reach().has_value(),
                ErrorCode::IncompatibleTail,
                "row " + std::to_string(x) + " leaves the window but the weight has no tail model"
                " or the row has no declared reach");
        hi_w = beyond_window_max(w.values(), w.tail_ratio(), *row.tail_reach(), false);
        lo_w = beyond_window_min(w.values(), w.tail_ratio(), *row.tail_reach(), false);
      }
      // Markov rows carry their tail exactly; otherwise it is only an upper bound.
      double lo = q.is_markov() ? row.tail_bound() * lo_w : 0.0;
      s += Interval(round_down(lo), round_up(row.tail_bound() * hi_w));
    }
    out.push_back(s);
  }
  return out;
}

Interval weighted_norm(const Kernel& q, const WeightFn& w) {
  Kernel abs_q = q;
  if (!q.is_positive()) {
    std::vector<Kernel::Row> rows;
    for (const auto& r : q.rows()) {
      std::vector<Atom<double>> atoms(r.atoms().begin(), r.atoms().end());
      for (auto& a : atoms) a.weight = std::fabs(a.weight);
      rows.emplace_back(q.space(), std::move(atoms), r.tail_bound(), r.tail_reach());
    }
    abs_q = Kernel(q.space(), std::move(rows));
  }
  auto qw = apply_weight(abs_q, w);
  double lo = 0.0, hi = 0.0;
  for (Index x = 0; x < q.size(); ++x) {
    Interval ratio = qw[x] / Interval(w.values()[x]);
    lo = std::max(lo, ratio.lo());
    hi = std::max(hi, ratio.hi());
  }
  return {lo, hi};
}

Kernel conjugate(const Kernel& q, std::span<const double> scale, std::optional<double> tail_ratio) {
  require(scale.size() == q.size(), ErrorCode::SpaceMismatch, "scaling size differs from window");
  for (double s : scale)
    require(std::isfinite(s) && s > 0.0, ErrorCode::InvalidArgument, "scaling must be positive");
  const bool constant = all_equal(scale) && !tail_ratio;
  std::vector<Kernel::Row> rows;
  rows.reserve(q.size());
  for (Index x = 0; x < q.size(); ++x) {
    const auto& row = q.row(x);
    std::vector<Atom<double>> atoms;
    atoms.reserve(row.atoms().size());
    for (const auto& a : row.atoms()) atoms.push_back({a.state, a.weight / scale[x] * scale[a.state]});
    double tail = 0.0;
    if (row.tail_bound() > 0.0) {
      if (constant) {
        tail = row.tail_bound();
      } else {
        require(tail_ratio.has_value() && row.tail_reach().has_value(), ErrorCode::IncompatibleTail,
                "cannot conjugate row " + std::to_string(x) + ": tail without weight tail model");
        tail = round_up(row.tail_bound() *
                        beyond_window_max(scale, tail_ratio, *row.tail_reach(), false) / scale[x]);
      }
    }
    rows.emplace_back(q.space(), std::move(atoms), tail, row.tail_reach());
  }
  return Kernel(q.space(), std::move(rows), q.is_markov() && constant);
}

Kernel conjugate(const Kernel& q, const WeightFn& w) {
  require(w.size() == q.size(), ErrorCode::SpaceMismatch, "weight size differs from window");
  return conjugate(q, w.values(), w.tail_ratio());
}

RadiusBound spectral_radius_upper(const Kernel& q, const WeightFn& w, unsigned n) {
  require(n >= 1, ErrorCode::InvalidArgument, "spectral radius bound needs n >= 1");
  require(w.size() == q.size(), ErrorCode::SpaceMismatch, "weight size differs from window");
  const bool constant = all_equal(w.values()) && !w.tail_ratio();
  Kernel base = constant ? q : conjugate(q, w);
  double norm = sup_norm(power(base, n));
  double bound = n == 1 ? norm : pow(Interval(norm), 1.0 / n).hi();
  RadiusBound out{bound, std::nullopt};
  // Markov kernels fix the constants, so r^w >= 1; with w bounded it is 1.
  if (q.is_markov() && (constant || bound <= 1.0)) out.exact = 1.0;
  return out;
}

ComplexKernel to_complex(const Kernel& q) {
  std::vector<ComplexKernel::Row> rows;
  rows.reserve(q.size());
  for (const auto& r : q.rows()) {
    std::vector<Atom<Complex>> atoms;
    for (const auto& a : r.atoms()) atoms.push_back({a.state, Complex(a.weight, 0.0)});
    rows.emplace_back(q.space(), std::move(atoms), r.tail_bound(), r.tail_reach());
  }
  return ComplexKernel(q.space(), std::move(rows), q.is_markov());
}

ComplexKernel multiplier(const Kernel& q, const Multiplier& chi) {
  std::vector<ComplexKernel::Row> rows;
  rows.reserve(q.size());
  for (Index x = 0; x < q.size(); ++x) {
    const auto& r = q.row(x);
    std::vector<Atom<Complex>> atoms;
    for (const auto& a : r.atoms()) {
      Complex c = chi(x, a.state);
      require(std::abs(c) <= chi.norm_bound() * (1.0 + 1e-15), ErrorCode::InvalidArgument,
              "multiplier value exceeds its declared norm bound");
      atoms.push_back({a.state, c * a.weight});
    }
    double tail = r.tail_bound() > 0.0 ? round_up(r.tail_bound() * chi.norm_bound()) : 0.0;
    rows.emplace_back(q.space(), std::move(atoms), tail, r.tail_reach());
  }
  return ComplexKernel(q.space(), std::move(rows), false);
}

ComplexKernel fourier_kernel(const Kernel& p, std::vector<double> xi, double t) {
  return multiplier(p, Multiplier::fourier(std::move(xi), t));
}

Kernel restrict_window(const Kernel& q, Index x_max) {
  require(q.space().kind() == StateSpace::Kind::WindowedCountable, ErrorCode::InvalidArgument,
          "only windowed kernels can be restricted");
  require(x_max >= 1 && x_max <= q.space().x_max(), ErrorCode::InvalidArgument,
          "new window must lie inside the old one");
  auto space = StateSpace::windowed(x_max);
  const Index shrink = q.space().x_max() - x_max;
  std::vector<Kernel::Row> rows;
  rows.reserve(x_max + 1);
  for (Index x = 0; x <= x_max; ++x) {
    const auto& r = q.row(x);
    std::vector<Atom<double>> atoms;
    double tail = r.tail_bound();
    std::optional<Index> reach;
    if (tail > 0.0 && r.tail_reach()) reach = *r.tail_reach() + shrink;
    bool known = tail == 0.0 || reach.has_value();
    for (const auto& a : r.atoms()) {
      if (a.state <= x_max) {
        atoms.push_back(a);
      } else {
        tail += std::fabs(a.weight);
        Index d = a.state - x_max;
        reach = reach ? std::max(*reach, d) : d;
      }
    }
    rows.emplace_back(space, std::move(atoms), tail, (tail > 0.0 && known) ? reach : std::nullopt);
  }
  return Kernel(space, std::move(rows), q.is_markov());
}

std::vector<std::vector<double>> truncation(const Kernel& q) { return q.dense(); }

}  // namespace qcert
