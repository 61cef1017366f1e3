#include "qcert/ess_spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace qcert {

const char* to_string(EssMethod m) {
  switch (m) {
    case EssMethod::DoeblinTail: return "DoeblinTail";
    case EssMethod::ResidualNorm: return "ResidualNorm";
    case EssMethod::WeightedConjugate: return "WeightedConjugate";
  }
  return "Unknown";
}

namespace {

std::optional<bool> verdict(const Kernel& q, const Interval& value) {
  if (q.is_markov() && value.hi() < 1.0) return true;
  return std::nullopt;
}

Interval root(double norm, double k) {
  if (k == 1.0) return Interval(norm);
  return pow(Interval(norm), 1.0 / k);
}

void sort_spectrum(std::vector<Complex>& ev) {
  // Quantize the modulus so that numerically equal moduli tie and the
  // argument decides.
  auto key = [](const Complex& z) { return std::round(std::abs(z) * 1e10); };
  std::sort(ev.begin(), ev.end(), [&](const Complex& a, const Complex& b) {
    double ka = key(a), kb = key(b);
    if (ka != kb) return ka > kb;
    return std::arg(a) < std::arg(b);
  });
}

}  // namespace

EssBound re_upper_doeblin(const Kernel& q, const std::vector<DoeblinCandidate>& candidates,
                          const TailSpec& tail) {
  EssBound best;
  best.method = EssMethod::DoeblinTail;
  if (candidates.empty()) {
    best.certified = false;
    return best;
  }
  bool first = true;
  for (const auto& c : candidates) {
    require(c.ell >= 1, ErrorCode::InvalidArgument, "candidate ell must be at least 1");
    require(c.nu.space() == q.space(), ErrorCode::SpaceMismatch, "candidate nu on another space");
    Kernel q_ell = power(q, c.ell);
    auto rows = rows_of(q_ell);
    auto d = delta_nu(rows, c.nu, tail);
    Interval v = root(d.bracket.hi(), c.ell);
    Interval lo = root(d.bracket.lo(), c.ell);
    Interval value(lo.lo(), v.hi());
    if (first || value.hi() < best.value.hi()) {
      best.value = value;
      best.ell = c.ell;
      best.nu = c.nu;
      best.certified = d.certified;
      first = false;
    }
  }
  best.quasi_compact = verdict(q, best.value);
  return best;
}

Kernel residual_kernel(const Kernel& q_ell, const DensityKernel& t, double* min_entry) {
  require(t.space() == q_ell.space(), ErrorCode::SpaceMismatch, "T lives on another space");
  Kernel tk = t.to_kernel();
  double lowest = 0.0;
  std::vector<Kernel::Row> rows;
  rows.reserve(q_ell.size());
  for (Index x = 0; x < q_ell.size(); ++x) {
    auto qd = q_ell.row(x).dense();
    auto td = tk.row(x).dense();
    std::vector<Atom<double>> atoms;
    for (Index y = 0; y < qd.size(); ++y) {
      double s = qd[y] - td[y];
      lowest = std::min(lowest, s);
      if (s < 0.0) {
        // α ν(y) and Q^ℓ(x,y) that agree up to the rounding of α = Q/ν.
        double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(qd[y], td[y]);
        require(-s <= tol, ErrorCode::NotDominated,
                "Q^l - T is negative at (" + std::to_string(x) + ", " + std::to_string(y) +
                    "): " + std::to_string(s));
        s = 0.0;
      }
      if (s != 0.0) atoms.push_back({y, s});
    }
    const auto& r = q_ell.row(x);
    rows.emplace_back(q_ell.space(), std::move(atoms), r.tail_bound(), r.tail_reach());
  }
  if (min_entry) *min_entry = lowest;
  return Kernel(q_ell.space(), std::move(rows));
}

EssBound re_upper_residual(const Kernel& q, unsigned ell, const DensityKernel& t,
                           const ResidualOptions& opts) {
  require(ell >= 1 && opts.n_power >= 1, ErrorCode::InvalidArgument,
          "ell and n_power must be at least 1");
  EssBound out;
  out.method = EssMethod::ResidualNorm;
  out.ell = ell;
  out.nu = t.nu();
  out.n_power = opts.n_power;

  double cutoff = opts.ui_cutoff.value_or(round_up(t.sup_alpha()) * 2.0 + 1.0);
  double ui = ui_tail(t, cutoff);
  require(ui <= opts.ui_tolerance, ErrorCode::NotUniformlyIntegrable,
          "density tail " + std::to_string(ui) + " at cutoff " + std::to_string(cutoff) +
              " exceeds tolerance " + std::to_string(opts.ui_tolerance));

  Kernel s = residual_kernel(power(q, ell), t, &out.min_residual_entry);
  double norm = sup_norm(power(s, opts.n_power));
  out.value = root(norm, static_cast<double>(opts.n_power) * ell);
  out.quasi_compact = verdict(q, out.value);
  return out;
}

EssBound re_upper_weighted(const Kernel& q, const WeightFn& w, const EssStrategy& strategy) {
  Kernel qw = conjugate(q, w);
  EssBound out;
  if (const auto* d = std::get_if<DoeblinStrategy>(&strategy)) {
    out = re_upper_doeblin(qw, d->candidates, d->tail);
  } else {
    const auto& r = std::get<ResidualStrategy>(strategy);
    out = re_upper_residual(qw, r.ell, r.t.weighted(w), r.opts);
  }
  out.method = EssMethod::WeightedConjugate;
  // The conjugate loses the Markov flag; the constants still sit in B_w.
  out.quasi_compact = q.is_markov() && out.value.hi() < 1.0 ? std::optional<bool>(true)
                                                            : std::nullopt;
  return out;
}

MultiplierBound multiplier_bound(const Kernel& q, const Multiplier& chi, unsigned ell,
                                 const Kernel& s, unsigned n_power) {
  require(ell >= 1 && n_power >= 1, ErrorCode::InvalidArgument, "ell and n_power must be >= 1");
  MultiplierBound out;
  out.chi_norm = chi.norm_bound();
  auto r = spectral_radius_upper(q, WeightFn::constant(q.size()), n_power);
  out.r_bound = out.chi_norm * r.exact.value_or(r.bound);
  double sn = sup_norm(power(s, n_power));
  out.re_bound = out.chi_norm * root(sn, static_cast<double>(n_power) * ell).hi();
  out.dichotomy_consistent = out.chi_norm > 1.0 || out.re_bound <= out.r_bound;
  return out;
}

std::vector<Complex> eigen_oracle(const Kernel& q, const std::optional<WeightFn>& w) {
  require(q.size() <= kOracleSizeLimit, ErrorCode::SizeLimit,
          "dense oracle limited to " + std::to_string(kOracleSizeLimit) + " states");
  const Index n = q.size();
  if (w) require(w->size() == n, ErrorCode::SpaceMismatch, "weight size differs from window");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Index x = 0; x < n; ++x)
    for (const auto& a : q.row(x).atoms()) {
      double v = a.weight;
      if (w) v = v * w->values()[a.state] / w->values()[x];
      m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a.state)) = v;
    }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence, "eigen solver failed");
  std::vector<Complex> ev(solver.eigenvalues().begin(), solver.eigenvalues().end());
  sort_spectrum(ev);
  return ev;
}

std::vector<Complex> eigen_oracle(const ComplexKernel& q) {
  require(q.size() <= kOracleSizeLimit, ErrorCode::SizeLimit,
          "dense oracle limited to " + std::to_string(kOracleSizeLimit) + " states");
  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (Index x = 0; x < q.size(); ++x)
    for (const auto& a : q.row(x).atoms())
      m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a.state)) = a.weight;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, false);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence, "eigen solver failed");
  std::vector<Complex> ev(solver.eigenvalues().begin(), solver.eigenvalues().end());
  sort_spectrum(ev);
  return ev;
}

KStarReport kstar_check(const Kernel& q, const Measure& nu, double cutoff, double tolerance) {
  KStarReport out;
  out.cutoff = cutoff;
  auto split = kernel_decompose(q, nu);
  for (Index x = 0; x < q.size(); ++x) {
    double m = split.singular.row(x).total_variation();
    if (m > out.singular_mass) {
      out.singular_mass = m;
      out.worst_row = x;
    }
  }
  out.ui = ui_tail(split.density, cutoff);
  out.member = out.singular_mass == 0.0 && out.ui <= tolerance;
  return out;
}

}  // namespace qcert
