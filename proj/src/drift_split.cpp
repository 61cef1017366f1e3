#include "qcert/drift_split.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qcert/ess_spectrum.hpp"

namespace qcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Largest weight a row tail can land on, from the weight's tail model.
double weight_beyond(const Kernel::Row& row, const WeightFn& w) {
  if (row.tail_bound() == 0.0) return 0.0;
  const auto vals = w.values();
  bool constant = !w.tail_ratio() &&
                  std::all_of(vals.begin(), vals.end(), [&](double v) { return v == vals.front(); });
  if (constant) return vals.back();
  if (!w.tail_ratio() || !row.tail_reach()) return kInf;
  return w(w.size() - 1 + *row.tail_reach());
}

void require_finite_chain(const Kernel& p, const char* what) {
  require(!p.has_tail(), ErrorCode::InvalidArgument,
          std::string(what) + " needs a kernel without tail mass");
}

std::vector<std::vector<double>> dense_residual(const Kernel& p,
                                                const MinorizationCertificate& minor) {
  auto s = p.dense();
  Kernel t = minor.t().to_kernel();
  for (Index x = 0; x < p.size(); ++x) {
    if (!minor.c().contains(x)) continue;
    for (const auto& a : t.row(x).atoms()) s[x][a.state] -= minor.b() * a.weight;
  }
  return s;
}

Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m[i][j];
  return out;
}

}  // namespace

// ---- state sets and certificates ---------------------------------------------

StateSet StateSet::of(Index n, std::initializer_list<Index> states) {
  return of(n, std::vector<Index>(states));
}

StateSet StateSet::of(Index n, const std::vector<Index>& states) {
  StateSet s(n);
  for (Index x : states) s.insert(x);
  return s;
}

StateSet StateSet::all(Index n) {
  StateSet s(n);
  std::fill(s.mask_.begin(), s.mask_.end(), 1);
  return s;
}

void StateSet::insert(Index x) {
  require(x < mask_.size(), ErrorCode::InvalidArgument, "state outside the set's window");
  mask_[x] = 1;
}

Index StateSet::count() const {
  return static_cast<Index>(std::count(mask_.begin(), mask_.end(), 1));
}

std::vector<Index> StateSet::members() const {
  std::vector<Index> out;
  for (Index x = 0; x < mask_.size(); ++x)
    if (mask_[x]) out.push_back(x);
  return out;
}

void validate(const DriftCertificate& cert) {
  require(cert.c.count() > 0, ErrorCode::InvalidArgument, "drift set C is empty");
  require(cert.c.size() == cert.w.size(), ErrorCode::SpaceMismatch, "C and w sizes differ");
  require(std::isfinite(cert.r1) && cert.r1 > 1.0, ErrorCode::InvalidArgument, "r1 must exceed 1");
  require(std::isfinite(cert.eta) && cert.eta >= 0.0, ErrorCode::InvalidArgument,
          "eta must be nonnegative");
}

MinorizationCertificate::MinorizationCertificate(StateSet c, double b, DensityKernel t)
    : c_(std::move(c)), b_(b), t_(std::move(t)) {
  require(b_ > 0.0 && b_ <= 1.0, ErrorCode::InvalidArgument,
          "minorization constant b must lie in (0, 1], got " + std::to_string(b_));
  require(c_.count() > 0, ErrorCode::InvalidArgument, "small set C is empty");
  require(c_.size() == t_.size(), ErrorCode::SpaceMismatch, "C and T sizes differ");
}

DensityKernel constant_density(const Measure& nu, double value) {
  DensityKernel::Row row;
  for (const auto& a : nu.atoms())
    if (a.weight > 0.0) row.push_back({a.state, value});
  return DensityKernel(nu, std::vector<DensityKernel::Row>(nu.space().size(), row));
}

// ---- drift -----------------------------------------------------------------

DriftCheck verify_drift(const Kernel& p, const DriftCertificate& cert) {
  validate(cert);
  require(p.is_markov(), ErrorCode::NotMarkov, "drift verification needs a Markov kernel");
  require(cert.w.size() == p.size(), ErrorCode::SpaceMismatch, "weight size differs from window");
  DriftCheck out;
  out.pw = apply_weight(p, cert.w);
  out.pass = true;
  // Rank states by excess relative to the right-hand side so that rounding
  // noise on huge weights never outranks a genuine violation.
  double worst_scaled = -kInf;
  for (Index x = 0; x < p.size(); ++x) {
    double rhs = (cert.c.contains(x) ? cert.eta : cert.w.values()[x]) / cert.r1;
    double excess = out.pw[x].hi() - rhs;
    double scaled = excess / std::max(1.0, rhs);
    if (scaled > 1e-12) out.pass = false;
    if (scaled > worst_scaled) {
      out.worst = x;
      out.worst_excess = excess;
      worst_scaled = scaled;
    }
  }
  out.implied_constant = round_up(cert.eta / cert.r1);
  return out;
}

HittingBracket minimal_drift(const Kernel& p, const StateSet& c, double r,
                             const std::optional<WeightFn>& reference, const HittingOptions& opts) {
  const Index n = p.size();
  require(c.size() == n, ErrorCode::SpaceMismatch, "C size differs from window");
  require(c.count() > 0, ErrorCode::InvalidArgument, "C is empty");
  require(std::isfinite(r) && r >= 0.0, ErrorCode::InvalidArgument, "r must be finite and >= 0");
  require(p.is_positive(), ErrorCode::InvalidArgument, "hitting times need a positive kernel");
  if (reference)
    require(reference->size() == n, ErrorCode::SpaceMismatch, "reference weight size differs");

  HittingBracket out;
  out.r = r;
  std::vector<double> lo(n, 0.0), hi(n, kInf);
  for (Index x = 0; x < n; ++x)
    if (c.contains(x)) lo[x] = hi[x] = 1.0;

  // Lower: monotone Gauss-Seidel from 0, paths leaving the window are killed.
  for (unsigned sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double change = 0.0;
    for (Index x = 0; x < n; ++x) {
      if (c.contains(x)) continue;
      double s = 0.0;
      for (const auto& a : p.row(x).atoms()) s += a.weight * lo[a.state];
      double v = r * s;
      if (v > lo[x]) {
        change = std::max(change, (v - lo[x]) / v);
        lo[x] = v;
      }
      require(lo[x] < 1e250, ErrorCode::Divergent,
              "E_x[r^sigma] diverges at r = " + std::to_string(r) + " (state " +
                  std::to_string(x) + ")");
    }
    out.lower_sweeps = sweep + 1;
    if (change <= opts.tolerance) {
      out.lower_converged = true;
      break;
    }
  }

  auto upper_sweep = [&](std::vector<double>& u, const WeightFn* w, bool& super) {
    double change = 0.0;
    for (Index x = 0; x < n; ++x) {
      if (c.contains(x)) continue;
      const auto& row = p.row(x);
      double s = 0.0;
      for (const auto& a : row.atoms()) s += a.weight * u[a.state];
      if (row.tail_bound() > 0.0) s += row.tail_bound() * (w ? weight_beyond(row, *w) : kInf);
      double v = r * s;
      if (v > u[x] * (1.0 + 1e-12)) super = false;
      if (v < u[x]) {
        change = std::max(change, (u[x] - v) / u[x]);
        u[x] = v;
      }
    }
    return change;
  };

  if (reference) {
    // Upper: start from the reference weight and pay w beyond the window;
    // only valid when w is a supersolution off C.
    std::vector<double> u(n);
    for (Index x = 0; x < n; ++x) u[x] = c.contains(x) ? 1.0 : reference->values()[x];
    bool super = true;
    for (unsigned sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      double change = upper_sweep(u, &*reference, super);
      out.upper_sweeps = sweep + 1;
      if (!super || change <= opts.tolerance) break;
    }
    if (super) {
      hi = u;
      out.upper_bounded = true;
    }
  } else if (!p.has_tail() && out.lower_converged) {
    for (double delta : {1e-12, 1e-10, 1e-8, 1e-6}) {
      std::vector<double> v(n);
      for (Index x = 0; x < n; ++x) v[x] = c.contains(x) ? 1.0 : lo[x] * (1.0 + delta) + delta;
      bool super = true;
      auto probe = v;
      upper_sweep(probe, nullptr, super);
      if (super) {
        hi = v;
        out.upper_bounded = true;
        break;
      }
    }
  }

  out.sigma.resize(n);
  out.tau.resize(n);
  for (Index x = 0; x < n; ++x) {
    if (c.contains(x)) {
      out.sigma[x] = Interval(1.0);
    } else {
      double h = std::isfinite(hi[x]) ? round_up(hi[x] * (1.0 + 1e-12)) : kInf;
      double l = round_down(lo[x]);
      require(l <= h, ErrorCode::Divergent,
              "hitting brackets crossed at state " + std::to_string(x) +
                  ": the reference weight is not a drift function at this r");
      out.sigma[x] = Interval(std::max(0.0, l), h);
    }
  }
  for (Index x = 0; x < n; ++x) {
    if (!c.contains(x)) {
      out.tau[x] = out.sigma[x];
      continue;
    }
    const auto& row = p.row(x);
    Interval s(0.0);
    for (const auto& a : row.atoms()) s += Interval(a.weight) * out.sigma[a.state];
    double tail_hi = 0.0;
    if (row.tail_bound() > 0.0)
      tail_hi = reference ? row.tail_bound() * weight_beyond(row, *reference) : kInf;
    s += Interval(0.0, std::isfinite(tail_hi) ? round_up(tail_hi) : kInf);
    out.tau[x] = s * r;
  }
  return out;
}

// ---- minorization and split ----------------------------------------------------

MinorizationCheck verify_minorization(const Kernel& p, const MinorizationCertificate& cert,
                                      const std::optional<WeightFn>& w,
                                      std::optional<double> ui_cutoff, double ui_tolerance) {
  require(cert.t().space() == p.space(), ErrorCode::SpaceMismatch, "T lives on another space");
  MinorizationCheck out;
  Kernel t = cert.t().to_kernel();
  for (Index x = 0; x < p.size(); ++x) {
    if (!cert.c().contains(x)) continue;
    double mass = t.row(x).sum();
    if (std::fabs(mass - 1.0) > 1e-12) {
      out.reason = "NotMarkov: T(" + std::to_string(x) + ", E) = " + std::to_string(mass);
      out.x = x;
      return out;
    }
    auto pd = p.row(x).dense();
    for (const auto& a : t.row(x).atoms()) {
      double need = cert.b() * a.weight;
      if (pd[a.state] - need < -4.0 * kEps * std::max(pd[a.state], need)) {
        out.reason = "P(" + std::to_string(x) + ", " + std::to_string(a.state) + ") = " +
                     std::to_string(pd[a.state]) + " < b T = " + std::to_string(need);
        out.x = x;
        out.y = a.state;
        return out;
      }
    }
  }
  DensityKernel dk = w ? cert.t().weighted(*w) : cert.t();
  double sup = 0.0;
  for (Index x = 0; x < dk.size(); ++x)
    if (cert.c().contains(x))
      for (const auto& a : dk.alpha_row(x)) sup = std::max(sup, a.weight);
  double cutoff = ui_cutoff.value_or(round_up(sup) * 2.0 + 1.0);
  double ui = 0.0;
  for (Index x = 0; x < dk.size(); ++x) {
    if (!cert.c().contains(x)) continue;
    double s = 0.0;
    for (const auto& a : dk.alpha_row(x))
      if (a.weight >= cutoff) s += a.weight * dk.nu().at(a.state);
    ui = std::max(ui, s);
  }
  out.ui = ui;
  if (ui > ui_tolerance) {
    out.reason = "NotUniformlyIntegrable: tail " + std::to_string(ui) + " at cutoff " +
                 std::to_string(cutoff);
    return out;
  }
  out.pass = true;
  return out;
}

Kernel split_kernel(const Kernel& p, const MinorizationCertificate& cert) {
  require(p.is_markov(), ErrorCode::NotMarkov, "split kernel needs a Markov kernel");
  auto check = verify_minorization(p, cert);
  require(check.pass, ErrorCode::InvalidArgument, "minorization fails: " + check.reason);
  Kernel t = cert.t().to_kernel();
  const double b = cert.b();
  std::vector<Kernel::Row> rows;
  rows.reserve(p.size());
  for (Index x = 0; x < p.size(); ++x) {
    const auto& row = p.row(x);
    if (!cert.c().contains(x)) {
      rows.push_back(row);
    } else if (b == 1.0) {
      rows.push_back(Kernel::Row::dirac(p.space(), x));
    } else {
      auto d = row.dense();
      for (const auto& a : t.row(x).atoms()) d[a.state] -= b * a.weight;
      for (auto& v : d) v = std::max(0.0, v) / (1.0 - b);
      rows.push_back(Kernel::Row::from_dense(p.space(), d, row.tail_bound() / (1.0 - b),
                                             row.tail_reach()));
    }
  }
  bool markov = true;
  for (const auto& r : rows)
    if (std::fabs(r.sum() + r.tail_bound() - 1.0) > 1e-12) markov = false;
  return Kernel(p.space(), std::move(rows), markov);
}

// ---- renewal quantities ------------------------------------------------------

Interval h_of_r(const Kernel& p0, const Kernel& p, const DriftCertificate& drift,
                const MinorizationCertificate& minor, double r, const HittingOptions& opts) {
  validate(drift);
  require(r >= 0.0 && r <= drift.r1, ErrorCode::InvalidArgument, "h(r) needs 0 <= r <= r1");
  require(minor.c() == drift.c, ErrorCode::InvalidArgument, "drift and minorization sets differ");
  // C is absorbing for the split chain when b = 1.
  if (minor.b() == 1.0) return Interval(r);
  auto hb = minimal_drift(p, drift.c, r, drift.w, opts);
  double lo = 0.0, hi = 0.0;
  for (Index x : drift.c.members()) {
    const auto& row = p0.row(x);
    Interval s(0.0);
    for (const auto& a : row.atoms()) s += Interval(a.weight) * hb.sigma[a.state];
    if (row.tail_bound() > 0.0) {
      double wb = weight_beyond(row, drift.w);
      s += Interval(0.0, std::isfinite(wb) ? round_up(row.tail_bound() * wb) : kInf);
    }
    s = s * r;
    lo = std::max(lo, s.lo());
    hi = std::max(hi, s.hi());
  }
  return {lo, hi};
}

double eta1(const DriftCertificate& drift, double b) {
  if (b >= 1.0) return kInf;
  return std::max(drift.r1, drift.eta / (1.0 - b));
}

double m_of_r(const DriftCertificate& drift, double b, double r) {
  double e1 = eta1(drift, b);
  double d = drift.r1 - std::max(r, 1.0);
  if (!std::isfinite(e1) || d <= 0.0) return kInf;
  return drift.r1 * e1 / (d * d);
}

double big_m(double m, double b, double h) {
  double den = 1.0 - (1.0 - b) * h;
  if (den <= 0.0 || !std::isfinite(m)) return kInf;
  return m / den;
}

double big_mw(const DriftCertificate& drift, double r, double big_m_value) {
  if (r >= drift.r1 || !std::isfinite(big_m_value)) return kInf;
  return drift.r1 / (drift.r1 - r) * (1.0 + drift.eta / drift.r1 * r * big_m_value);
}

RbResult compute_rb(const Kernel& p, const DriftCertificate& drift,
                    const MinorizationCertificate& minor, const RbOptions& opts) {
  validate(drift);
  RbResult out;
  const double r1 = drift.r1;
  const double b = minor.b();
  if (b == 1.0) {
    out.r_b = Interval(r1);
    out.bound = Interval(1.0) / Interval(r1);
    out.samples.push_back({r1, Interval(r1)});
    out.note = "b = 1: h(r) = r, so r_b = r1";
    return out;
  }

  Kernel p0 = split_kernel(p, minor);
  const double theta = 1.0 / (1.0 - b);
  auto h = [&](double r) {
    Interval v = h_of_r(p0, p, drift, minor, r, opts.hitting);
    out.samples.push_back({r, v});
    return v;
  };

  double good = 1.0, bad = r1;
  bool bad_certified = false, ambiguous = false;
  Interval h1 = h(1.0);
  if (!(h1.hi() < theta)) {
    out.inconclusive = true;
    out.note = "h(1) is not certified below 1/(1-b); widen the window";
    out.r_b = Interval(1.0, r1);
    out.bound = Interval(1.0) / Interval(r1);
    out.bound = Interval(out.bound.lo(), 1.0);
    return out;
  }
  Interval hr1 = h(r1);
  if (hr1.hi() < theta) {
    good = r1;
  } else {
    bad_certified = hr1.lo() >= theta;
    for (unsigned i = 0; i < opts.max_bisections && bad - good > opts.resolution; ++i) {
      double mid = 0.5 * (good + bad);
      Interval hm = h(mid);
      if (hm.hi() < theta) {
        good = mid;
      } else if (hm.lo() >= theta) {
        bad = mid;
        bad_certified = true;
      } else {
        ambiguous = true;
        break;
      }
    }
  }
  out.r_b = Interval(good, bad);
  Interval inv_hi = Interval(1.0) / Interval(good);
  Interval inv_lo = Interval(1.0) / Interval(bad);
  out.bound = Interval(inv_lo.lo(), inv_hi.hi());
  if (ambiguous && (good == 1.0 || bad - good > 1e-6)) {
    out.inconclusive = true;
    out.note = "h brackets straddle 1/(1-b) on [" + std::to_string(good) + ", " +
               std::to_string(bad) + "]; a larger window tightens them";
  } else {
    out.note = bad_certified ? "bisection on h" : "h stays below 1/(1-b) up to r1";
  }
  std::sort(out.samples.begin(), out.samples.end(),
            [](const auto& a, const auto& c) { return a.first < c.first; });
  return out;
}

RenewalPair renewal_identity(const Kernel& p, const MinorizationCertificate& minor, Index x,
                             unsigned n) {
  require_finite_chain(p, "renewal identity");
  require(x < p.size(), ErrorCode::InvalidArgument, "start state outside the window");
  RenewalPair out;

  auto s = dense_residual(p, minor);
  std::vector<double> v(p.size(), 1.0), next(p.size());
  for (unsigned k = 0; k < n; ++k) {
    for (Index i = 0; i < p.size(); ++i) {
      double acc = 0.0;
      for (Index j = 0; j < p.size(); ++j) acc += s[i][j] * v[j];
      next[i] = acc;
    }
    v.swap(next);
  }
  out.lhs = v[x];

  Kernel p0 = split_kernel(p, minor);
  const double q = 1.0 - minor.b();
  std::vector<double> qpow(n + 1, 1.0);
  for (unsigned k = 1; k <= n; ++k) qpow[k] = qpow[k - 1] * q;

  double total = 0.0;
  std::size_t paths = 0;
  // Depth-first over split-chain paths Z_0 = x, ..., Z_n.
  auto walk = [&](auto&& self, Index z, unsigned depth, double prob, unsigned visits) -> void {
    if (depth == n) {
      total += prob * qpow[visits];
      require(++paths <= kPathLimit, ErrorCode::SizeLimit, "path enumeration limit exceeded");
      return;
    }
    unsigned v2 = visits + (minor.c().contains(z) ? 1u : 0u);
    for (const auto& a : p0.row(z).atoms())
      if (a.weight > 0.0) self(self, a.state, depth + 1, prob * a.weight, v2);
  };
  walk(walk, x, 0, 1.0, 0);
  out.rhs = total;
  out.paths = paths;
  return out;
}

GfSuite gf_suite(const Kernel& p, const DriftCertificate& drift,
                 const MinorizationCertificate& minor, Index x, double r, unsigned k_max,
                 unsigned n_max) {
  validate(drift);
  require_finite_chain(p, "generating-function suite");
  require(x < p.size(), ErrorCode::InvalidArgument, "start state outside the window");
  require(r > 0.0 && r != 1.0 && r < drift.r1, ErrorCode::InvalidArgument,
          "gf_suite needs 0 < r < r1 and r != 1");
  require(p.size() <= kOracleSizeLimit, ErrorCode::SizeLimit, "chain too large for dense solves");
  const Index n = p.size();
  const double b = minor.b();
  GfSuite out;
  out.x = x;
  out.r = r;

  Kernel p0 = split_kernel(p, minor);
  auto cm = drift.c.members();
  std::vector<Index> dm;
  for (Index i = 0; i < n; ++i)
    if (!drift.c.contains(i)) dm.push_back(i);
  const auto nc = static_cast<Eigen::Index>(cm.size());
  const auto nd = static_cast<Eigen::Index>(dm.size());

  // Hitting matrix A(x, c) = E_x[r^σ; Z_σ = c].
  Eigen::MatrixXd pd = to_eigen(p.dense());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), nc);
  for (Eigen::Index j = 0; j < nc; ++j) a(static_cast<Eigen::Index>(cm[j]), j) = 1.0;
  if (nd > 0) {
    Eigen::MatrixXd pdd(nd, nd), pdc(nd, nc);
    for (Eigen::Index i = 0; i < nd; ++i) {
      for (Eigen::Index j = 0; j < nd; ++j)
        pdd(i, j) = pd(static_cast<Eigen::Index>(dm[i]), static_cast<Eigen::Index>(dm[j]));
      for (Eigen::Index j = 0; j < nc; ++j)
        pdc(i, j) = pd(static_cast<Eigen::Index>(dm[i]), static_cast<Eigen::Index>(cm[j]));
    }
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(nd, nd) - r * pdd;
    Eigen::VectorXcd ev = pdd.eigenvalues();
    double rad = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) rad = std::max(rad, std::abs(ev(i)));
    require(r * rad < 1.0, ErrorCode::Divergent, "E_x[r^sigma] diverges at this r");
    Eigen::MatrixXd ad = sys.partialPivLu().solve(r * pdc);
    for (Eigen::Index i = 0; i < nd; ++i) a.row(static_cast<Eigen::Index>(dm[i])) = ad.row(i);
  }

  Eigen::MatrixXd p0d = to_eigen(p0.dense());
  Eigen::MatrixXd ret(nc, nc);
  for (Eigen::Index i = 0; i < nc; ++i) ret.row(i) = r * p0d.row(static_cast<Eigen::Index>(cm[i])) * a;
  out.h = ret.rowwise().sum().maxCoeff();

  Eigen::VectorXd v = Eigen::VectorXd::Ones(nc);
  Eigen::RowVectorXd ax = a.row(static_cast<Eigen::Index>(x));
  for (unsigned k = 0; k <= k_max; ++k) {
    out.H.push_back(ax.dot(v));
    v = ret * v;
  }
  for (unsigned k = 0; k <= k_max; ++k) {
    double lk = k == 0 ? (r * out.H[0] - 1.0) / (r - 1.0)
                       : r * (out.H[k] - out.H[k - 1]) / (r - 1.0);
    out.L.push_back(lk);
  }
  double qk = 1.0;
  for (unsigned k = 0; k <= k_max; ++k) {
    out.g_renewal += qk * out.L[k];
    qk *= (1.0 - b);
  }
  // Omitted terms: L_k <= r H_0 h^k / |r - 1| and H_k <= H_0 h^k.
  double q = (1.0 - b) * out.h;
  if (b == 1.0)
    out.g_remainder = 0.0;
  else if (q < 1.0)
    out.g_remainder = r * out.H[0] / std::fabs(r - 1.0) * std::pow(q, k_max + 1.0) / (1.0 - q) *
                      std::max(1.0, 1.0 / out.h);
  else
    out.g_remainder = kInf;

  Eigen::MatrixXd s = to_eigen(dense_residual(p, minor));
  Eigen::VectorXd wv(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) wv(static_cast<Eigen::Index>(i)) = drift.w.values()[i];
  const double wx = drift.w.values()[x];

  Eigen::VectorXd term = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  double rn = 1.0;
  for (unsigned k = 0; k <= n_max; ++k) {
    out.g_series += rn * term(static_cast<Eigen::Index>(x));
    term = s * term;
    rn *= r;
  }

  Eigen::VectorXcd sev = s.eigenvalues();
  double srad = 0.0;
  for (Eigen::Index i = 0; i < sev.size(); ++i) srad = std::max(srad, std::abs(sev(i)));
  if (r * srad < 1.0) {
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n)) - r * s;
    auto lu = sys.partialPivLu();
    out.g_matrix = lu.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)))(
        static_cast<Eigen::Index>(x));
    out.gw_matrix = lu.solve(wv)(static_cast<Eigen::Index>(x)) / wx;
  } else {
    out.g_matrix = out.gw_matrix = kInf;
  }

  const double tol = 1e-10;
  out.h_bound_ok = true;
  double hk = 1.0;
  for (unsigned k = 0; k <= k_max; ++k) {
    if (out.H[k] > wx * hk * (1.0 + tol)) out.h_bound_ok = false;
    hk *= out.h;
  }
  out.renewal_ok = std::isfinite(out.g_matrix) &&
                   std::fabs(out.g_renewal - out.g_matrix) <=
                       out.g_remainder + tol * std::max(1.0, out.g_matrix);
  out.gw_bound_ok = !std::isfinite(out.gw_matrix) ||
                   (1.0 - r / drift.r1) * out.gw_matrix <=
                       (1.0 + drift.eta / drift.r1 * r * out.g_matrix / wx) * (1.0 + tol);
  out.m = m_of_r(drift, b, r);
  out.big_m = big_m(out.m, b, out.h);
  out.big_mw = big_mw(drift, r, out.big_m);
  out.m_bound_ok = out.g_matrix / wx <= out.big_m * (1.0 + tol);
  out.mw_bound_ok = out.gw_matrix <= out.big_mw * (1.0 + tol);
  out.h_growth_ok = r < 1.0 || (out.h - 1.0 >= -tol && out.h - 1.0 <= (r - 1.0) * out.m * (1.0 + tol));
  return out;
}

// ---- Foster-Lyapunov constructions -------------------------------------------

double level_set_t0(double rho, double zeta, double rho_bar) {
  require(rho >= 0.0 && rho < rho_bar && rho_bar < 1.0, ErrorCode::InvalidArgument,
          "need 0 <= rho < rho_bar < 1");
  require(zeta >= 0.0, ErrorCode::InvalidArgument, "zeta must be nonnegative");
  return zeta / ((1.0 - rho) * (rho_bar - rho));
}

double level_set_zeta(double rho, double zeta, double t) { return rho * t + zeta / (1.0 - rho); }

unsigned level_set_kt(double t, double rho) {
  require(rho >= 0.0 && rho < 1.0 && t > 0.0, ErrorCode::InvalidArgument, "need 0 <= rho < 1, t > 0");
  unsigned k = 0;
  double v = t * rho;
  while (v > 0.5) {
    ++k;
    v *= rho;
    require(k < 100000, ErrorCode::NoConvergence, "k_t search did not terminate");
  }
  return k;
}

FosterResult foster_to_small(const Kernel& p, const WeightFn& w, const StateSet& c, double rho,
                             double zeta, const SmallSetWitness& small,
                             std::optional<double> rho_bar, std::optional<double> t) {
  require(p.is_markov(), ErrorCode::NotMarkov, "Foster-Lyapunov constructions need a Markov kernel");
  require(w.size() == p.size() && c.size() == p.size(), ErrorCode::SpaceMismatch,
          "weight or set size differs from window");
  require(rho > 0.0 && rho < 1.0 && zeta >= 0.0, ErrorCode::InvalidArgument,
          "need 0 < rho < 1 and zeta >= 0");
  require(small.m >= 1 && small.b > 0.0 && small.b <= 1.0, ErrorCode::InvalidArgument,
          "small-set witness needs m >= 1 and b in (0, 1]");

  auto pw = apply_weight(p, w);
  for (Index x = 0; x < p.size(); ++x) {
    double rhs = rho * w.values()[x] + (c.contains(x) ? zeta : 0.0);
    require(pw[x].hi() <= rhs * (1.0 + 1e-12), ErrorCode::InvalidArgument,
            "drift Pw <= rho w + zeta 1_C fails at x = " + std::to_string(x));
  }
  Kernel pm = power(p, small.m);
  for (Index x : c.members()) {
    auto d = pm.row(x).dense();
    for (const auto& a : small.nu.atoms())
      require(d[a.state] >= small.b * a.weight * (1.0 - 4.0 * kEps), ErrorCode::InvalidArgument,
              "small-set witness fails at (" + std::to_string(x) + ", " +
                  std::to_string(a.state) + ")");
  }

  FosterResult out;
  if (!rho_bar) {
    double beta = 0.0;
    for (Index x : c.members()) beta = std::max(beta, w.values()[x]);
    out.direct = true;
    out.drift = {c, w, 1.0 / rho, round_up((rho * beta + zeta) / rho)};
    out.minor_kernel = pm;
    out.minor.emplace(c, small.b, constant_density(small.nu));
    return out;
  }

  out.rho_bar = *rho_bar;
  out.t0 = level_set_t0(rho, zeta, *rho_bar);
  out.t = std::max(out.t0, t.value_or(out.t0));
  out.zeta_t = level_set_zeta(rho, zeta, out.t);
  out.k_t = level_set_kt(out.t, rho);
  StateSet ct(p.size());
  for (Index x = 0; x < p.size(); ++x)
    if (w.values()[x] <= out.t) ct.insert(x);
  require(ct.count() > 0, ErrorCode::NotFound, "level set {w <= t} is empty");
  out.drift = {ct, w, 1.0 / *rho_bar, round_up(out.zeta_t / *rho_bar)};

  // Averaged kernel (k_t + 1)^-1 Σ_{k <= k_t} P^{k+m}.
  std::vector<std::vector<double>> avg(p.size(), std::vector<double>(p.size(), 0.0));
  Kernel pk = pm;
  for (unsigned k = 0; k <= out.k_t; ++k) {
    for (Index x = 0; x < p.size(); ++x)
      for (const auto& a : pk.row(x).atoms()) avg[x][a.state] += a.weight;
    if (k < out.k_t) pk = compose(pk, p);
  }
  for (auto& row : avg)
    for (auto& v : row) v /= static_cast<double>(out.k_t + 1);
  out.minor_kernel = Kernel::from_dense(p.space(), avg, p.is_markov());
  out.minor.emplace(ct, small.b / (2.0 * (out.k_t + 1)), constant_density(small.nu));
  return out;
}

Synthesis synthesize_certificates(const Kernel& p, const WeightFn& w, double t, double b,
                                  unsigned n_cap) {
  require(p.space().is_finite(), ErrorCode::InvalidArgument, "synthesis needs a finite space");
  require(p.is_markov(), ErrorCode::NotMarkov, "synthesis needs a Markov kernel");
  require(w.size() == p.size(), ErrorCode::SpaceMismatch, "weight size differs from window");
  require(b > 0.0 && b <= 1.0, ErrorCode::InvalidArgument, "b must lie in (0, 1]");
  require(t >= 1.0, ErrorCode::InvalidArgument, "t must be at least 1");
  StateSet ct(p.size());
  for (Index x = 0; x < p.size(); ++x)
    if (w.values()[x] <= t) ct.insert(x);
  require(ct.count() > 0, ErrorCode::NotFound, "level set {w <= t} is empty");

  std::string obstruction;
  Kernel pn = p;
  for (unsigned n = 1; n <= n_cap; ++n) {
    if (n > 1) pn = compose(pn, p);
    auto ev = eigen_oracle(pn);
    double sub = 0.0;
    for (const auto& z : ev)
      if (std::abs(z - Complex(1.0, 0.0)) > 1e-9) sub = std::max(sub, std::abs(z));
    double rho_n = sub + 1e-6;
    auto pw = apply_weight(pn, w);
    double eta_hat = 0.0;
    for (Index x = 0; x < p.size(); ++x) {
      if (ct.contains(x))
        eta_hat = std::max(eta_hat, pw[x].hi());
      else
        rho_n = std::max(rho_n, round_up(pw[x].hi() / w.values()[x]));
    }
    if (rho_n >= 1.0) {
      obstruction = sub + 1e-6 >= 1.0
                        ? "P^n keeps a non-unit eigenvalue of modulus ~1 (periodic or reducible)"
                        : "P^n w / w stays >= 1 off the level set";
      continue;
    }

    std::vector<double> nu_d(p.size(), 0.0);
    for (Index x : ct.members())
      for (const auto& a : pn.row(x).atoms()) nu_d[a.state] += a.weight;
    double mass = 0.0;
    for (double v : nu_d) mass += v;
    for (double& v : nu_d) v /= mass;
    Measure nu = Measure::from_dense(p.space(), nu_d);
    std::vector<DensityKernel::Row> alpha(p.size());
    for (Index x : ct.members()) {
      double tm = 0.0;
      for (const auto& a : pn.row(x).atoms()) tm += a.weight;
      for (const auto& a : pn.row(x).atoms())
        if (a.weight > 0.0) alpha[x].push_back({a.state, a.weight / nu_d[a.state] / tm});
    }
    // Keep T rows exactly Markov after the division round trip.
    DensityKernel t_dk(nu, alpha);
    Kernel tk = t_dk.to_kernel();
    bool ok = true;
    for (Index x : ct.members())
      if (std::fabs(tk.row(x).sum() - 1.0) > 1e-12 || tk.row(x).sum() < b - 1e-12) ok = false;
    if (!ok) {
      obstruction = "T row mass falls below b";
      continue;
    }

    Synthesis out;
    out.n = n;
    out.pn = pn;
    out.rho_n = rho_n;
    out.drift = {ct, w, 1.0 / rho_n, round_up(eta_hat * (1.0 + 1e-12) / rho_n)};
    out.minor.emplace(ct, b, t_dk);
    if (!verify_drift(pn, out.drift).pass || !verify_minorization(pn, *out.minor, w).pass) {
      obstruction = "constructed certificate failed re-verification";
      continue;
    }
    out.rb = compute_rb(pn, out.drift, *out.minor);
    out.implied_bound = pow(Interval(out.rb.bound.hi()), 1.0 / n).hi();
    return out;
  }
  fail(ErrorCode::NotFound, "no certificate with n <= " + std::to_string(n_cap) + ": " +
                                (obstruction.empty() ? "search exhausted" : obstruction));
}

}  // namespace qcert
