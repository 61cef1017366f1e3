#include "qcert/ergodic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qcert/ess_spectrum.hpp"

namespace qcert {

namespace {

constexpr double kPeripheral = 1e-9;

Eigen::MatrixXd folded_dense(const Kernel& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Index x = 0; x < p.size(); ++x) {
    const auto& row = p.row(x);
    for (const auto& a : row.atoms())
      m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a.state)) += a.weight;
    m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) += row.tail_bound();
  }
  return m;
}

// Smallest k with (z/|z|)^k = 1 to within 1e-6.
unsigned root_order(Complex z, unsigned cap) {
  Complex u = z / std::abs(z);
  Complex acc = u;
  for (unsigned k = 1; k <= cap; ++k) {
    if (std::abs(acc - Complex(1.0, 0.0)) < 1e-6) return k;
    acc *= u;
  }
  fail(ErrorCode::NoConvergence, "peripheral eigenvalue is not a root of unity of order <= " +
                                     std::to_string(cap));
}

unsigned period_of(const std::vector<Complex>& ev, unsigned cap) {
  if (ev.empty() || std::abs(ev.front()) == 0.0) return 1;
  const double r = std::abs(ev.front());
  unsigned d = 1;
  for (const auto& z : ev)
    if (std::abs(z) >= r - kPeripheral) d = std::lcm(d, root_order(z, cap));
  return d;
}

double weighted_op_norm(const Eigen::MatrixXd& a, std::span<const double> w) {
  double best = 0.0;
  for (Eigen::Index x = 0; x < a.rows(); ++x) {
    double s = 0.0;
    for (Eigen::Index y = 0; y < a.cols(); ++y) s += std::fabs(a(x, y)) * w[y];
    best = std::max(best, s / w[x]);
  }
  return best;
}

Kernel to_kernel(const Eigen::MatrixXd& m, const StateSpace& space) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()),
                                        std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return Kernel::from_dense(space, rows);
}

}  // namespace

StationaryResult stationary(const Kernel& p) {
  require(p.is_markov(), ErrorCode::NotMarkov, "stationary distributions need a Markov kernel");
  require(p.size() <= kOracleSizeLimit, ErrorCode::SizeLimit, "chain too large for dense solves");
  const Index n = p.size();
  Eigen::MatrixXd m = folded_dense(p);

  // Closed communicating classes by reachability.
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (Index s = 0; s < n; ++s) {
    std::vector<Index> stack{s};
    reach[s][s] = 1;
    while (!stack.empty()) {
      Index x = stack.back();
      stack.pop_back();
      for (Index y = 0; y < n; ++y)
        if (m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) > 0.0 && !reach[s][y]) {
          reach[s][y] = 1;
          stack.push_back(y);
        }
    }
  }
  std::vector<char> seen(n, 0);
  std::vector<std::vector<Index>> closed;
  for (Index x = 0; x < n; ++x) {
    if (seen[x]) continue;
    bool is_closed = true;
    std::vector<Index> cls;
    for (Index y = 0; y < n; ++y) {
      if (!reach[x][y]) continue;
      if (!reach[y][x]) is_closed = false;
      else cls.push_back(y);
    }
    for (Index y : cls) seen[y] = 1;
    if (is_closed) closed.push_back(cls);
  }
  require(!closed.empty(), ErrorCode::NoConvergence, "no closed class found");

  StationaryResult out;
  out.multiplicity = static_cast<unsigned>(closed.size());
  out.non_unique = closed.size() > 1;

  const auto& cls = closed.front();
  const auto k = static_cast<Eigen::Index>(cls.size());
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      a(i, j) = m(static_cast<Eigen::Index>(cls[j]), static_cast<Eigen::Index>(cls[i])) -
                (i == j ? 1.0 : 0.0);
  a.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  Eigen::VectorXd sol = a.partialPivLu().solve(rhs);

  std::vector<double> pi(n, 0.0);
  for (Eigen::Index i = 0; i < k; ++i) pi[cls[i]] = std::max(0.0, sol(i));
  double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& v : pi) v /= total;

  Eigen::Map<Eigen::RowVectorXd> pv(pi.data(), static_cast<Eigen::Index>(n));
  Eigen::RowVectorXd diff = pv * m - pv;
  out.residual = diff.cwiseAbs().maxCoeff();
  require(out.residual <= 1e-10, ErrorCode::NoConvergence,
          "stationary residual " + std::to_string(out.residual) + " exceeds 1e-10");
  out.pi = Measure::from_dense(p.space(), pi);
  return out;
}

unsigned period_detect(const Kernel& p) {
  require(p.space().is_finite(), ErrorCode::InvalidArgument, "period detection needs a finite space");
  auto ev = eigen_oracle(p);
  return period_of(ev, static_cast<unsigned>(p.size()));
}

std::vector<std::vector<double>> basis_suite(const WeightFn& w) {
  const Index n = w.size();
  std::vector<std::vector<double>> suite;
  for (Index y = 0; y < n; ++y) {
    std::vector<double> f(n, 0.0);
    f[y] = w.values()[y];
    suite.push_back(std::move(f));
  }
  suite.emplace_back(w.values().begin(), w.values().end());
  std::vector<double> alt(w.values().begin(), w.values().end());
  for (Index y = 1; y < n; y += 2) alt[y] = -alt[y];
  suite.push_back(std::move(alt));
  return suite;
}

ErgodicReport ergodic_decay_check(const Kernel& p, const WeightFn& w,
                                  const std::vector<std::vector<double>>& f_suite, unsigned n_max,
                                  bool strict) {
  require(p.space().is_finite(), ErrorCode::InvalidArgument, "decay check needs a finite space");
  require(p.is_markov(), ErrorCode::NotMarkov, "decay check needs a Markov kernel");
  require(p.size() <= kOracleSizeLimit, ErrorCode::SizeLimit, "chain too large for dense solves");
  require(w.size() == p.size(), ErrorCode::SpaceMismatch, "weight size differs from window");
  require(!f_suite.empty(), ErrorCode::InvalidArgument, "test-function suite is empty");
  require(n_max >= 2, ErrorCode::InvalidArgument, "n_max must be at least 2");
  const Index n = p.size();
  const auto en = static_cast<Eigen::Index>(n);
  const auto wv = w.values();
  for (const auto& f : f_suite) {
    require(f.size() == n, ErrorCode::SpaceMismatch, "test function size differs from window");
    for (Index x = 0; x < n; ++x)
      require(std::fabs(f[x]) <= wv[x] * (1.0 + 1e-12), ErrorCode::InvalidArgument,
              "test function has ||f||_w > 1");
  }

  ErgodicReport out;
  out.pi = stationary(p);
  Eigen::MatrixXd pm = folded_dense(p);

  Eigen::EigenSolver<Eigen::MatrixXd> right(pm, true);
  Eigen::EigenSolver<Eigen::MatrixXd> left(pm.transpose(), true);
  require(right.info() == Eigen::Success && left.info() == Eigen::Success,
          ErrorCode::NoConvergence, "eigen solver failed");
  std::vector<Eigen::Index> pr, pl;
  std::vector<Complex> ev;
  for (Eigen::Index i = 0; i < en; ++i) {
    Complex z = right.eigenvalues()(i);
    ev.push_back(z);
    if (std::abs(z) >= 1.0 - kPeripheral) pr.push_back(i);
    else out.subdominant = std::max(out.subdominant, std::abs(z));
    if (std::abs(Complex(left.eigenvalues()(i))) >= 1.0 - kPeripheral) pl.push_back(i);
  }
  require(!pr.empty() && pr.size() == pl.size(), ErrorCode::NoConvergence,
          "left and right peripheral eigenspaces disagree");
  std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) { return std::abs(a) > std::abs(b); });
  out.d = period_of(ev, static_cast<unsigned>(n));

  const auto np = static_cast<Eigen::Index>(pr.size());
  Eigen::MatrixXcd vr(en, np), ul(en, np);
  for (Eigen::Index j = 0; j < np; ++j) {
    vr.col(j) = right.eigenvectors().col(pr[j]);
    ul.col(j) = left.eigenvectors().col(pl[j]);
  }
  Eigen::MatrixXcd gram = ul.transpose() * vr;
  Eigen::MatrixXd s_proj = (vr * gram.fullPivLu().solve(ul.transpose())).real();

  // The same limit by repeated squaring of P^d; exact when P^d is already
  // idempotent (e.g. permutations).
  Eigen::MatrixXd pd = Eigen::MatrixXd::Identity(en, en);
  for (unsigned k = 0; k < out.d; ++k) pd = pd * pm;
  Eigen::MatrixXd s_pow = pd;
  for (int i = 0; i < 64; ++i) {
    Eigen::MatrixXd sq = s_pow * s_pow;
    double change = (sq - s_pow).cwiseAbs().maxCoeff();
    s_pow = sq;
    if (change <= 1e-15) break;
  }
  out.projector_gap = (s_proj - s_pow).cwiseAbs().maxCoeff();
  Eigen::MatrixXd s = out.projector_gap <= 1e-9 ? s_pow : s_proj;

  std::vector<Eigen::MatrixXd> pk{Eigen::MatrixXd::Identity(en, en)};
  for (unsigned k = 1; k < out.d; ++k) pk.push_back(pk.back() * pm);
  Eigen::MatrixXd p1 = Eigen::MatrixXd::Zero(en, en);
  for (const auto& m : pk) p1 += m * s;
  p1 /= static_cast<double>(out.d);
  out.s = to_kernel(s, p.space());
  out.cesaro = to_kernel(p1, p.space());

  out.kappa = out.subdominant + 0.01;
  require(out.kappa < 1.0, ErrorCode::NoConvergence,
          "subdominant modulus too close to 1 for a decay envelope");

  std::vector<Eigen::VectorXd> fs;
  for (const auto& f : f_suite) fs.push_back(Eigen::Map<const Eigen::VectorXd>(f.data(), en));

  // P^{nd+k} - P^k S = P^k (P^d - S)^n, with (P^d - S)^0 read as I - S.
  Eigen::MatrixXd r = pd - s;
  Eigen::MatrixXd rn = Eigen::MatrixXd::Identity(en, en) - s;
  std::vector<std::pair<std::size_t, Index>> suite_arg(n_max + 1);
  out.table.resize(n_max + 1);
  for (unsigned m = 0; m <= n_max; ++m) {
    unsigned k = m % out.d;
    if (m > 0 && k == 0) rn = r * rn;
    Eigen::MatrixXd a = k == 0 ? rn : Eigen::MatrixXd(pk[k] * rn);
    auto& row = out.table[m];
    row.n = m;
    row.op_norm = weighted_op_norm(a, wv);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      Eigen::VectorXd af = a * fs[i];
      for (Eigen::Index x = 0; x < en; ++x) {
        double v = std::fabs(af(x)) / wv[x];
        if (v > row.suite_sup) {
          row.suite_sup = v;
          suite_arg[m] = {i, static_cast<Index>(x)};
        }
      }
    }
  }

  for (unsigned m = 0; m <= n_max / 2; ++m)
    out.D = std::max(out.D, out.table[m].op_norm / std::pow(out.kappa, m));

  out.envelope_ok = true;
  for (unsigned m = 0; m <= n_max; ++m) {
    auto& row = out.table[m];
    row.envelope = out.D * std::pow(out.kappa, m);
    if (out.violation) continue;
    double limit = row.envelope * (1.0 + 1e-9);
    if (row.suite_sup > limit) {
      out.violation = EnvelopeWitness{m, suite_arg[m].first, suite_arg[m].second, row.suite_sup,
                                      row.envelope};
    } else if (row.op_norm > limit) {
      out.violation = EnvelopeWitness{m, std::nullopt, 0, row.op_norm, row.envelope};
    }
  }
  out.envelope_ok = !out.violation;

  // Least-squares slope of log ||P^m - P^{m mod d} S||_w over the second half.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (unsigned m = n_max / 2; m <= n_max; ++m) {
    double v = out.table[m].op_norm;
    if (!(v > 0.0) || !std::isfinite(std::log(v))) continue;
    double y = std::log(v);
    sx += m;
    sy += y;
    sxx += double(m) * m;
    sxy += m * y;
    ++cnt;
  }
  if (cnt >= 2)
    out.log_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  else
    out.log_slope = -std::numeric_limits<double>::infinity();
  out.slope_ok = out.log_slope <= std::log(out.kappa) + 0.02;

  // Cesàro averages against P1.
  out.cesaro_ok = true;
  const double dc = std::max(out.D, 1.0);
  std::vector<Eigen::VectorXd> pkf = fs, acc(fs.size(), Eigen::VectorXd::Zero(en)), p1f;
  for (const auto& f : fs) p1f.push_back(p1 * f);
  for (unsigned m = 1; m <= n_max && out.cesaro_ok; ++m) {
    double bound = 3.0 * dc / (m * (1.0 - out.kappa));
    for (std::size_t i = 0; i < fs.size(); ++i) {
      acc[i] += pkf[i];
      pkf[i] = pm * pkf[i];
      Eigen::VectorXd diff = acc[i] / double(m) - p1f[i];
      for (Eigen::Index x = 0; x < en; ++x)
        if (std::fabs(diff(x)) / wv[x] > bound) out.cesaro_ok = false;
    }
  }

  if (strict && out.violation) {
    const auto& v = *out.violation;
    fail(ErrorCode::EnvelopeViolated,
         "envelope D kappa^n fails at n = " + std::to_string(v.n) +
             (v.f ? ", f = " + std::to_string(*v.f) + ", x = " + std::to_string(v.x)
                  : std::string(" (operator norm)")) +
             ": residual " + std::to_string(v.residual) + " > " + std::to_string(v.envelope));
  }
  return out;
}

}  // namespace qcert
