#include "qcert/examples.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace qcert {

namespace {

// cos(2^n π x) through the exact phase 2^n x mod 2.
double dyadic_cos(unsigned n, double x) {
  double phase = std::fmod(std::ldexp(x, static_cast<int>(n)), 2.0);
  return std::cos(std::numbers::pi * phase);
}

Complex eigen_candidate(Complex lambda, unsigned terms, double x) {
  Complex f(0.0, 0.0), lp(1.0, 0.0);
  for (unsigned n = 1; n <= terms; ++n) {
    f += lp * dyadic_cos(n, x);
    lp *= lambda;
  }
  return f;
}

}  // namespace

ConzeRaugiResult conze_raugi_residual(const UnitFn& u, Complex lambda, unsigned terms,
                                      unsigned grid) {
  require(terms >= 1, ErrorCode::InvalidArgument, "need at least one term");
  require(grid >= 2, ErrorCode::InvalidArgument, "need at least two grid points");
  require(std::abs(lambda) < 1.0, ErrorCode::InvalidArgument, "need |lambda| < 1");
  ConzeRaugiResult out;
  for (unsigned i = 0; i < grid; ++i) {
    double x = static_cast<double>(i) / (grid - 1);
    double a = 0.5 * x, b = 0.5 * (x + 1.0);
    double ua = u(a), ub = u(b);
    require(ua >= 0.0 && ub >= 0.0, ErrorCode::NotAKernel,
            "u is negative near x = " + std::to_string(x));
    out.unity_defect = std::max(out.unity_defect, std::fabs(ua + ub - 1.0));
  }
  require(out.unity_defect <= 1e-12, ErrorCode::NotAKernel,
          "u(x/2) + u((x+1)/2) != 1 on the grid (defect " + std::to_string(out.unity_defect) + ")");

  for (unsigned i = 0; i < grid; ++i) {
    double x = static_cast<double>(i) / (grid - 1);
    double a = 0.5 * x, b = 0.5 * (x + 1.0);
    Complex pf = u(a) * eigen_candidate(lambda, terms, a) + u(b) * eigen_candidate(lambda, terms, b);
    double r = std::abs(pf - lambda * eigen_candidate(lambda, terms, x));
    if (r > out.residual) {
      out.residual = r;
      out.worst_x = x;
    }
  }
  double m = std::abs(lambda);
  out.tail_bound = 2.0 * std::pow(m, terms) / (1.0 - m);
  return out;
}

WalkExample build_reflected_walk(double p, Index x_max) {
  require(p > 0.0 && p < 0.5, ErrorCode::InvalidArgument, "walk needs 0 < p < 1/2");
  const double q = 1.0 - p;
  auto space = StateSpace::windowed(x_max);
  const Index n = space.size();
  std::vector<Kernel::Row> rows;
  rows.reserve(n);
  rows.emplace_back(space, std::vector<Atom<double>>{{0, q}, {1, p}});
  for (Index x = 1; x < x_max; ++x)
    rows.emplace_back(space, std::vector<Atom<double>>{{x - 1, q}, {x + 1, p}});
  rows.emplace_back(space, std::vector<Atom<double>>{{x_max - 1, q}}, p, Index{1});
  Kernel kernel(space, std::move(rows), true);

  const double z = std::sqrt(q / p);
  const double r1 = 1.0 / (2.0 * std::sqrt(p * q));
  const double eta = r1 * (q + p * z);
  WeightFn w = WeightFn::geometric(n, z);
  StateSet c = StateSet::of(n, {0});
  DriftCertificate drift{c, w, r1, eta};
  MinorizationCertificate minor(c, 1.0, constant_density(kernel.row(0)));
  return WalkExample{p, z, r1, eta, 2.0 * std::sqrt(p * q), std::move(kernel), w, drift, minor};
}

Kernel reflected_walk_finite(double p, Index n) {
  require(n >= 2 && p > 0.0 && p < 1.0, ErrorCode::InvalidArgument, "need n >= 2 and 0 < p < 1");
  const double q = 1.0 - p;
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (Index x = 0; x < n; ++x) {
    d[x][x == 0 ? 0 : x - 1] += q;
    d[x][x + 1 == n ? x : x + 1] += p;
  }
  return Kernel::from_dense(StateSpace::finite(n), d, true);
}

Kernel random_chain(Index n, std::uint64_t seed, unsigned extra) {
  require(n >= 2, ErrorCode::InvalidArgument, "need at least two states");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  auto space = StateSpace::finite(n);
  std::vector<Kernel::Row> rows;
  for (Index x = 0; x < n; ++x) {
    std::set<Index> targets{x, (x + 1) % n};
    for (unsigned k = 0; k < extra; ++k) targets.insert(pick(rng));
    std::vector<Atom<double>> atoms;
    double total = 0.0;
    for (Index y : targets) {
      atoms.push_back({y, weight(rng)});
      total += atoms.back().weight;
    }
    for (auto& a : atoms) a.weight /= total;
    rows.emplace_back(space, std::move(atoms));
  }
  return Kernel(space, std::move(rows), true);
}

Kernel random_positive_kernel(Index n, std::uint64_t seed, double mass_lo, double mass_hi,
                              unsigned support) {
  require(n >= 1 && mass_lo > 0.0 && mass_lo <= mass_hi, ErrorCode::InvalidArgument,
          "need n >= 1 and 0 < mass_lo <= mass_hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.0, 1.0);
  std::uniform_real_distribution<double> mass(mass_lo, mass_hi);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  auto space = StateSpace::finite(n);
  std::vector<Kernel::Row> rows;
  for (Index x = 0; x < n; ++x) {
    std::set<Index> targets;
    for (unsigned k = 0; k < support; ++k) targets.insert(pick(rng));
    std::vector<Atom<double>> atoms;
    double total = 0.0;
    for (Index y : targets) {
      atoms.push_back({y, weight(rng) + 1e-3});
      total += atoms.back().weight;
    }
    double m = mass(rng);
    for (auto& a : atoms) a.weight *= m / total;
    rows.emplace_back(space, std::move(atoms));
  }
  return Kernel(space, std::move(rows));
}

}  // namespace qcert
