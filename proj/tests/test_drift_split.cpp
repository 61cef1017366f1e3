#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcert/drift_split.hpp"
#include "qcert/ergodic.hpp"
#include "qcert/ess_spectrum.hpp"
#include "qcert/examples.hpp"

using namespace qcert;

namespace {

const double kBound = 2 * std::sqrt(0.21);

std::vector<char> mask(const StateSet& c) {
  std::vector<char> m(c.size());
  for (Index x = 0; x < c.size(); ++x) m[x] = c.contains(x);
  return m;
}

// Oracle for h(r): first step with P0 from C, then the truncated hitting series
// with remainder paid by sup w (E_z[r^σ] <= w(z) for r <= r1).
Interval h_oracle(const oracle::RenewalCase& rc, double r, unsigned depth) {
  auto p0 = oracle::dense(split_kernel(rc.p, rc.minor));
  auto in_c = mask(rc.drift.c);
  double sup_w = 0.0;
  for (double v : rc.drift.w.values()) sup_w = std::max(sup_w, v);
  double lo = 0.0, hi = 0.0;
  for (Index x : rc.drift.c.members()) {
    double l = 0.0, h = 0.0;
    for (Index y = 0; y < p0.size(); ++y) {
      auto s = oracle::hitting_series(rc.dense, in_c, y, r, depth, sup_w);
      l += p0[x][y] * r * s.value;
      h += p0[x][y] * r * (s.value + s.remainder);
    }
    lo = std::max(lo, l);
    hi = std::max(hi, h);
  }
  return {lo, hi};
}

}  // namespace

TEST(StateSet, Basics) {
  auto s = StateSet::of(6, {1, 4});
  EXPECT_TRUE(s.contains(4));
  EXPECT_FALSE(s.contains(0));
  EXPECT_FALSE(s.contains(99));
  EXPECT_EQ(s.count(), 2u);
  EXPECT_EQ(s.members(), (std::vector<Index>{1, 4}));
  EXPECT_EQ(StateSet::all(3).count(), 3u);
}

TEST(Drift, WalkCertificatePassesAndBindsOffOrigin) {
  auto walk = build_reflected_walk(0.3, 300);
  EXPECT_NEAR(walk.r1, 1.091089, 1e-6);
  EXPECT_NEAR(walk.eta, 1.2637626, 1e-7);
  auto chk = verify_drift(walk.kernel, walk.drift);
  EXPECT_TRUE(chk.pass);
  for (Index x = 1; x < 300; ++x)
    EXPECT_NEAR(chk.pw[x].hi() / walk.w(x), kBound, 1e-12) << x;
  EXPECT_NEAR(chk.implied_constant, walk.eta / walk.r1, 1e-12);
}

TEST(Drift, ConstantWeightFailsOffC) {
  Kernel p = random_chain(10, 2);
  DriftCertificate cert{StateSet::of(10, {0, 1}), WeightFn::constant(10), 1.1, 1.1};
  auto chk = verify_drift(p, cert);
  EXPECT_FALSE(chk.pass);
  EXPECT_FALSE(cert.c.contains(chk.worst));
  EXPECT_NEAR(chk.worst_excess, 1.0 - 1.0 / 1.1, 1e-12);
}

TEST(Drift, ValidationRejectsBadCertificates) {
  EXPECT_THROW(validate(DriftCertificate{StateSet(3), WeightFn::constant(3), 1.5, 1.0}), Error);
  EXPECT_THROW(validate(DriftCertificate{StateSet::all(3), WeightFn::constant(3), 1.0, 1.0}), Error);
}

TEST(MinimalDrift, OneOnC) {
  auto rc = oracle::renewal_case(3);
  auto br = minimal_drift(rc.p, rc.drift.c, 1.1);
  EXPECT_EQ(br.sigma[0], Interval(1.0));
  EXPECT_EQ(br.sigma[1], Interval(1.0));
}

TEST(MinimalDrift, WalkBelowCriticalMatchesClosedForm) {
  // the upper bracket carries an edge term of order (z / phi_+)^N phi_+^x
  auto walk = build_reflected_walk(0.3, 300);
  const double r = 1.05;
  auto br = minimal_drift(walk.kernel, walk.drift.c, r, walk.w);
  double phi = oracle::walk_phi(r, 0.3);
  for (Index x = 1; x <= 50; ++x) {
    double truth = std::pow(phi, x);
    EXPECT_TRUE(br.sigma[x].contains(truth)) << x << " " << br.sigma[x];
    EXPECT_LE(br.sigma[x].width(), 1e-8 * truth) << x;
  }
}

TEST(MinimalDrift, WalkAtCriticalBracketsPowersOfZ) {
  auto walk = build_reflected_walk(0.3, 100);
  auto br = minimal_drift(walk.kernel, walk.drift.c, walk.r1, walk.w);
  EXPECT_NEAR(oracle::walk_phi(walk.r1, 0.3), walk.z, 1e-6);
  for (Index x = 1; x <= 50; ++x) EXPECT_TRUE(br.sigma[x].contains(std::pow(walk.z, x))) << x;
  // drift/hitting duality: E_x[r1^σ] <= w(x) and E_0[r1^τ] <= η
  for (Index x = 1; x <= 100; ++x) EXPECT_LE(br.sigma[x].hi(), round_up(walk.w(x) * (1 + 1e-12)));
  EXPECT_LE(br.tau[0].hi(), round_up(walk.eta * (1 + 1e-12)));
}

TEST(MinimalDrift, RankOneGeometricSeries) {
  std::vector<double> nu{0.3, 0.2, 0.25, 0.25};
  std::vector<std::vector<double>> rows(4, nu);
  Kernel p = Kernel::from_dense(StateSpace::finite(4), rows, true);
  auto c = StateSet::of(4, {0});
  const double r = 1.3, cm = 0.3;
  auto br = minimal_drift(p, c, r);
  for (Index x = 1; x < 4; ++x) {
    double truth = r * cm / (1 - r * (1 - cm));
    EXPECT_TRUE(br.sigma[x].contains(truth)) << br.sigma[x];
    EXPECT_LE(br.sigma[x].width(), 1e-11 * truth);
  }
}

TEST(MinimalDrift, DivergesPastConvergenceRadius) {
  std::vector<double> nu{0.3, 0.2, 0.25, 0.25};
  std::vector<std::vector<double>> rows(4, nu);
  Kernel p = Kernel::from_dense(StateSpace::finite(4), rows, true);
  try {
    (void)minimal_drift(p, StateSet::of(4, {0}), 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Divergent);
  }
}

TEST(MinimalDrift, HittingIdentityOnFiniteChains) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rc = oracle::renewal_case(seed);
    const double r = rc.drift.r1;
    auto br = minimal_drift(rc.p, rc.drift.c, r, rc.drift.w);
    for (Index x = 0; x < 4; ++x) {
      double plo = 0, phi = 0;
      for (Index y = 0; y < 4; ++y) {
        plo += rc.dense[x][y] * br.sigma[y].lo();
        phi += rc.dense[x][y] * br.sigma[y].hi();
      }
      Interval target = rc.drift.c.contains(x) ? br.tau[x] : br.sigma[x];
      EXPECT_LE(r * plo, target.hi() * (1 + 1e-10));
      EXPECT_GE(r * phi, target.lo() * (1 - 1e-10));
      if (!rc.drift.c.contains(x)) { EXPECT_LE(br.sigma[x].hi(), rc.drift.w(x) * (1 + 1e-12)); }
      else EXPECT_LE(br.tau[x].hi(), rc.drift.eta * (1 + 1e-12));
    }
  }
}

TEST(Minorization, WalkOriginRowPasses) {
  auto walk = build_reflected_walk(0.3, 80);
  auto chk = verify_minorization(walk.kernel, walk.minor, walk.w);
  EXPECT_TRUE(chk.pass) << chk.reason;
  EXPECT_EQ(walk.minor.t().nu().at(0), walk.kernel.at(0, 0));
}

TEST(Minorization, RankOneWholeSpace) {
  Measure nu = Measure::uniform(StateSpace::finite(5));
  std::vector<std::vector<double>> rows(5, nu.dense());
  Kernel p = Kernel::from_dense(nu.space(), rows, true);
  MinorizationCertificate m(StateSet::all(5), 1.0, constant_density(nu));
  EXPECT_TRUE(verify_minorization(p, m).pass);
}

TEST(Minorization, ConstantAboveOneIsRejected) {
  auto walk = build_reflected_walk(0.3, 20);
  EXPECT_THROW(MinorizationCertificate(walk.minor.c(), 1.2, walk.minor.t()), Error);
}

TEST(Minorization, TooLargeConstantFailsWithWitness) {
  auto rc = oracle::renewal_case(4);
  MinorizationCertificate bad(rc.minor.c(), 0.99, rc.minor.t());
  auto chk = verify_minorization(rc.p, bad);
  EXPECT_FALSE(chk.pass);
  EXPECT_TRUE(rc.minor.c().contains(chk.x));
  EXPECT_LT(rc.dense[chk.x][chk.y], 0.99 * rc.nu[chk.y]);
}

TEST(SplitKernel, UnitConstantGivesDiracRows) {
  auto walk = build_reflected_walk(0.3, 30);
  Kernel p0 = split_kernel(walk.kernel, walk.minor);
  EXPECT_EQ(p0.at(0, 0), 1.0);
  EXPECT_EQ(p0.row(0).sum(), 1.0);
  EXPECT_EQ(p0.at(5, 6), walk.kernel.at(5, 6));
}

TEST(SplitKernel, HalfConstantRowsAreMarkov) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rc = oracle::renewal_case(seed);
    Kernel p0 = split_kernel(rc.p, rc.minor);
    for (Index x = 0; x < 4; ++x) EXPECT_NEAR(p0.row(x).sum(), 1.0, 1e-12);
    for (Index y = 0; y < 4; ++y) {
      EXPECT_NEAR(p0.at(0, y), 2 * (rc.dense[0][y] - 0.5 * rc.nu[y]), 1e-14);
      EXPECT_EQ(p0.at(2, y), rc.dense[2][y]);
    }
  }
}

TEST(HOfR, UnitConstantIsIdentity) {
  auto walk = build_reflected_walk(0.3, 60);
  Kernel p0 = split_kernel(walk.kernel, walk.minor);
  for (double r : {1.0, 1.05, walk.r1}) {
    Interval h = h_of_r(p0, walk.kernel, walk.drift, walk.minor, r);
    EXPECT_EQ(h, Interval(r));
  }
}

TEST(HOfR, OneOnIrreducibleChain) {
  auto rc = oracle::renewal_case(5);
  Kernel p0 = split_kernel(rc.p, rc.minor);
  EXPECT_TRUE(h_of_r(p0, rc.p, rc.drift, rc.minor, 1.0).contains(1.0));
}

TEST(HOfR, MatchesPathEnumeration) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto rc = oracle::renewal_case(seed);
    const double r = std::min(1.05, rc.drift.r1);
    Kernel p0 = split_kernel(rc.p, rc.minor);
    Interval h = h_of_r(p0, rc.p, rc.drift, rc.minor, r);
    Interval ref = h_oracle(rc, r, 60);
    EXPECT_LE(h.lo(), ref.hi() + 1e-12) << h << " vs " << ref;
    EXPECT_GE(h.hi(), ref.lo() - 1e-12) << h << " vs " << ref;
    EXPECT_LE(h.width(), 1e-10);
  }
}

TEST(RenewalProfile, GrowthBoundAndMonotoneSamples) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto rc = oracle::renewal_case(seed);
    auto rb = compute_rb(rc.p, rc.drift, rc.minor);
    ASSERT_FALSE(rb.inconclusive) << rb.note;
    EXPECT_GT(rb.r_b.lo(), 1.0);
    auto samples = rb.samples;
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < samples.size(); ++i)
      EXPECT_LE(samples[i - 1].second.lo(), samples[i].second.hi());
    for (const auto& [r, h] : samples) {
      if (r <= 1.0 || r >= rc.drift.r1) continue;
      EXPECT_GE(h.hi() - 1.0, -1e-12);
      EXPECT_LE(h.lo() - 1.0, (r - 1.0) * m_of_r(rc.drift, rc.minor.b(), r) + 1e-12);
    }
  }
}

TEST(ComputeRb, UnitConstantIsR1) {
  auto walk = build_reflected_walk(0.3, 300);
  auto rb = compute_rb(walk.kernel, walk.drift, walk.minor);
  EXPECT_EQ(rb.r_b, Interval(walk.r1));
  EXPECT_NEAR(rb.bound.hi(), kBound, 1e-9);
  EXPECT_NEAR(rb.r_b.lo(), walk.r1, 1e-9);
}

TEST(ComputeRb, ConsistentWithDenseScan) {
  auto rc = oracle::renewal_case(2);
  auto rb = compute_rb(rc.p, rc.drift, rc.minor);
  ASSERT_FALSE(rb.inconclusive);
  Kernel p0 = split_kernel(rc.p, rc.minor);
  const double theta = 1.0 / (1.0 - rc.minor.b());
  for (int i = 0; i <= 200; ++i) {
    double r = 1.0 + (rc.drift.r1 - 1.0) * i / 200.0;
    Interval h = h_of_r(p0, rc.p, rc.drift, rc.minor, r);
    if (h.hi() < theta) { EXPECT_LE(r, rb.r_b.hi() + 1e-12); }
    if (h.lo() >= theta) { EXPECT_GE(r, rb.r_b.lo() - 1e-12); }
  }
  EXPECT_NEAR(rb.bound.hi(), 1.0 / rb.r_b.lo(), 1e-15);
}

TEST(ComputeRb, MonotoneInMinorizationConstant) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto rc = oracle::renewal_case(seed);
    double prev = 0.0;
    for (double b : {0.1, 0.3, 0.5}) {
      MinorizationCertificate m(rc.minor.c(), b, rc.minor.t());
      auto rb = compute_rb(rc.p, rc.drift, m);
      EXPECT_GE(rb.r_b.hi(), prev - 1e-12);
      prev = rb.r_b.lo();
    }
  }
}

TEST(Renewal, ZeroStepsIsOne) {
  auto rc = oracle::renewal_case(1);
  auto pr = renewal_identity(rc.p, rc.minor, 2, 0);
  EXPECT_EQ(pr.lhs, 1.0);
  EXPECT_EQ(pr.rhs, 1.0);
}

TEST(Renewal, UnitConstantCountsAvoidingPaths) {
  auto rc = oracle::renewal_case(7, 1.0);
  auto in_c = mask(rc.minor.c());
  for (Index x = 0; x < 4; ++x)
    for (unsigned n = 1; n <= 8; ++n) {
      auto pr = renewal_identity(rc.p, rc.minor, x, n);
      double ref = oracle::visit_generating(oracle::dense(split_kernel(rc.p, rc.minor)), in_c, x, n, 1.0);
      EXPECT_NEAR(pr.rhs, ref, 1e-14);
      if (in_c[x]) { EXPECT_EQ(pr.rhs, 0.0); }
    }
}

TEST(Renewal, ExactOnSeededChains) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rc = oracle::renewal_case(seed);
    auto in_c = mask(rc.minor.c());
    auto p0 = oracle::dense(split_kernel(rc.p, rc.minor));
    // S = P - b 1_C T as a dense oracle
    auto s = rc.dense;
    for (Index x = 0; x < 2; ++x)
      for (Index y = 0; y < 4; ++y) s[x][y] -= 0.5 * rc.nu[y];
    for (unsigned n = 0; n <= 12; ++n) {
      auto sn = oracle::mpow(s, n);
      for (Index x = 0; x < 4; ++x) {
        auto pr = renewal_identity(rc.p, rc.minor, x, n);
        EXPECT_NEAR(pr.lhs, pr.rhs, 1e-12);
        double row = 0;
        for (double v : sn[x]) row += v;
        EXPECT_NEAR(pr.lhs, row, 1e-13);
        EXPECT_NEAR(pr.rhs, oracle::visit_generating(p0, in_c, x, n, 0.5), 1e-13);
      }
    }
  }
}

TEST(GfSuite, GeneratingFunctionInequalitiesOnSeededChains) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rc = oracle::renewal_case(seed);
    auto rb = compute_rb(rc.p, rc.drift, rc.minor);
    const double r = 1.0 + 0.5 * (rb.r_b.lo() - 1.0);
    for (Index x = 0; x < 4; ++x) {
      auto g = gf_suite(rc.p, rc.drift, rc.minor, x, r, 200, 2000);
      EXPECT_TRUE(g.h_bound_ok);
      EXPECT_TRUE(g.renewal_ok);
      EXPECT_TRUE(g.gw_bound_ok);
      EXPECT_TRUE(g.m_bound_ok);
      EXPECT_TRUE(g.mw_bound_ok);
      EXPECT_TRUE(g.h_growth_ok);
      if (rc.drift.c.contains(x)) { EXPECT_EQ(g.H[0], 1.0); }
      EXPECT_NEAR(g.g_renewal, g.g_matrix, 1e-10 * g.g_matrix);
      EXPECT_NEAR(g.g_series, g.g_matrix, 1e-10 * g.g_matrix);

      // independent Σ r^n S^n(x, E)
      auto s = rc.dense;
      for (Index a = 0; a < 2; ++a)
        for (Index y = 0; y < 4; ++y) s[a][y] -= 0.5 * rc.nu[y];
      std::vector<double> v(4, 1.0);
      double total = 1.0, rn = 1.0;
      for (int n = 1; n <= 3000; ++n) {
        v = oracle::mv(s, v);
        rn *= r;
        total += rn * v[x];
      }
      EXPECT_NEAR(g.g_matrix, total, 1e-10 * total);
    }
  }
}

TEST(LevelSets, ClosedForms) {
  EXPECT_NEAR(level_set_t0(0.8, 0.4, 0.9), 20.0, 1e-12);
  EXPECT_EQ(level_set_kt(20.0, 0.8), 16u);
  EXPECT_NEAR(level_set_zeta(0.8, 0.4, 20.0), 0.8 * 20 + 0.4 / 0.2, 1e-12);
}

TEST(Foster, DirectBranchOnBoundedSet) {
  Kernel p = reflected_walk_finite(0.3, 40);
  const double z = std::sqrt(7.0 / 3.0), rho = 0.92;
  WeightFn w = WeightFn::geometric(40, z);
  double zeta = 0.7 + 0.3 * z - rho;
  SmallSetWitness small{1, 1.0, p.row(0)};
  auto res = foster_to_small(p, w, StateSet::of(40, {0}), rho, zeta, small);
  EXPECT_TRUE(res.direct);
  EXPECT_NEAR(res.drift.r1, 1 / rho, 1e-15);
  EXPECT_NEAR(res.drift.eta, (rho + zeta) / rho, 1e-12);
  EXPECT_TRUE(verify_drift(p, res.drift).pass);
  EXPECT_TRUE(verify_minorization(res.minor_kernel, *res.minor).pass);
}

TEST(Foster, LevelSetBranch) {
  Kernel p = reflected_walk_finite(0.3, 40);
  const double z = std::sqrt(7.0 / 3.0), rho = 0.92;
  WeightFn w = WeightFn::geometric(40, z);
  double zeta = 0.7 + 0.3 * z - rho;
  SmallSetWitness small{1, 1.0, p.row(0)};
  auto res = foster_to_small(p, w, StateSet::of(40, {0}), rho, zeta, small, 0.96);
  EXPECT_FALSE(res.direct);
  EXPECT_NEAR(res.t0, zeta / ((1 - rho) * (0.96 - rho)), 1e-9);
  EXPECT_EQ(res.k_t, level_set_kt(res.t, rho));
  for (Index x = 0; x < 40; ++x) EXPECT_EQ(res.drift.c.contains(x), w(x) <= res.t);
  EXPECT_TRUE(verify_drift(p, res.drift).pass);
  ASSERT_TRUE(res.minor.has_value());
  EXPECT_NEAR(res.minor->b(), 1.0 / (2.0 * (res.k_t + 1)), 1e-15);
  auto chk = verify_minorization(res.minor_kernel, *res.minor);
  EXPECT_TRUE(chk.pass) << chk.reason;
}

TEST(Foster, BrokenDriftIsRejected) {
  Kernel p = reflected_walk_finite(0.3, 10);
  SmallSetWitness small{1, 1.0, p.row(0)};
  EXPECT_THROW((void)foster_to_small(p, WeightFn::constant(10), StateSet::of(10, {0}), 0.5, 0.1, small),
               Error);
}

TEST(Synthesis, RankOneNeedsOneStep) {
  std::vector<double> nu{0.1, 0.4, 0.3, 0.2};
  Kernel p = Kernel::from_dense(StateSpace::finite(4), std::vector<std::vector<double>>(4, nu), true);
  auto s = synthesize_certificates(p, WeightFn::constant(4), 1.0, 1.0);
  EXPECT_EQ(s.n, 1u);
  ASSERT_TRUE(s.minor.has_value());
  for (Index y = 0; y < 4; ++y) EXPECT_NEAR(s.minor->t().nu().at(y), nu[y], 1e-15);
}

TEST(Synthesis, SwapChainNeedsTwoSteps) {
  Kernel p = Kernel::from_dense(StateSpace::finite(2), {{0, 1}, {1, 0}}, true);
  auto s = synthesize_certificates(p, WeightFn::constant(2), 1.0, 1.0);
  EXPECT_EQ(s.n, 2u);
  ASSERT_TRUE(s.minor.has_value());
  EXPECT_NEAR(s.minor->t().nu().at(0), 0.5, 1e-15);
  EXPECT_NEAR(s.minor->t().alpha_at(0, 0), 2.0, 1e-15);
  EXPECT_EQ(s.minor->t().alpha_at(0, 1), 0.0);
}

TEST(Synthesis, SeededChainsRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Kernel p = random_chain(30, seed);
    std::vector<double> wv(30);
    for (Index i = 0; i < 30; ++i) wv[i] = 1.0 + 0.1 * i;
    WeightFn w(wv);
    auto s = synthesize_certificates(p, w, 3.9, 0.5);
    ASSERT_TRUE(s.minor.has_value());
    EXPECT_TRUE(verify_drift(s.pn, s.drift).pass);
    EXPECT_TRUE(verify_minorization(s.pn, *s.minor, w).pass);
    auto mod = oracle::moduli(oracle::dense(p));
    EXPECT_GE(s.implied_bound, mod[1] - 1e-9);
  }
}
