#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcert/decompose.hpp"
#include "qcert/ess_spectrum.hpp"
#include "qcert/examples.hpp"

using namespace qcert;

namespace {

const double kBound = 2 * std::sqrt(0.21);

Kernel rank_one(const Measure& nu) {
  std::vector<std::vector<double>> rows(nu.space().size(), nu.dense());
  return Kernel::from_dense(nu.space(), rows, true);
}

// T = 1_{0} ⊗ P(0,.): ν = P(0,.), α ≡ 1 on row 0 only.
DensityKernel walk_origin_t(const WalkExample& walk) {
  Measure nu = walk.kernel.row(0);
  std::vector<DensityKernel::Row> alpha(walk.kernel.size());
  for (const auto& a : nu.atoms()) alpha[0].push_back({a.state, 1.0});
  return DensityKernel(nu, alpha);
}

}  // namespace

TEST(DoeblinBound, RankOneIsZero) {
  std::mt19937_64 rng(1);
  Measure nu = Measure::from_dense(StateSpace::finite(6), oracle::random_probability(rng, 6));
  auto b = re_upper_doeblin(rank_one(nu), {{1, nu}});
  EXPECT_EQ(b.value.hi(), 0.0);
  EXPECT_TRUE(b.certified);
  ASSERT_TRUE(b.quasi_compact.has_value());
  EXPECT_TRUE(*b.quasi_compact);
}

TEST(DoeblinBound, FiniteFullSupportIsZero) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Kernel q = random_chain(20, seed);
    auto b = re_upper_doeblin(q, {{1, Measure::uniform(q.space())}, {2, Measure::uniform(q.space())}});
    EXPECT_EQ(b.value.hi(), 0.0);
  }
}

TEST(DoeblinBound, EmptyCandidatesAreUnbounded) {
  auto b = re_upper_doeblin(random_chain(5, 1), {});
  EXPECT_FALSE(b.value.is_bounded());
}

TEST(DoeblinBound, MoreCandidatesNeverHurt) {
  auto walk = build_reflected_walk(0.3, 120);
  Kernel qw = conjugate(walk.kernel, walk.w);
  std::vector<double> g(121);
  double s = 0;
  for (Index y = 0; y <= 120; ++y) s += (g[y] = std::pow(0.5, y));
  for (double& v : g) v /= s;
  Measure geo = Measure::from_dense(qw.space(), g);
  Measure uni = Measure::uniform(qw.space());
  auto one = re_upper_doeblin(qw, {{1, geo}});
  auto two = re_upper_doeblin(qw, {{1, geo}, {1, uni}, {2, uni}});
  EXPECT_LE(two.value.hi(), one.value.hi());
}

TEST(DoeblinBound, ConjugatedWalkWithGeometricNu) {
  auto walk = build_reflected_walk(0.3, 300);
  Kernel qw = conjugate(walk.kernel, walk.w);
  std::vector<double> g(301);
  double s = 0;
  for (Index y = 0; y <= 300; ++y) s += (g[y] = std::pow(0.9, y));
  for (double& v : g) v /= s;
  auto b = re_upper_doeblin(qw, {{1, Measure::from_dense(qw.space(), g)}});
  EXPECT_FALSE(b.certified);
  EXPECT_LE(b.value.hi(), kBound + 0.01);
}

TEST(ResidualBound, FullTIsZero) {
  std::mt19937_64 rng(2);
  Measure nu = Measure::from_dense(StateSpace::finite(5), oracle::random_probability(rng, 5));
  Kernel q = rank_one(nu);
  auto split = kernel_decompose(q, nu);
  auto b = re_upper_residual(q, 1, split.density);
  EXPECT_EQ(b.value.hi(), 0.0);
}

TEST(ResidualBound, DoeblinSplitOfHalfDiagonal) {
  const Index n = 4;
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.5 / n));
  for (Index x = 0; x < n; ++x) rows[x][x] += 0.5;
  Kernel q = Kernel::from_dense(StateSpace::finite(n), rows, true);
  auto split = doeblin_split(q, {1, Measure::uniform(q.space()), 0.125, 0.9});
  auto b = re_upper_residual(q, 1, split.t);
  EXPECT_EQ(b.value.hi(), 0.0);
}

TEST(ResidualBound, NegativeResidualIsReported) {
  Measure nu = Measure::uniform(StateSpace::finite(3));
  Kernel q = Kernel::from_dense(nu.space(), {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, true);
  try {
    (void)re_upper_residual(q, 1, constant_density(nu));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotDominated);
  }
}

TEST(ResidualBound, NonIntegrableDensityIsReported) {
  Measure nu = Measure::uniform(StateSpace::finite(3));
  Kernel q = Kernel::from_dense(nu.space(), {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, true);
  ResidualOptions opts;
  opts.ui_cutoff = 0.05;
  try {
    (void)re_upper_residual(q, 1, constant_density(nu, 0.1), opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotUniformlyIntegrable);
  }
}

TEST(ResidualBound, WalkWeightedResidual) {
  auto walk = build_reflected_walk(0.3, 300);
  ResidualOptions opts;
  opts.n_power = 32;
  auto b = re_upper_weighted(walk.kernel, walk.w, ResidualStrategy{1, walk_origin_t(walk), opts});
  EXPECT_GE(b.value.hi(), 0.9165);
  EXPECT_LE(b.value.hi(), 0.93);
  EXPECT_EQ(b.method, EssMethod::WeightedConjugate);
}

TEST(ResidualBound, DoublingPowersNeverIncrease) {
  auto walk = build_reflected_walk(0.3, 200);
  Kernel qw = conjugate(walk.kernel, walk.w);
  auto t = walk_origin_t(walk).weighted(walk.w);
  double prev = INFINITY;
  for (unsigned n : {1u, 2u, 4u, 8u, 16u}) {
    ResidualOptions opts;
    opts.n_power = n;
    double v = re_upper_residual(qw, 1, t, opts).value.hi();
    EXPECT_LE(v, prev * (1 + 1e-12));
    prev = v;
  }
}

TEST(WeightedBound, UnitWeightMatchesPlain) {
  Kernel q = random_chain(12, 7);
  Measure nu = Measure::uniform(q.space());
  auto plain = re_upper_doeblin(q, {{1, nu}});
  auto weighted = re_upper_weighted(q, WeightFn::constant(12), DoeblinStrategy{{{1, nu}}, {}});
  EXPECT_EQ(plain.value, weighted.value);
}

TEST(WeightedBound, FiniteChainIsZero) {
  Kernel q = random_chain(12, 8);
  std::vector<double> w(12);
  for (Index i = 0; i < 12; ++i) w[i] = 1 + i;
  auto b = re_upper_weighted(q, WeightFn(w), DoeblinStrategy{{{1, Measure::uniform(q.space())}}, {}});
  EXPECT_EQ(b.value.hi(), 0.0);
}

TEST(Multiplier, UnitMultiplierReducesToResidual) {
  auto walk = build_reflected_walk(0.3, 100);
  auto t = walk_origin_t(walk);
  Kernel s = residual_kernel(walk.kernel, t);
  ResidualOptions opts;
  opts.n_power = 4;
  auto plain = re_upper_residual(walk.kernel, 1, t, opts);
  auto m = multiplier_bound(walk.kernel, Multiplier::constant(1.0), 1, s, 4);
  EXPECT_DOUBLE_EQ(m.re_bound, plain.value.hi());
  std::vector<double> xi(101);
  for (Index i = 0; i <= 100; ++i) xi[i] = 0.1 * i;
  auto mf = multiplier_bound(walk.kernel, Multiplier::fourier(xi, 0.0), 1, s, 4);
  EXPECT_DOUBLE_EQ(mf.re_bound, plain.value.hi());
  EXPECT_TRUE(mf.dichotomy_consistent);
}

TEST(Multiplier, TwoStateFourierAgainstOracle) {
  Kernel p = Kernel::from_dense(StateSpace::finite(2), {{.5, .5}, {.5, .5}}, true);
  auto chi = Multiplier::fourier({0.0, M_PI}, 1.0);
  Kernel zero = Kernel::from_dense(p.space(), {{0, 0}, {0, 0}});
  auto m = multiplier_bound(p, chi, 1, zero);
  EXPECT_DOUBLE_EQ(m.r_bound, 1.0);
  auto ev = eigen_oracle(fourier_kernel(p, {0.0, M_PI}, 1.0));
  for (auto e : ev) EXPECT_LT(std::abs(e), 1e-7);
  EXPECT_LE(std::abs(ev.front()), m.r_bound);
}

TEST(EigenOracle, SmallClosedForms) {
  auto id = eigen_oracle(Kernel::identity(StateSpace::finite(3)));
  for (auto e : id) EXPECT_NEAR(std::abs(e - Complex(1.0)), 0.0, 1e-14);
  auto sw = eigen_oracle(Kernel::from_dense(StateSpace::finite(2), {{0, 1}, {1, 0}}, true));
  EXPECT_NEAR(sw[0].real(), 1.0, 1e-14);
  EXPECT_NEAR(sw[1].real(), -1.0, 1e-14);
  auto two = eigen_oracle(Kernel::from_dense(StateSpace::finite(2), {{.9, .1}, {.2, .8}}, true));
  EXPECT_NEAR(two[0].real(), 1.0, 1e-14);
  EXPECT_NEAR(two[1].real(), 0.7, 1e-14);
  EXPECT_NEAR(two[0].real() + two[1].real(), 1.7, 1e-14);
  EXPECT_NEAR(two[0].real() * two[1].real(), 0.7, 1e-14);
}

TEST(EigenOracle, WeightedSpectrumIsSimilar) {
  Kernel q = random_chain(15, 4);
  std::vector<double> w(15);
  for (Index i = 0; i < 15; ++i) w[i] = std::pow(1.3, i);
  auto a = eigen_oracle(q);
  auto b = eigen_oracle(q, WeightFn(w));
  ASSERT_EQ(a.size(), b.size());
  for (Index i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a[i]), std::abs(b[i]), 1e-9);
  auto ref = oracle::moduli(oracle::dense(q));
  for (Index i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a[i]), ref[i], 1e-9);
}

TEST(EigenOracle, SizeLimit) {
  try {
    (void)eigen_oracle(Kernel::identity(StateSpace::finite(kOracleSizeLimit + 1)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeLimit);
  }
}

TEST(KStar, RankOneIsMember) {
  Measure nu = Measure::uniform(StateSpace::finite(5));
  EXPECT_TRUE(kstar_check(rank_one(nu), nu, 10.0, 1e-12).member);
}

TEST(KStar, SingularRowIsNotMember) {
  std::vector<double> v{0.5, 0.5, 0.0};
  Measure nu = Measure::from_dense(StateSpace::finite(3), v);
  Kernel q = Kernel::from_dense(nu.space(), {{.5, .5, 0}, {.5, .5, 0}, {0, 0, 1}}, true);
  auto r = kstar_check(q, nu, 10.0, 1e-12);
  EXPECT_FALSE(r.member);
  EXPECT_EQ(r.singular_mass, 1.0);
  EXPECT_EQ(r.worst_row, 2u);
}

TEST(KStar, DiracFamilyAgainstDyadicIsNotMember) {
  const Index n = 30;
  std::vector<double> v(n);
  for (Index i = 0; i < n; ++i) v[i] = std::ldexp(1.0, -static_cast<int>(i) - 1);
  v[n - 1] *= 2;
  Measure nu = Measure::from_dense(StateSpace::finite(n), v);
  auto r = kstar_check(Kernel::identity(nu.space()), nu, 1000.0, 1e-12);
  EXPECT_FALSE(r.member);
  EXPECT_NEAR(r.ui, 1.0, 1e-14);
}

TEST(Windowing, WalkTopSpectrumStableAcrossWindows) {
  std::vector<int> counts;
  for (Index n : {100, 200, 300}) {
    auto walk = build_reflected_walk(0.3, n);
    auto m = truncation(conjugate(walk.kernel, walk.w));
    int c = 0;
    for (double v : oracle::moduli(m))
      if (v > kBound + 0.02) ++c;
    counts.push_back(c);
  }
  EXPECT_EQ(counts[0], counts[1]);
  EXPECT_EQ(counts[1], counts[2]);
  EXPECT_LE(counts[0], 2);
}
