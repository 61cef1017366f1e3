#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcert/ergodic.hpp"
#include "qcert/examples.hpp"

using namespace qcert;

namespace {

Kernel dense(std::vector<std::vector<double>> rows) {
  return Kernel::from_dense(StateSpace::finite(rows.size()), rows, true);
}

Kernel two_state() { return dense({{.9, .1}, {.2, .8}}); }
Kernel swap_chain() { return dense({{0, 1}, {1, 0}}); }

}  // namespace

TEST(Stationary, SymmetricTwoState) {
  auto s = stationary(dense({{.5, .5}, {.5, .5}}));
  EXPECT_NEAR(s.pi.at(0), 0.5, 1e-15);
  EXPECT_NEAR(s.pi.at(1), 0.5, 1e-15);
  EXPECT_FALSE(s.non_unique);
}

TEST(Stationary, DoublyStochasticIsUniform) {
  // circulant rows are doubly stochastic
  const Index n = 7;
  std::vector<double> base{0.1, 0.3, 0.05, 0.15, 0.2, 0.1, 0.1};
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) rows[x][y] = base[(y + n - x) % n];
  auto s = stationary(dense(rows));
  for (Index y = 0; y < n; ++y) EXPECT_NEAR(s.pi.at(y), 1.0 / n, 1e-14);
}

TEST(Stationary, TruncatedWalkIsGeometric) {
  auto s = stationary(reflected_walk_finite(0.3, 30));
  // detailed balance gives pi(x) proportional to (3/7)^x
  const double ratio = 3.0 / 7.0;
  const double norm = (1.0 - ratio) / (1.0 - std::pow(ratio, 30));
  for (Index x = 0; x < 30; ++x)
    EXPECT_NEAR(s.pi.at(x), norm * std::pow(ratio, static_cast<double>(x)), 1e-14);
  EXPECT_LE(s.residual, 1e-10);
}

TEST(Stationary, FixedPointOnSeededChains) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Kernel p = random_chain(40, seed);
    auto s = stationary(p);
    auto pi = s.pi.dense();
    double total = 0;
    for (double v : pi) total += v;
    EXPECT_NEAR(total, 1.0, 1e-10);
    Measure pp = adjoint_apply(p, s.pi);
    for (Index y = 0; y < 40; ++y) EXPECT_NEAR(pp.at(y), pi[y], 1e-10);
  }
}

TEST(Stationary, ReducibleChainIsFlagged) {
  auto s = stationary(dense({{1, 0, 0}, {0, 1, 0}, {.3, .3, .4}}));
  EXPECT_TRUE(s.non_unique);
  EXPECT_EQ(s.multiplicity, 2u);
  EXPECT_LE(s.residual, 1e-10);
}

TEST(Stationary, WindowedTailFoldsIntoDiagonal) {
  auto walk = build_reflected_walk(0.3, 40);
  auto s = stationary(walk.kernel);
  EXPECT_NEAR(s.pi.at(1) / s.pi.at(0), 3.0 / 7.0, 1e-10);
}

TEST(Period, SmallExamples) {
  EXPECT_EQ(period_detect(swap_chain()), 2u);
  EXPECT_EQ(period_detect(two_state()), 1u);
  EXPECT_EQ(period_detect(dense({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}})), 3u);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) EXPECT_EQ(period_detect(random_chain(20, seed)), 1u);
}

TEST(Decay, RankOneIsExactAfterOneStep) {
  std::vector<double> pi{0.2, 0.5, 0.3};
  Kernel p = dense(std::vector<std::vector<double>>(3, pi));
  WeightFn w = WeightFn::constant(3);
  auto r = ergodic_decay_check(p, w, basis_suite(w), 40);
  EXPECT_EQ(r.d, 1u);
  EXPECT_TRUE(r.envelope_ok);
  for (const auto& row : r.table)
    if (row.n >= 1) { EXPECT_LE(row.op_norm, 1e-15); }
}

TEST(Decay, TwoStateTracksSecondEigenvalue) {
  WeightFn w = WeightFn::constant(2);
  auto r = ergodic_decay_check(two_state(), w, basis_suite(w), 200);
  EXPECT_NEAR(r.pi.pi.at(0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.subdominant, 0.7, 1e-12);
  EXPECT_NEAR(r.kappa, 0.71, 1e-12);
  EXPECT_TRUE(r.envelope_ok);
  EXPECT_TRUE(r.slope_ok);
  EXPECT_TRUE(r.cesaro_ok);
  EXPECT_NEAR(r.log_slope, std::log(0.7), 0.02);

  // exact residual: P^n - S = 0.7^n (I - S)
  auto pn = oracle::identity(2);
  auto p = oracle::dense(two_state());
  for (unsigned n = 1; n <= 60; ++n) {
    pn = oracle::mul(pn, p);
    double norm = 0;
    for (Index x = 0; x < 2; ++x)
      norm = std::max(norm, std::fabs(pn[x][0] - 2.0 / 3) + std::fabs(pn[x][1] - 1.0 / 3));
    EXPECT_NEAR(r.table[n].op_norm, norm, 1e-13);
    EXPECT_LE(r.table[n].op_norm, r.table[n].envelope * (1 + 1e-9));
  }
}

TEST(Decay, SwapChainPowersHitTheLimit) {
  WeightFn w = WeightFn::constant(2);
  auto r = ergodic_decay_check(swap_chain(), w, basis_suite(w), 50);
  EXPECT_EQ(r.d, 2u);
  auto s = r.s.dense();
  auto p2n = oracle::identity(2);
  auto p = oracle::dense(swap_chain());
  for (unsigned n = 1; n <= 10; ++n) {
    p2n = oracle::mul(oracle::mul(p2n, p), p);
    EXPECT_EQ(p2n, s);
  }
  for (const auto& row : r.table) EXPECT_EQ(row.op_norm, 0.0);
  EXPECT_TRUE(r.envelope_ok);
}

TEST(Decay, SlopeWithinKappaOnSeededChains) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Kernel p = random_chain(15, seed);
    std::vector<double> wv(15);
    for (Index i = 0; i < 15; ++i) wv[i] = 1.0 + 0.2 * i;
    WeightFn w(wv);
    auto r = ergodic_decay_check(p, w, basis_suite(w), 200, false);
    EXPECT_LT(r.kappa, 1.0);
    if (std::isfinite(r.log_slope)) { EXPECT_LE(r.log_slope, std::log(r.kappa) + 0.02); }
    EXPECT_TRUE(r.envelope_ok);
    EXPECT_TRUE(r.cesaro_ok);
  }
}

TEST(Decay, SuiteFunctionsRespectWeight) {
  std::vector<double> wv{1, 2, 4};
  WeightFn w(wv);
  for (const auto& f : basis_suite(w))
    for (Index x = 0; x < 3; ++x) EXPECT_LE(std::fabs(f[x]) / wv[x], 1.0 + 1e-15);
}

TEST(Decay, OversizedSuiteFunctionIsRejected) {
  WeightFn w = WeightFn::constant(2);
  std::vector<std::vector<double>> suite{{5.0, 0.0}};
  EXPECT_THROW((void)ergodic_decay_check(two_state(), w, suite, 40), Error);
}
