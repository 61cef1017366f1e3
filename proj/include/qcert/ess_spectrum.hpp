#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qcert/decompose.hpp"
#include "qcert/kernel.hpp"

namespace qcert {

enum class EssMethod { DoeblinTail, ResidualNorm, WeightedConjugate };

const char* to_string(EssMethod m);

struct DoeblinCandidate {
  unsigned ell = 1;
  Measure nu;
};

/// Upper bound on the essential spectral radius with enough recorded to
/// replay it.
struct EssBound {
  Interval value = Interval::unbounded();
  EssMethod method = EssMethod::DoeblinTail;
  unsigned ell = 0;
  std::optional<Measure> nu;
  unsigned n_power = 0;
  /// Smallest entry of Q^ℓ - T before clamping (positivity witness).
  double min_residual_entry = 0.0;
  /// False when a windowed limit was read off a finite tail.
  bool certified = true;
  /// Set only when a lower bound on r(Q) is known (Markov kernels).
  std::optional<bool> quasi_compact;
};

EssBound re_upper_doeblin(const Kernel& q, const std::vector<DoeblinCandidate>& candidates,
                          const TailSpec& tail = {});

struct ResidualOptions {
  unsigned n_power = 1;
  /// Declared cutoff for the uniform-integrability check; defaults past sup α.
  std::optional<double> ui_cutoff;
  double ui_tolerance = 1e-12;
};

/// S = Q^ℓ - T; throws NotDominated if S has a negative entry.
Kernel residual_kernel(const Kernel& q_ell, const DensityKernel& t, double* min_entry = nullptr);

EssBound re_upper_residual(const Kernel& q, unsigned ell, const DensityKernel& t,
                           const ResidualOptions& opts = {});

struct DoeblinStrategy {
  std::vector<DoeblinCandidate> candidates;
  TailSpec tail;
};
struct ResidualStrategy {
  unsigned ell = 1;
  DensityKernel t;
  ResidualOptions opts;
};
using EssStrategy = std::variant<DoeblinStrategy, ResidualStrategy>;

/// Runs the strategy on W^-1 Q W; r_e^w(Q) = r_e(Q^(w)).
EssBound re_upper_weighted(const Kernel& q, const WeightFn& w, const EssStrategy& strategy);

struct MultiplierBound {
  double chi_norm = 0.0;
  double r_bound = 0.0;
  double re_bound = 0.0;
  /// For ||χ|| <= 1, re_bound <= r_bound.
  bool dichotomy_consistent = true;
};

MultiplierBound multiplier_bound(const Kernel& q, const Multiplier& chi, unsigned ell,
                                 const Kernel& s, unsigned n_power = 1);

/// Dense eigenvalues, sorted by decreasing modulus then increasing argument.
std::vector<Complex> eigen_oracle(const Kernel& q, const std::optional<WeightFn>& w = std::nullopt);
std::vector<Complex> eigen_oracle(const ComplexKernel& q);

constexpr Index kOracleSizeLimit = 1500;

struct KStarReport {
  bool member = false;
  double singular_mass = 0.0;
  Index worst_row = 0;
  double ui = 0.0;
  double cutoff = 0.0;
};

KStarReport kstar_check(const Kernel& q, const Measure& nu, double cutoff, double tolerance);

}  // namespace qcert
