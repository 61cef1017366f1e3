#pragma once

#include <optional>
#include <vector>

#include "qcert/kernel.hpp"

namespace qcert {

struct StationaryResult {
  Measure pi;
  /// Eigenvalue 1 has multiplicity > 1 (several closed classes).
  bool non_unique = false;
  unsigned multiplicity = 1;
  double residual = 0.0;  // ||πP - π||_inf
};

/// One invariant probability. Windowed kernels have their tail mass folded
/// into the diagonal first.
StationaryResult stationary(const Kernel& p);

/// Period d: the lcm of the orders of the peripheral eigenvalues (for an
/// irreducible chain, their count).
unsigned period_detect(const Kernel& p);

struct DecayRow {
  unsigned n = 0;
  double op_norm = 0.0;    // ||P^n - P^{n mod d} S||_w
  double suite_sup = 0.0;  // sup over f, x of |(P^n - P^{n mod d} S) f (x)| / w(x)
  double envelope = 0.0;   // D κ^n
};

struct EnvelopeWitness {
  unsigned n = 0;
  std::optional<std::size_t> f;  // unset: the operator norm itself
  Index x = 0;
  double residual = 0.0;
  double envelope = 0.0;
};

struct ErgodicReport {
  StationaryResult pi;
  unsigned d = 1;
  Kernel s;          // lim_n P^{nd}
  Kernel cesaro;     // P1 = d^-1 Σ_{k<d} P^k S
  double subdominant = 0.0;
  double kappa = 0.0;
  double D = 0.0;
  std::vector<DecayRow> table;
  double log_slope = 0.0;  // over [n_max/2, n_max]; -inf when the residual vanishes
  bool envelope_ok = false;
  bool slope_ok = false;
  bool cesaro_ok = false;
  double projector_gap = 0.0;  // |S from projectors - S from powers|
  std::optional<EnvelopeWitness> violation;
};

/// Test functions e_y w(y), w, and the alternating ±w; all with ||f||_w <= 1.
std::vector<std::vector<double>> basis_suite(const WeightFn& w);

/// Fits D on n in [0, n_max/2] for κ = subdominant + 0.01 and checks the
/// envelope on [0, n_max]. With strict set a violation throws
/// EnvelopeViolated.
ErgodicReport ergodic_decay_check(const Kernel& p, const WeightFn& w,
                                  const std::vector<std::vector<double>>& f_suite, unsigned n_max,
                                  bool strict = true);

}  // namespace qcert
