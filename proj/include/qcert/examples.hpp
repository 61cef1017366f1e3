#pragma once

#include <cstdint>
#include <functional>

#include "qcert/drift_split.hpp"
#include "qcert/kernel.hpp"

namespace qcert {

using UnitFn = std::function<double(double)>;

struct ConzeRaugiResult {
  double residual = 0.0;     // max over the grid of |P f - λ f| for the N-term f
  double tail_bound = 0.0;   // 2|λ|^N / (1 - |λ|)
  double worst_x = 0.0;
  double unity_defect = 0.0; // max |u(x/2) + u((x+1)/2) - 1| on the grid
};

/// P f(x) = u(x/2) f(x/2) + u((x+1)/2) f((x+1)/2) applied to
/// f(x) = Σ_{n=1}^N λ^{n-1} cos(2^n π x), evaluated pointwise on G grid points.
ConzeRaugiResult conze_raugi_residual(const UnitFn& u, Complex lambda, unsigned terms,
                                      unsigned grid);

struct WalkExample {
  double p = 0.0;
  double z = 0.0;
  double r1 = 0.0;
  double eta = 0.0;
  double bound = 0.0;  // 2 sqrt(pq)
  Kernel kernel;
  WeightFn w;
  DriftCertificate drift;
  MinorizationCertificate minor;
};

/// Reflected walk on the window 0..x_max of the half-line: q to the left
/// (staying at 0), p to the right. The last row sends p beyond the window.
WalkExample build_reflected_walk(double p, Index x_max);

/// The same walk on {0..n-1} with reflection at both ends.
Kernel reflected_walk_finite(double p, Index n);

/// Seeded irreducible aperiodic chain: each row has a self-loop, an edge to
/// the next state, and `extra` random targets.
Kernel random_chain(Index n, std::uint64_t seed, unsigned extra = 3);

/// Seeded positive kernel with row masses in [mass_lo, mass_hi].
Kernel random_positive_kernel(Index n, std::uint64_t seed, double mass_lo = 0.5,
                              double mass_hi = 1.0, unsigned support = 6);

}  // namespace qcert
