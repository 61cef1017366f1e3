#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qcert/kernel.hpp"

namespace qcert {

struct LebesgueSplit {
  std::vector<double> density;  // dμ_ac/dν on the window, 0 where ν vanishes
  Measure singular;
};

/// μ = density·ν + singular on the window. Mass of μ beyond the window is
/// carried in singular.tail_bound().
LebesgueSplit lebesgue_decompose(const Measure& mu, const Measure& nu);

/// T_{ν,α}(x,{y}) = α(x,y) ν({y}). Densities are stored sparsely on the
/// support of ν.
class DensityKernel {
 public:
  using Row = std::vector<Atom<double>>;

  DensityKernel() = default;
  DensityKernel(Measure nu, std::vector<Row> alpha);

  const Measure& nu() const { return nu_; }
  const StateSpace& space() const { return nu_.space(); }
  Index size() const { return alpha_.size(); }
  std::span<const Row> alpha() const { return alpha_; }
  const Row& alpha_row(Index x) const { return alpha_.at(x); }
  double alpha_at(Index x, Index y) const;
  double sup_alpha() const;

  Kernel to_kernel(bool markov = false) const;
  /// α^(w)(x,y) = α(x,y) w(y)/w(x), the density of W^-1 T W.
  DensityKernel weighted(const WeightFn& w) const;

 private:
  Measure nu_;
  std::vector<Row> alpha_;
};

struct KernelSplit {
  DensityKernel density;
  Kernel singular;
};

KernelSplit kernel_decompose(const Kernel& k, const Measure& nu);

/// Cell-average densities of a kernel on a dyadic grid against a reference
/// kernel: phi[n-1][x][k] = K(x, B_k^n) / R(x, B_k^n).
struct DensityLadder {
  unsigned depth = 0;
  std::vector<std::vector<std::vector<double>>> phi;
  /// K-mass sitting on finest-level cells where R has none.
  std::vector<double> residual;
  /// Finest-level cells whose value keeps doubling under refinement.
  std::vector<std::vector<Index>> atom_cells;
};

DensityLadder partition_density(const Kernel& k, const Kernel& r, unsigned depth);

struct DoeblinCertificate {
  unsigned ell = 1;
  Measure nu;
  double eta = 0.0;
  double rho = 0.0;
};

void validate(const DoeblinCertificate& cert);

/// Per-row greedy scan of sup Q^ℓ(x, A) over ν(A) ≤ η. `worst` brackets the
/// maximum between the greedy set (lo) and the fractional relaxation (hi).
struct SmallSetScan {
  Interval worst{0.0};
  Index worst_row = 0;
  std::vector<Index> witness;
  double witness_nu = 0.0;
  bool holds = true;
};

SmallSetScan scan_small_sets(const Kernel& q_ell, const DoeblinCertificate& cert);

struct DoeblinSplit {
  DensityKernel t;
  Kernel s;
  Kernel q_ell;
  double threshold = 0.0;
  SmallSetScan scan;
};

/// S = Q^ℓ - T_{ν,α} with α the a.c. density of Q^ℓ cut at η^-1 ||Q^ℓ||.
/// Throws DoeblinViolated with a witness set when the small-set bound fails.
DoeblinSplit doeblin_split(const Kernel& q, const DoeblinCertificate& cert);

double ui_tail(const DensityKernel& t, double m);

/// Set functions on a family of positive measures. On windowed spaces the
/// limits are read off the exhaustion tail B (the last `tail_size` states of
/// `order`, default half of the window), so they are estimates rather than
/// certified values.
struct TailSpec {
  std::vector<Index> order;  // empty means 0..x_max
  std::optional<Index> tail_size;
};

struct SetFunctionValue {
  double value = 0.0;
  Interval bracket{0.0};
  double singular_mass = 0.0;
  bool certified = true;
};

double partial_nu(std::span<const Measure> family, const Measure& nu, const TailSpec& tail = {});
SetFunctionValue delta_nu(std::span<const Measure> family, const Measure& nu,
                          const TailSpec& tail = {});
double lambda_tail(std::span<const Measure> family, const TailSpec& tail = {});

std::vector<Measure> rows_of(const Kernel& q);

}  // namespace qcert
