#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qcert/decompose.hpp"
#include "qcert/kernel.hpp"

namespace qcert {

class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(Index n) : mask_(n, 0) {}
  static StateSet of(Index n, std::initializer_list<Index> states);
  static StateSet of(Index n, const std::vector<Index>& states);
  static StateSet all(Index n);

  Index size() const { return mask_.size(); }
  bool contains(Index x) const { return x < mask_.size() && mask_[x]; }
  void insert(Index x);
  Index count() const;
  std::vector<Index> members() const;

  friend bool operator==(const StateSet&, const StateSet&) = default;

 private:
  std::vector<char> mask_;
};

/// Claims Pw <= r1^-1 (w 1_{C^c} + eta 1_C).
struct DriftCertificate {
  StateSet c;
  WeightFn w;
  double r1 = 0.0;
  double eta = 0.0;
};

void validate(const DriftCertificate& cert);

/// Claims P(x,.) >= b T(x,.) for x in C, with T Markov on C.
class MinorizationCertificate {
 public:
  MinorizationCertificate(StateSet c, double b, DensityKernel t);

  const StateSet& c() const { return c_; }
  double b() const { return b_; }
  const DensityKernel& t() const { return t_; }

 private:
  StateSet c_;
  double b_;
  DensityKernel t_;
};

/// α ≡ value on the support of nu, for every row.
DensityKernel constant_density(const Measure& nu, double value = 1.0);

struct DriftCheck {
  bool pass = false;
  Index worst = 0;
  double worst_excess = 0.0;  // (Pw).hi - rhs at the state with the largest excess relative to max(1, rhs)
  std::vector<Interval> pw;
  /// Global consequence Pw <= w / r1 + eta / r1.
  double implied_constant = 0.0;
};

DriftCheck verify_drift(const Kernel& p, const DriftCertificate& cert);

struct HittingOptions {
  unsigned max_sweeps = 1'000'000;
  double tolerance = 1e-15;
};

/// Two-sided brackets for E_x[r^σ] (σ the hitting time of C, 0 on C) and,
/// for x in C, E_x[r^τ] (τ the return time).
struct HittingBracket {
  double r = 0.0;
  std::vector<Interval> sigma;
  std::vector<Interval> tau;
  unsigned lower_sweeps = 0;
  unsigned upper_sweeps = 0;
  bool lower_converged = false;
  bool upper_bounded = false;
};

HittingBracket minimal_drift(const Kernel& p, const StateSet& c, double r,
                             const std::optional<WeightFn>& reference = std::nullopt,
                             const HittingOptions& opts = {});

struct MinorizationCheck {
  bool pass = false;
  std::string reason;
  Index x = 0;
  Index y = 0;
  double ui = 0.0;
};

MinorizationCheck verify_minorization(const Kernel& p, const MinorizationCertificate& cert,
                                      const std::optional<WeightFn>& w = std::nullopt,
                                      std::optional<double> ui_cutoff = std::nullopt,
                                      double ui_tolerance = 1e-12);

/// The kernel of the split chain: P off C, (P - bT)/(1-b) on C, δ_x on C when b = 1.
Kernel split_kernel(const Kernel& p, const MinorizationCertificate& cert);

/// h(r) = sup_{x in C} Σ_y P0(x,y) r E_y[r^σ].
Interval h_of_r(const Kernel& p0, const Kernel& p, const DriftCertificate& drift,
                const MinorizationCertificate& minor, double r, const HittingOptions& opts = {});

double eta1(const DriftCertificate& drift, double b);
/// m(r) = r1 η1 / (r1 - max{r, 1})^2.
double m_of_r(const DriftCertificate& drift, double b, double r);
/// M(r) = m(r) / (1 - (1-b) h(r)), +inf when the denominator is not positive.
double big_m(double m, double b, double h);
/// M_w(r) = r1/(r1 - r) (1 + r1^-1 η r M(r)).
double big_mw(const DriftCertificate& drift, double r, double big_m_value);

struct RbResult {
  Interval r_b{1.0};
  /// r_e^w(P) <= 1/r_b, reported as an interval around 1/r_b.lo.
  Interval bound{1.0};
  std::vector<std::pair<double, Interval>> samples;
  bool inconclusive = false;
  std::string note;
};

struct RbOptions {
  unsigned max_bisections = 60;
  double resolution = 1e-12;
  HittingOptions hitting;
};

RbResult compute_rb(const Kernel& p, const DriftCertificate& drift,
                    const MinorizationCertificate& minor, const RbOptions& opts = {});

struct RenewalPair {
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t paths = 0;
};

constexpr std::size_t kPathLimit = 100'000'000;

/// lhs = ((P - b 1_C T)^n 1)(x); rhs = E_x[(1-b)^{N_n}] by enumerating the
/// split-chain paths of length n.
RenewalPair renewal_identity(const Kernel& p, const MinorizationCertificate& minor, Index x,
                             unsigned n);

struct GfSuite {
  Index x = 0;
  double r = 0.0;
  double h = 0.0;
  std::vector<double> H;  // H_k = E_x[r^{ρ_k}], split chain
  std::vector<double> L;  // L_k = Σ_n r^n P_x[N_n = k]
  double g_renewal = 0.0;    // Σ_{k<=k_max} (1-b)^k L_k
  double g_remainder = 0.0;  // bound on the omitted k > k_max terms
  double g_series = 0.0;     // Σ_{n<=n_max} r^n S^n(x,E)
  double g_matrix = 0.0;     // ((I - rS)^-1 1)(x)
  double gw_matrix = 0.0;    // ((I - rS)^-1 w)(x) / w(x)
  double m = 0.0, big_m = 0.0, big_mw = 0.0;
  bool h_bound_ok = false;      // H_k <= w(x) h^k
  bool renewal_ok = false;      // G from L_k matches the matrix value
  bool gw_bound_ok = false;     // (1 - r/r1) G_w <= 1 + r1^-1 η r G / w
  bool m_bound_ok = false;      // G / w <= M(r)
  bool mw_bound_ok = false;     // G_w <= M_w(r)
  bool h_growth_ok = false;     // 0 <= h - 1 <= (r-1) m(r)
};

GfSuite gf_suite(const Kernel& p, const DriftCertificate& drift,
                 const MinorizationCertificate& minor, Index x, double r, unsigned k_max,
                 unsigned n_max);

// ---- Foster-Lyapunov to small-set constructions ----------------------------

double level_set_t0(double rho, double zeta, double rho_bar);
double level_set_zeta(double rho, double zeta, double t);
unsigned level_set_kt(double t, double rho);

struct SmallSetWitness {
  unsigned m = 1;
  double b = 0.0;
  Measure nu;
};

struct FosterResult {
  bool direct = false;
  double t0 = 0.0, t = 0.0, zeta_t = 0.0, rho_bar = 0.0;
  unsigned k_t = 0;
  DriftCertificate drift;
  /// Minorization holds for `minor_kernel`: P^m in the direct branch, the
  /// average of P^{k+m} over k <= k_t otherwise.
  Kernel minor_kernel;
  std::optional<MinorizationCertificate> minor;
};

/// From Pw <= ρw + ζ1_C and P^m >= b 1_C ν. With rho_bar unset the direct
/// certificate on C is returned.
FosterResult foster_to_small(const Kernel& p, const WeightFn& w, const StateSet& c, double rho,
                             double zeta, const SmallSetWitness& small,
                             std::optional<double> rho_bar = std::nullopt,
                             std::optional<double> t = std::nullopt);

struct Synthesis {
  unsigned n = 0;
  Kernel pn;
  double rho_n = 0.0;
  DriftCertificate drift;
  std::optional<MinorizationCertificate> minor;
  /// (1/r_b)^(1/n): the bound this certificate implies for P itself.
  double implied_bound = 1.0;
  RbResult rb;
};

Synthesis synthesize_certificates(const Kernel& p, const WeightFn& w, double t, double b,
                                  unsigned n_cap = 64);

}  // namespace qcert
