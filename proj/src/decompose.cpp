#include "qcert/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace qcert {

namespace {

void require_probability(const Measure& nu, const char* what) {
  require(nu.is_positive(), ErrorCode::InvalidArgument, std::string(what) + " must be positive");
  double mass = nu.sum() + nu.tail_bound();
  require(std::fabs(mass - 1.0) <= 1e-12, ErrorCode::InvalidArgument,
          std::string(what) + " must be a probability (mass " + std::to_string(mass) + ")");
}

std::vector<Index> tail_states(const StateSpace& space, const TailSpec& spec) {
  std::vector<Index> order = spec.order;
  if (order.empty()) {
    order.resize(space.size());
    std::iota(order.begin(), order.end(), Index{0});
  }
  std::vector<char> seen(space.size(), 0);
  for (Index s : order) {
    require(s < space.size(), ErrorCode::InvalidArgument, "exhaustion state outside the window");
    require(!seen[s], ErrorCode::InvalidArgument, "exhaustion lists a state twice");
    seen[s] = 1;
  }
  Index k = spec.tail_size.value_or((order.size() + 1) / 2);
  require(k >= 1 && k <= order.size(), ErrorCode::InvalidArgument, "bad exhaustion tail size");
  return {order.end() - static_cast<std::ptrdiff_t>(k), order.end()};
}

void check_family(std::span<const Measure> family, const Measure& nu) {
  require_probability(nu, "reference measure");
  for (const auto& mu : family) {
    require(mu.space() == nu.space(), ErrorCode::SpaceMismatch, "family member on another space");
    require(mu.is_positive(), ErrorCode::InvalidArgument, "set functions need positive measures");
  }
}

std::string describe_set(const std::vector<Index>& set) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < set.size(); ++i) os << (i ? "," : "") << set[i];
  os << '}';
  return os.str();
}

}  // namespace

LebesgueSplit lebesgue_decompose(const Measure& mu, const Measure& nu) {
  require(mu.space() == nu.space(), ErrorCode::SpaceMismatch, "measures on different spaces");
  require_probability(nu, "reference measure");
  LebesgueSplit out;
  out.density.assign(mu.space().size(), 0.0);
  std::vector<Atom<double>> sing;
  for (const auto& a : mu.atoms()) {
    double v = nu.at(a.state);
    if (v > 0.0)
      out.density[a.state] = a.weight / v;
    else if (a.weight != 0.0)
      sing.push_back(a);
  }
  out.singular = Measure(mu.space(), std::move(sing), mu.tail_bound(), mu.tail_reach());
  return out;
}

// ---- DensityKernel -----------------------------------------------------------

DensityKernel::DensityKernel(Measure nu, std::vector<Row> alpha)
    : nu_(std::move(nu)), alpha_(std::move(alpha)) {
  require_probability(nu_, "nu");
  require(alpha_.size() == nu_.space().size(), ErrorCode::SpaceMismatch,
          "density kernel needs one alpha row per state");
  for (auto& row : alpha_) {
    std::sort(row.begin(), row.end(), [](auto& a, auto& b) { return a.state < b.state; });
    for (std::size_t i = 0; i < row.size(); ++i) {
      require(row[i].weight >= 0.0 && std::isfinite(row[i].weight), ErrorCode::InvalidArgument,
              "densities must be finite and nonnegative");
      require(row[i].state < nu_.space().size(), ErrorCode::InvalidArgument,
              "density index outside the window");
      require(i == 0 || row[i - 1].state != row[i].state, ErrorCode::InvalidArgument,
              "duplicate density entry");
    }
  }
}

double DensityKernel::alpha_at(Index x, Index y) const {
  const auto& row = alpha_.at(x);
  auto it = std::lower_bound(row.begin(), row.end(), y,
                             [](const Atom<double>& a, Index s) { return a.state < s; });
  return (it != row.end() && it->state == y) ? it->weight : 0.0;
}

double DensityKernel::sup_alpha() const {
  double m = 0.0;
  for (const auto& row : alpha_)
    for (const auto& a : row) m = std::max(m, a.weight);
  return m;
}

Kernel DensityKernel::to_kernel(bool markov) const {
  std::vector<Kernel::Row> rows;
  rows.reserve(alpha_.size());
  for (const auto& row : alpha_) {
    std::vector<Atom<double>> atoms;
    for (const auto& a : row) {
      double v = a.weight * nu_.at(a.state);
      if (v != 0.0) atoms.push_back({a.state, v});
    }
    rows.emplace_back(nu_.space(), std::move(atoms));
  }
  return Kernel(nu_.space(), std::move(rows), markov);
}

DensityKernel DensityKernel::weighted(const WeightFn& w) const {
  require(w.size() == size(), ErrorCode::SpaceMismatch, "weight size differs from window");
  std::vector<Row> out = alpha_;
  for (Index x = 0; x < out.size(); ++x)
    for (auto& a : out[x]) a.weight = a.weight * w.values()[a.state] / w.values()[x];
  return DensityKernel(nu_, std::move(out));
}

KernelSplit kernel_decompose(const Kernel& k, const Measure& nu) {
  require(k.space() == nu.space(), ErrorCode::SpaceMismatch, "kernel and nu on different spaces");
  std::vector<DensityKernel::Row> alpha;
  std::vector<Kernel::Row> sing;
  alpha.reserve(k.size());
  sing.reserve(k.size());
  for (const auto& row : k.rows()) {
    auto split = lebesgue_decompose(row, nu);
    DensityKernel::Row a;
    for (Index y = 0; y < split.density.size(); ++y)
      if (split.density[y] != 0.0) a.push_back({y, split.density[y]});
    alpha.push_back(std::move(a));
    sing.push_back(std::move(split.singular));
  }
  return {DensityKernel(nu, std::move(alpha)),
          Kernel(k.space(), std::move(sing))};
}

// ---- partition densities -----------------------------------------------------

DensityLadder partition_density(const Kernel& k, const Kernel& r, unsigned depth) {
  require(k.space() == r.space(), ErrorCode::SpaceMismatch, "grid kernels on different spaces");
  const Index n = k.size();
  require(depth >= 1, ErrorCode::InvalidArgument, "depth must be at least 1");
  require((n & (n - 1)) == 0 && n >= (Index{1} << depth), ErrorCode::InvalidArgument,
          "grid size must be a power of two at least 2^depth");

  DensityLadder out;
  out.depth = depth;
  out.phi.resize(depth);
  out.residual.assign(n, 0.0);
  out.atom_cells.resize(n);

  for (Index x = 0; x < n; ++x) {
    const auto kd = k.row(x).dense();
    const auto rd = r.row(x).dense();
    require(std::accumulate(rd.begin(), rd.end(), 0.0) > 0.0, ErrorCode::InvalidArgument,
            "reference row " + std::to_string(x) + " has no mass");
    for (unsigned lev = 1; lev <= depth; ++lev) {
      const Index cells = Index{1} << lev;
      const Index width = n / cells;
      std::vector<double> phi(cells, 0.0);
      for (Index c = 0; c < cells; ++c) {
        double km = 0.0, rm = 0.0;
        for (Index y = c * width; y < (c + 1) * width; ++y) {
          km += kd[y];
          rm += rd[y];
        }
        if (rm > 0.0)
          phi[c] = km / rm;
        else if (lev == depth)
          out.residual[x] += km;
      }
      out.phi[lev - 1].push_back(std::move(phi));
    }
    if (depth >= 2) {
      const auto& fine = out.phi[depth - 1][x];
      const auto& mid = out.phi[depth - 2][x];
      for (Index c = 0; c < fine.size(); ++c) {
        bool grows = mid[c / 2] > 0.0 && fine[c] / mid[c / 2] > 1.75;
        if (depth >= 3) {
          const auto& coarse = out.phi[depth - 3][x];
          grows = grows && coarse[c / 4] > 0.0 && mid[c / 2] / coarse[c / 4] > 1.75;
        }
        if (grows) out.atom_cells[x].push_back(c);
      }
    }
  }
  return out;
}

// ---- Doeblin split -----------------------------------------------------------

void validate(const DoeblinCertificate& cert) {
  require(cert.ell >= 1, ErrorCode::InvalidArgument, "ell must be at least 1");
  require_probability(cert.nu, "nu");
  require(std::isfinite(cert.eta) && cert.eta > 0.0, ErrorCode::InvalidArgument,
          "eta must be positive");
  require(std::isfinite(cert.rho) && cert.rho >= 0.0, ErrorCode::InvalidArgument,
          "rho must be nonnegative");
}

SmallSetScan scan_small_sets(const Kernel& q_ell, const DoeblinCertificate& cert) {
  validate(cert);
  require(q_ell.is_positive(), ErrorCode::InvalidArgument, "condition (D) needs a positive kernel");
  const double bound = std::pow(cert.rho, static_cast<double>(cert.ell));
  SmallSetScan out;
  bool first = true;

  struct Item {
    Index state;
    double mass, cost;
  };
  for (Index x = 0; x < q_ell.size(); ++x) {
    const auto& row = q_ell.row(x);
    double free_mass = row.tail_bound();
    std::vector<Index> set;
    std::vector<Item> items;
    for (const auto& a : row.atoms()) {
      if (a.weight == 0.0) continue;
      double c = cert.nu.at(a.state);
      if (c == 0.0) {
        free_mass += a.weight;
        set.push_back(a.state);
      } else {
        items.push_back({a.state, a.weight, c});
      }
    }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      return a.mass * b.cost > b.mass * a.cost;
    });

    double greedy = free_mass, spent = 0.0;
    for (const auto& it : items) {
      if (spent + it.cost <= cert.eta) {
        spent += it.cost;
        greedy += it.mass;
        set.push_back(it.state);
      }
    }
    double relaxed = free_mass, budget = cert.eta;
    for (const auto& it : items) {
      if (it.cost <= budget) {
        relaxed += it.mass;
        budget -= it.cost;
      } else {
        relaxed += it.mass * (budget / it.cost);
        break;
      }
    }
    relaxed = std::max(relaxed, greedy);

    if (first || greedy > out.worst.lo() || (greedy == out.worst.lo() && relaxed > out.worst.hi())) {
      out.worst = Interval(greedy, relaxed);
      out.worst_row = x;
      std::sort(set.begin(), set.end());
      out.witness = set;
      out.witness_nu = spent;
      first = false;
    }
  }
  out.holds = out.worst.lo() <= bound + 1e-12;
  return out;
}

DoeblinSplit doeblin_split(const Kernel& q, const DoeblinCertificate& cert) {
  validate(cert);
  require(cert.nu.space() == q.space(), ErrorCode::SpaceMismatch, "nu lives on another space");
  DoeblinSplit out;
  out.q_ell = power(q, cert.ell);
  out.scan = scan_small_sets(out.q_ell, cert);
  const double bound = std::pow(cert.rho, static_cast<double>(cert.ell));
  if (!out.scan.holds) {
    fail(ErrorCode::DoeblinViolated,
         "A = " + describe_set(out.scan.witness) + " has nu(A) = " +
             std::to_string(out.scan.witness_nu) + " <= eta but Q^" + std::to_string(cert.ell) +
             "(" + std::to_string(out.scan.worst_row) + ", A) = " +
             std::to_string(out.scan.worst.lo()) + " > " + std::to_string(bound));
  }

  out.threshold = sup_norm(out.q_ell) / cert.eta;
  std::vector<DensityKernel::Row> alpha;
  std::vector<Kernel::Row> s_rows;
  for (Index x = 0; x < q.size(); ++x) {
    const auto& row = out.q_ell.row(x);
    DensityKernel::Row a;
    std::vector<Atom<double>> s;
    for (const auto& e : row.atoms()) {
      double v = cert.nu.at(e.state);
      double dens = v > 0.0 ? e.weight / v : 0.0;
      if (v > 0.0 && dens <= out.threshold) {
        if (dens != 0.0) a.push_back({e.state, dens});
      } else if (e.weight != 0.0) {
        s.push_back(e);
      }
    }
    alpha.push_back(std::move(a));
    s_rows.emplace_back(q.space(), std::move(s), row.tail_bound(), row.tail_reach());
  }
  out.t = DensityKernel(cert.nu, std::move(alpha));
  out.s = Kernel(q.space(), std::move(s_rows));

  double s_norm = 0.0;
  Index s_row = 0;
  for (Index x = 0; x < q.size(); ++x) {
    double m = out.s.row(x).total_variation();
    if (m > s_norm) {
      s_norm = m;
      s_row = x;
    }
  }
  if (s_norm > bound + 1e-12) {
    std::vector<Index> set;
    double nu_mass = 0.0;
    for (const auto& e : out.s.row(s_row).atoms()) {
      set.push_back(e.state);
      nu_mass += cert.nu.at(e.state);
    }
    fail(ErrorCode::DoeblinViolated,
         "residual row " + std::to_string(s_row) + " keeps mass " + std::to_string(s_norm) +
             " > " + std::to_string(bound) + " on A = " + describe_set(set) + " with nu(A) = " +
             std::to_string(nu_mass));
  }
  return out;
}

double ui_tail(const DensityKernel& t, double m) {
  require(m >= 0.0, ErrorCode::InvalidArgument, "cutoff must be nonnegative");
  double best = 0.0;
  for (const auto& row : t.alpha()) {
    double s = 0.0;
    for (const auto& a : row)
      if (a.weight >= m) s += a.weight * t.nu().at(a.state);
    best = std::max(best, s);
  }
  return best;
}

// ---- set functions ---------------------------------------------------------

double partial_nu(std::span<const Measure> family, const Measure& nu, const TailSpec& tail) {
  check_family(family, nu);
  double escape = 0.0;
  for (const auto& mu : family) escape = std::max(escape, mu.tail_bound());
  if (nu.space().is_finite()) return escape;

  // Smallest density level that family mass reaches on the exhaustion tail;
  // the limit in k is read at that level.
  auto b = tail_states(nu.space(), tail);
  double k_b = std::numeric_limits<double>::infinity();
  for (const auto& mu : family)
    for (Index y : b) {
      double m = mu.at(y), v = nu.at(y);
      if (m > 0.0 && v > 0.0) k_b = std::min(k_b, m / v);
    }
  if (!std::isfinite(k_b)) return escape;

  double best = 0.0;
  for (const auto& mu : family) {
    double s = mu.tail_bound();
    for (const auto& a : mu.atoms()) {
      double v = nu.at(a.state);
      if (v > 0.0 && a.weight / v >= k_b) s += a.weight;
    }
    best = std::max(best, s);
  }
  return best;
}

SetFunctionValue delta_nu(std::span<const Measure> family, const Measure& nu,
                          const TailSpec& tail) {
  double p = partial_nu(family, nu, tail);
  double sing = 0.0;
  for (const auto& mu : family) {
    double s = 0.0;
    for (const auto& a : mu.atoms())
      if (nu.at(a.state) == 0.0) s += a.weight;
    sing = std::max(sing, s);
  }
  SetFunctionValue out;
  out.singular_mass = sing;
  out.bracket = Interval(p, sing == 0.0 ? p : round_up(p + sing));
  out.value = sing == 0.0 ? p : out.bracket.mid();
  out.certified = nu.space().is_finite();
  return out;
}

double lambda_tail(std::span<const Measure> family, const TailSpec& tail) {
  if (family.empty() || family.front().space().is_finite()) return 0.0;
  auto b = tail_states(family.front().space(), tail);
  double best = 0.0;
  for (const auto& mu : family) {
    double s = mu.tail_bound();
    for (Index y : b) s += std::fabs(mu.at(y));
    best = std::max(best, s);
  }
  return best;
}

std::vector<Measure> rows_of(const Kernel& q) { return {q.rows().begin(), q.rows().end()}; }

}  // namespace qcert
