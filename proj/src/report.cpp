#include "qcert/report.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "qcert/ergodic.hpp"
#include "qcert/ess_spectrum.hpp"
#include "qcert/examples.hpp"

namespace qcert {

using Json = nlohmann::ordered_json;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "verified";
    case Verdict::Failed: return "failed";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

// JSON has no infinity; an unbounded end is written as null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json interval_json(const Interval& iv) {
  Json j = Json::object();
  j["lo"] = num(iv.lo());
  j["hi"] = num(iv.hi());
  return j;
}

Json trace_entry(const std::string& quantity, const std::string& method, Json params) {
  Json j = Json::object();
  j["quantity"] = quantity;
  j["method"] = method;
  j["params"] = std::move(params);
  return j;
}

Json kernel_json(const Kernel& q) {
  Json j = Json::object();
  j["space"] = q.space().is_finite() ? "finite" : "windowed";
  j["size"] = q.size();
  j["markov"] = q.is_markov();
  return j;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "inf";
  std::ostringstream ss;
  ss.precision(15);
  ss << v;
  return ss.str();
}

std::string fmt(const Interval& iv) { return "[" + fmt(iv.lo()) + ", " + fmt(iv.hi()) + "]"; }

struct Builder {
  Json doc = Json::object();
  Json trace = Json::array();
  std::ostringstream human;
  Verdict verdict = Verdict::Verified;

  Builder(const char* command) {
    doc["command"] = command;
    doc["verdict"] = nullptr;
  }

  void line(const std::string& key, const std::string& value) { human << key << ": " << value << "\n"; }

  Report finish() {
    doc["verdict"] = to_string(verdict);
    doc["trace"] = trace;
    Report r;
    r.verdict = verdict;
    r.json = doc.dump(2) + "\n";
    r.summary = human.str() + "verdict: " + to_string(verdict) + "\n";
    return r;
  }
};

WeightFn slice_weight(const WeightFn& w, Index n) {
  if (w.size() == n) return w;
  std::vector<double> v(w.values().begin(), w.values().begin() + static_cast<long>(n));
  return WeightFn(std::move(v), w.tail_ratio());
}

// Shrinks a windowed spec to 0..x_max; certificate sets must fit.
KernelSpec restrict_spec(const KernelSpec& spec, std::optional<Index> x_max) {
  if (!x_max || spec.kernel.space().is_finite() || *x_max >= spec.kernel.space().x_max()) return spec;
  KernelSpec out = spec;
  out.kernel = restrict_window(spec.kernel, *x_max);
  const Index n = out.kernel.size();
  if (out.weight) out.weight = slice_weight(*out.weight, n);
  auto fits = [&](const std::vector<Index>& c) {
    for (Index x : c)
      require(x < n, ErrorCode::InvalidArgument, "certificate set leaves the requested window");
  };
  auto cut = [&](const Measure& m) {
    std::vector<Atom<double>> a;
    double tail = m.tail_bound();
    for (const auto& at : m.atoms()) {
      if (at.state < n) a.push_back(at);
      else tail += std::fabs(at.weight);
    }
    return Measure(out.kernel.space(), a, tail, m.tail_reach());
  };
  if (out.drift) fits(out.drift->c);
  if (out.minorization) {
    fits(out.minorization->c);
    out.minorization->nu = cut(out.minorization->nu);
    if (!out.minorization->alpha.empty()) out.minorization->alpha.resize(n);
  }
  if (out.doeblin) out.doeblin->nu = cut(out.doeblin->nu);
  if (out.multiplier) out.multiplier->xi.resize(n);
  return out;
}

Json oracle_json(const std::vector<Complex>& ev, unsigned top) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < ev.size() && (top == 0 || i < top); ++i) {
    Json e = Json::object();
    e["re"] = ev[i].real();
    e["im"] = ev[i].imag();
    e["abs"] = std::abs(ev[i]);
    arr.push_back(e);
  }
  return arr;
}

}  // namespace

Report run_analyze(const KernelSpec& input, const AnalyzeOptions& opts) {
  KernelSpec spec = restrict_spec(input, opts.window);
  const Kernel& q = spec.kernel;
  Builder b("analyze");
  b.doc["kernel"] = kernel_json(q);

  WeightFn w = spec.weight && opts.weighted ? *spec.weight : WeightFn::constant(q.size());
  auto rad = spectral_radius_upper(q, w, opts.n_power);
  Interval radius = rad.exact ? Interval(*rad.exact) : Interval(0.0, rad.bound);
  b.doc["spectral_radius"] = interval_json(radius);
  {
    Json p = Json::object();
    p["n"] = opts.n_power;
    p["weighted"] = !w.is_constant_one();
    b.trace.push_back(trace_entry("spectral_radius",
                                  rad.exact ? "exact: P1 = 1" : "Gelfand bound ||Q^n||_w^(1/n)", p));
  }
  b.line("spectral radius", fmt(radius));

  Json checks = Json::object();
  std::optional<Interval> certified;
  std::optional<Kernel> residual;
  unsigned ell = spec.doeblin ? spec.doeblin->ell : 1;

  if (spec.doeblin) {
    try {
      auto split = doeblin_split(q, *spec.doeblin);
      double norm = sup_norm(split.s);
      Interval v = ell == 1 ? Interval(norm) : pow(Interval(norm), 1.0 / ell);
      certified = v;
      residual = split.s;
      checks["doeblin"] = true;
      Json p = Json::object();
      p["ell"] = ell;
      p["eta"] = spec.doeblin->eta;
      p["rho"] = spec.doeblin->rho;
      p["threshold"] = split.threshold;
      p["residual_norm"] = norm;
      b.trace.push_back(trace_entry("re_upper", "Doeblin split: ||Q^l - T||^(1/l)", p));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DoeblinViolated) throw;
      checks["doeblin"] = false;
      Json wj = Json::object();
      wj["certificate"] = "doeblin";
      wj["message"] = e.what();
      b.doc["witness"] = wj;
      b.verdict = Verdict::Failed;
      b.line("doeblin", std::string("FAILED: ") + e.what());
    }
  }

  std::vector<DoeblinCandidate> cands;
  cands.push_back({ell, spec.doeblin ? spec.doeblin->nu : Measure::uniform(q.space())});
  EssBound est = spec.weight && opts.weighted
                     ? re_upper_weighted(q, w, DoeblinStrategy{cands, {}})
                     : re_upper_doeblin(q, cands);
  {
    Json p = Json::object();
    p["ell"] = est.ell;
    p["certified"] = est.certified;
    p["weighted"] = spec.weight && opts.weighted;
    b.trace.push_back(trace_entry("re_estimate", "set function Delta_nu(Q^l)^(1/l)", p));
  }
  b.doc["re_estimate"] = interval_json(est.value);
  b.line("re estimate (Delta_nu)", fmt(est.value) + (est.certified ? "" : " (windowed)"));

  Interval re = certified ? *certified : est.value;
  if (!certified && est.certified) certified = est.value;
  b.doc["re_upper"] = interval_json(re);
  b.doc["certified"] = certified.has_value();
  b.line("re upper", fmt(re) + (certified ? "" : " (estimate only)"));
  if (q.is_markov()) {
    b.doc["quasi_compact"] = re.hi() < 1.0;
    b.line("quasi-compact", re.hi() < 1.0 ? "yes" : "undecided");
  }

  if (spec.multiplier && residual) {
    auto chi = Multiplier::fourier(spec.multiplier->xi, spec.multiplier->t);
    auto mb = multiplier_bound(q, chi, ell, *residual);
    Json m = Json::object();
    m["chi_norm"] = mb.chi_norm;
    m["r_bound"] = mb.r_bound;
    m["re_bound"] = mb.re_bound;
    m["dichotomy_consistent"] = mb.dichotomy_consistent;
    b.doc["multiplier"] = m;
    b.trace.push_back(trace_entry("multiplier.re_bound", "||chi|| ||S||^(1/l)", Json::object()));
  }

  if (q.space().is_finite() && q.size() <= kOracleSizeLimit) {
    auto ev = eigen_oracle(q);
    b.doc["oracle"] = oracle_json(ev, 10);
  }
  b.doc["checks"] = checks;

  if (b.verdict == Verdict::Verified && !certified && est.value.width() > 1e-6) {
    b.verdict = Verdict::Inconclusive;
    b.doc["note"] = "tail bracket width " + fmt(est.value.width()) +
                    "; rerun with a larger --window or supply a doeblin certificate";
    b.line("note", b.doc["note"].get<std::string>());
  }
  return b.finish();
}

Report run_certify(const KernelSpec& input, const CertifyOptions& opts) {
  KernelSpec spec = restrict_spec(input, opts.window);
  require(spec.weight && spec.drift && spec.minorization, ErrorCode::InvalidArgument,
          "certify needs weight, drift and minorization blocks");
  const Kernel& q = spec.kernel;
  Builder b("certify");
  b.doc["kernel"] = kernel_json(q);
  auto drift = spec.drift_certificate();
  auto minor = spec.minorization_certificate();

  Json checks = Json::object();
  auto dc = verify_drift(q, drift);
  checks["drift"] = dc.pass;
  if (!dc.pass) {
    Json wj = Json::object();
    wj["certificate"] = "drift";
    wj["x"] = dc.worst;
    wj["pw"] = interval_json(dc.pw[dc.worst]);
    wj["excess"] = dc.worst_excess;
    b.doc["witness"] = wj;
    b.verdict = Verdict::Failed;
    b.line("drift", "FAILED at x = " + std::to_string(dc.worst) + " (Pw exceeds bound by " +
                        fmt(dc.worst_excess) + ")");
  }
  auto mc = verify_minorization(q, minor, spec.weight);
  checks["minorization"] = mc.pass;
  if (!mc.pass && b.verdict == Verdict::Verified) {
    Json wj = Json::object();
    wj["certificate"] = "minorization";
    wj["x"] = mc.x;
    wj["y"] = mc.y;
    wj["reason"] = mc.reason;
    b.doc["witness"] = wj;
    b.verdict = Verdict::Failed;
    b.line("minorization", "FAILED: " + mc.reason);
  }
  b.doc["checks"] = checks;
  if (b.verdict == Verdict::Failed) return b.finish();
  b.line("drift", "ok");
  b.line("minorization", "ok");

  auto rad = spectral_radius_upper(q, drift.w, 8);
  Interval radius = rad.exact ? Interval(*rad.exact) : Interval(0.0, rad.bound);
  b.doc["spectral_radius"] = interval_json(radius);
  b.trace.push_back(trace_entry("spectral_radius",
                                rad.exact ? "exact: P1 = 1" : "Gelfand bound ||P^8||_w^(1/8)",
                                Json::object()));

  auto rb = compute_rb(q, drift, minor, opts.rb);
  b.doc["r_b"] = interval_json(rb.r_b);
  b.doc["re_upper"] = interval_json(rb.bound);
  {
    Json p = Json::object();
    p["r1"] = drift.r1;
    p["eta"] = drift.eta;
    p["b"] = minor.b();
    Json samples = Json::array();
    for (const auto& [r, h] : rb.samples) {
      Json s = Json::object();
      s["r"] = r;
      s["h"] = interval_json(h);
      samples.push_back(s);
    }
    p["h_samples"] = samples;
    b.trace.push_back(trace_entry("r_b", minor.b() == 1.0 ? "b = 1: r_b = r1"
                                                         : "bisection on h(r) < 1/(1-b)", p));
    b.trace.push_back(trace_entry("re_upper", "r_e^w <= 1/r_b", Json::object()));
  }
  b.doc["note"] = rb.note;
  b.line("r_b", fmt(rb.r_b));
  b.line("re_w upper", fmt(rb.bound));

  if (spec.multiplier) {
    auto chi = Multiplier::fourier(spec.multiplier->xi, spec.multiplier->t);
    double bound = chi.norm_bound() * rb.bound.hi();
    Json m = Json::object();
    m["chi_norm"] = chi.norm_bound();
    m["re_bound"] = bound;
    b.doc["multiplier"] = m;
    b.trace.push_back(trace_entry("multiplier.re_bound", "||chi|| / r_b", Json::object()));
  }
  if (rb.inconclusive) {
    b.verdict = Verdict::Inconclusive;
    b.line("note", rb.note);
  }
  return b.finish();
}

Report run_spectrum(const KernelSpec& spec, const SpectrumOptions& opts) {
  const Kernel& q = spec.kernel;
  Builder b("spectrum");
  b.doc["kernel"] = kernel_json(q);
  bool weighted = spec.weight && opts.weighted;
  Kernel m = q;
  if (!q.space().is_finite()) {
    m = Kernel::from_dense(StateSpace::finite(q.size()), truncation(q));
    b.doc["truncated"] = true;
  }
  std::optional<WeightFn> w;
  if (weighted) w = WeightFn(std::vector<double>(spec.weight->values().begin(), spec.weight->values().end()));
  auto ev = eigen_oracle(m, w);
  b.doc["weighted"] = weighted;
  b.doc["eigenvalues"] = oracle_json(ev, opts.top);
  b.trace.push_back(trace_entry("eigenvalues", "dense eigen solve (oracle)", Json::object()));
  b.line("eigenvalues", std::to_string(ev.size()));
  for (std::size_t i = 0; i < ev.size() && i < 5; ++i)
    b.line("  |lambda_" + std::to_string(i) + "|", fmt(std::abs(ev[i])));
  return b.finish();
}

Report run_ergodic(const KernelSpec& spec, unsigned n_max) {
  const Kernel& q = spec.kernel;
  Builder b("ergodic");
  b.doc["kernel"] = kernel_json(q);
  WeightFn w = spec.weight ? *spec.weight : WeightFn::constant(q.size());
  auto rep = ergodic_decay_check(q, w, basis_suite(w), n_max, false);
  Json pi = Json::array();
  for (double v : rep.pi.pi.dense()) pi.push_back(v);
  b.doc["pi"] = pi;
  b.doc["pi_residual"] = rep.pi.residual;
  b.doc["non_unique"] = rep.pi.non_unique;
  b.doc["d"] = rep.d;
  b.doc["subdominant"] = rep.subdominant;
  b.doc["kappa"] = rep.kappa;
  b.doc["D"] = rep.D;
  b.doc["log_slope"] = num(rep.log_slope);
  Json checks = Json::object();
  checks["envelope"] = rep.envelope_ok;
  checks["slope"] = rep.slope_ok;
  checks["cesaro"] = rep.cesaro_ok;
  b.doc["checks"] = checks;
  Json table = Json::array();
  for (const auto& row : rep.table) {
    Json r = Json::array();
    r.push_back(row.n);
    r.push_back(row.op_norm);
    r.push_back(row.envelope);
    table.push_back(r);
  }
  b.doc["decay_columns"] = Json::array({"n", "residual_w", "envelope"});
  b.doc["decay"] = table;
  Json p = Json::object();
  p["n_max"] = n_max;
  b.trace.push_back(trace_entry("D", "max residual / kappa^n over [0, n_max/2]", p));
  b.trace.push_back(trace_entry("kappa", "subdominant modulus + 0.01", Json::object()));

  b.line("period d", std::to_string(rep.d));
  b.line("kappa", fmt(rep.kappa));
  b.line("D", fmt(rep.D));
  b.line("log slope", fmt(rep.log_slope));
  if (rep.violation || !rep.slope_ok || !rep.cesaro_ok) {
    b.verdict = Verdict::Failed;
    if (rep.violation) {
      Json wj = Json::object();
      wj["n"] = rep.violation->n;
      wj["f"] = rep.violation->f ? Json(*rep.violation->f) : Json(nullptr);
      wj["x"] = rep.violation->x;
      wj["residual"] = rep.violation->residual;
      wj["envelope"] = rep.violation->envelope;
      b.doc["witness"] = wj;
      b.line("envelope", "FAILED at n = " + std::to_string(rep.violation->n));
    }
  }
  return b.finish();
}

Report run_conze_raugi(Complex lambda, unsigned terms, unsigned grid, UnitKind u, double amplitude) {
  Builder b("example conze-raugi");
  UnitFn fn = u == UnitKind::Half
                  ? UnitFn([](double) { return 0.5; })
                  : UnitFn([amplitude](double x) {
                      return 0.5 + amplitude * std::sin(2.0 * std::numbers::pi * x);
                    });
  auto res = conze_raugi_residual(fn, lambda, terms, grid);
  Json l = Json::object();
  l["re"] = lambda.real();
  l["im"] = lambda.imag();
  b.doc["lambda"] = l;
  b.doc["u"] = u == UnitKind::Half ? "half" : "sine";
  b.doc["terms"] = terms;
  b.doc["grid"] = grid;
  b.doc["residual"] = res.residual;
  b.doc["tail_bound"] = res.tail_bound;
  b.doc["worst_x"] = res.worst_x;
  bool ok = res.residual <= res.tail_bound + 1e-12;
  b.doc["eigen_relation"] = ok;
  b.trace.push_back(trace_entry("residual", "pointwise evaluation of P f - lambda f", Json::object()));
  b.line("residual", fmt(res.residual));
  b.line("tail bound", fmt(res.tail_bound));
  if (!ok) b.verdict = Verdict::Failed;
  return b.finish();
}

}  // namespace qcert
