#include "qcert/spec_file.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qcert/examples.hpp"

namespace qcert {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::ParseError, "field " + (path.empty() ? std::string("/") : path) + ": " + what);
}

const Json& member(const Json& j, const std::string& path, const char* key) {
  if (!j.is_object()) field_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) field_error(path + "/" + key, "missing");
  return *it;
}

const Json* optional_member(const Json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) field_error(path, "expected a finite number");
  return v;
}

Index index(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) field_error(path, "expected a nonnegative integer");
  return j.get<Index>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
  return out;
}

std::vector<Index> indices(const Json& j, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array");
  std::vector<Index> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(index(j[i], path + "/" + std::to_string(i)));
  return out;
}

std::vector<Atom<double>> atoms(const Json& j, const std::string& path, Index n) {
  auto idx = indices(member(j, path, "idx"), path + "/idx");
  auto w = numbers(member(j, path, "w"), path + "/w");
  if (idx.size() != w.size()) field_error(path, "idx and w differ in length");
  std::vector<Atom<double>> out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) field_error(path + "/idx/" + std::to_string(i), "state outside the window");
    out.push_back({idx[i], w[i]});
  }
  return out;
}

Measure measure(const Json& j, const std::string& path, const StateSpace& space) {
  auto a = atoms(j, path, space.size());
  double tail = 0.0;
  std::optional<Index> reach;
  if (const auto* t = optional_member(j, "tail")) tail = number(*t, path + "/tail");
  if (const auto* r = optional_member(j, "reach")) reach = index(*r, path + "/reach");
  try {
    return Measure(space, std::move(a), tail, reach);
  } catch (const Error& e) {
    field_error(path, e.what());
  }
}

Json atoms_json(std::span<const Atom<double>> a) {
  Json idx = Json::array(), w = Json::array();
  for (const auto& x : a) {
    idx.push_back(x.state);
    w.push_back(x.weight);
  }
  Json out = Json::object();
  out["idx"] = idx;
  out["w"] = w;
  return out;
}

Json measure_json(const Measure& m) {
  Json out = atoms_json(m.atoms());
  if (m.tail_bound() != 0.0) out["tail"] = m.tail_bound();
  if (m.tail_reach()) out["reach"] = *m.tail_reach();
  return out;
}

Json indices_json(const std::vector<Index>& v) {
  Json out = Json::array();
  for (Index x : v) out.push_back(x);
  return out;
}

template <class F>
auto wrap(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    field_error(path, e.what());
  }
}

}  // namespace

DriftCertificate KernelSpec::drift_certificate() const {
  require(drift.has_value(), ErrorCode::InvalidArgument, "spec has no drift certificate");
  require(weight.has_value(), ErrorCode::InvalidArgument, "drift certificate needs a weight");
  return {StateSet::of(kernel.size(), drift->c), *weight, drift->r1, drift->eta};
}

MinorizationCertificate KernelSpec::minorization_certificate() const {
  require(minorization.has_value(), ErrorCode::InvalidArgument,
          "spec has no minorization certificate");
  const auto& m = *minorization;
  DensityKernel t = m.alpha.empty() ? constant_density(m.nu) : DensityKernel(m.nu, m.alpha);
  return MinorizationCertificate(StateSet::of(kernel.size(), m.c), m.b, t);
}

KernelSpec parse_spec(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) field_error("", "expected an object at top level");

  KernelSpec spec;
  const auto& sp = member(j, "", "space");
  const auto& type = member(sp, "/space", "type");
  if (!type.is_string()) field_error("/space/type", "expected a string");
  Index size = index(member(sp, "/space", "size"), "/space/size");
  StateSpace space = StateSpace::finite(1);
  const auto kind = type.get<std::string>();
  if (kind == "finite") {
    if (size < 1) field_error("/space/size", "must be at least 1");
    space = StateSpace::finite(size);
  } else if (kind == "windowed") {
    if (size < 2) field_error("/space/size", "a window needs at least 2 states");
    space = StateSpace::windowed(size - 1);
  } else {
    field_error("/space/type", "expected \"finite\" or \"windowed\"");
  }

  bool markov = false;
  if (const auto* m = optional_member(j, "markov")) {
    if (!m->is_boolean()) field_error("/markov", "expected true or false");
    markov = m->get<bool>();
  }
  const auto& rows_j = member(j, "", "rows");
  if (!rows_j.is_array()) field_error("/rows", "expected an array");
  if (rows_j.size() != space.size())
    field_error("/rows", "expected " + std::to_string(space.size()) + " rows, got " +
                             std::to_string(rows_j.size()));
  std::vector<Kernel::Row> rows;
  for (std::size_t i = 0; i < rows_j.size(); ++i) {
    const std::string path = "/rows/" + std::to_string(i);
    rows.push_back(measure(rows_j[i], path, space));
    if (!markov) continue;
    // Point at the offending entry rather than the whole row list.
    const auto& atoms = rows.back().atoms();
    for (std::size_t k = 0; k < atoms.size(); ++k)
      if (atoms[k].weight < 0.0) field_error(path + "/w/" + std::to_string(k), "negative entry in a Markov kernel");
  }
  spec.kernel = wrap("/rows", [&] { return Kernel(space, std::move(rows), markov); });

  if (const auto* w = optional_member(j, "weight")) {
    if (const auto* g = optional_member(*w, "geometric")) {
      double z = number(*g, "/weight/geometric");
      spec.weight_geometric = z;
      spec.weight = wrap("/weight", [&] { return WeightFn::geometric(space.size(), z); });
    } else {
      auto values = numbers(member(*w, "/weight", "values"), "/weight/values");
      if (values.size() != space.size()) field_error("/weight/values", "length differs from window");
      std::optional<double> ratio;
      if (const auto* r = optional_member(*w, "tail_ratio")) ratio = number(*r, "/weight/tail_ratio");
      spec.weight = wrap("/weight", [&] { return WeightFn(values, ratio); });
    }
  }

  if (const auto* c = optional_member(j, "certificates")) {
    if (!c->is_object()) field_error("/certificates", "expected an object");
    if (const auto* d = optional_member(*c, "doeblin")) {
      const std::string p = "/certificates/doeblin";
      DoeblinCertificate cert;
      cert.ell = static_cast<unsigned>(index(member(*d, p, "ell"), p + "/ell"));
      cert.nu = measure(member(*d, p, "nu"), p + "/nu", space);
      cert.eta = number(member(*d, p, "eta"), p + "/eta");
      cert.rho = number(member(*d, p, "rho"), p + "/rho");
      wrap(p, [&] { validate(cert); return 0; });
      spec.doeblin = cert;
    }
    if (const auto* d = optional_member(*c, "drift")) {
      const std::string p = "/certificates/drift";
      DriftBlock block;
      block.c = indices(member(*d, p, "C"), p + "/C");
      for (Index x : block.c)
        if (x >= space.size()) field_error(p + "/C", "state outside the window");
      block.r1 = number(member(*d, p, "r1"), p + "/r1");
      block.eta = number(member(*d, p, "eta"), p + "/eta");
      if (!spec.weight) field_error(p, "a drift certificate needs a weight block");
      spec.drift = block;
      wrap(p, [&] { validate(spec.drift_certificate()); return 0; });
    }
    if (const auto* m = optional_member(*c, "minorization")) {
      const std::string p = "/certificates/minorization";
      MinorizationBlock block;
      block.c = indices(member(*m, p, "C"), p + "/C");
      for (Index x : block.c)
        if (x >= space.size()) field_error(p + "/C", "state outside the window");
      block.b = number(member(*m, p, "b"), p + "/b");
      block.nu = measure(member(*m, p, "nu"), p + "/nu", space);
      if (const auto* a = optional_member(*m, "alpha")) {
        if (!a->is_array() || a->size() != space.size())
          field_error(p + "/alpha", "expected one density row per state");
        for (std::size_t i = 0; i < a->size(); ++i)
          block.alpha.push_back(atoms((*a)[i], p + "/alpha/" + std::to_string(i), space.size()));
      }
      spec.minorization = block;
      wrap(p, [&] { spec.minorization_certificate(); return 0; });
    }
  }

  if (const auto* m = optional_member(j, "multiplier")) {
    MultiplierBlock block;
    block.xi = numbers(member(*m, "/multiplier", "xi"), "/multiplier/xi");
    if (block.xi.size() != space.size()) field_error("/multiplier/xi", "length differs from window");
    block.t = number(member(*m, "/multiplier", "t"), "/multiplier/t");
    spec.multiplier = block;
  }
  return spec;
}

KernelSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

std::string emit_spec(const KernelSpec& spec) {
  const auto& space = spec.kernel.space();
  Json j = Json::object();
  j["space"] = Json::object();
  j["space"]["type"] = space.is_finite() ? "finite" : "windowed";
  j["space"]["size"] = space.size();
  j["markov"] = spec.kernel.is_markov();
  Json rows = Json::array();
  for (const auto& r : spec.kernel.rows()) rows.push_back(measure_json(r));
  j["rows"] = rows;

  if (spec.weight) {
    Json w = Json::object();
    if (spec.weight_geometric) {
      w["geometric"] = *spec.weight_geometric;
    } else {
      Json v = Json::array();
      for (double x : spec.weight->values()) v.push_back(x);
      w["values"] = v;
      if (spec.weight->tail_ratio()) w["tail_ratio"] = *spec.weight->tail_ratio();
    }
    j["weight"] = w;
  }

  if (spec.doeblin || spec.drift || spec.minorization) {
    Json c = Json::object();
    if (spec.doeblin) {
      Json d = Json::object();
      d["ell"] = spec.doeblin->ell;
      d["nu"] = measure_json(spec.doeblin->nu);
      d["eta"] = spec.doeblin->eta;
      d["rho"] = spec.doeblin->rho;
      c["doeblin"] = d;
    }
    if (spec.drift) {
      Json d = Json::object();
      d["C"] = indices_json(spec.drift->c);
      d["r1"] = spec.drift->r1;
      d["eta"] = spec.drift->eta;
      c["drift"] = d;
    }
    if (spec.minorization) {
      const auto& m = *spec.minorization;
      Json d = Json::object();
      d["C"] = indices_json(m.c);
      d["b"] = m.b;
      d["nu"] = measure_json(m.nu);
      if (!m.alpha.empty()) {
        Json a = Json::array();
        for (const auto& row : m.alpha) a.push_back(atoms_json(row));
        d["alpha"] = a;
      }
      c["minorization"] = d;
    }
    j["certificates"] = c;
  }

  if (spec.multiplier) {
    Json m = Json::object();
    Json xi = Json::array();
    for (double x : spec.multiplier->xi) xi.push_back(x);
    m["xi"] = xi;
    m["t"] = spec.multiplier->t;
    j["multiplier"] = m;
  }
  return j.dump(2) + "\n";
}

KernelSpec spec_from_walk(const WalkExample& walk) {
  KernelSpec spec;
  spec.kernel = walk.kernel;
  spec.weight = walk.w;
  spec.weight_geometric = walk.z;
  spec.drift = DriftBlock{walk.drift.c.members(), walk.drift.r1, walk.drift.eta};
  spec.minorization = MinorizationBlock{walk.minor.c().members(), walk.minor.b(), walk.minor.t().nu(), {}};
  return spec;
}

}  // namespace qcert
