#include "qcert/qcert.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "json.hpp"
#include "qcert/examples.hpp"
#include "qcert/report.hpp"
#include "qcert/spec_file.hpp"

struct qcert_spec {
  qcert::KernelSpec spec;
};

struct qcert_report {
  qcert::Report report;
};

namespace {

thread_local std::string g_last_error;

qcert_status map_code(qcert::ErrorCode code) {
  return static_cast<qcert_status>(static_cast<int>(code) + 1);
}

template <class F>
qcert_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return QCERT_OK;
  } catch (const qcert::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QCERT_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QCERT_E_INTERNAL;
  }
}

qcert_status null_arg(const char* name) {
  g_last_error = std::string(name) + " is null";
  return QCERT_E_NULL_POINTER;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
qcert_status make_report(qcert_report** out, F&& f) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qcert_report{f()}; });
}

template <class F>
qcert_status make_spec(qcert_spec** out, F&& f) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qcert_spec{f()}; });
}

}  // namespace

extern "C" {

const char* qcert_last_error(void) { return g_last_error.c_str(); }

const char* qcert_status_name(qcert_status status) {
  switch (status) {
    case QCERT_OK: return "OK";
    case QCERT_E_NULL_POINTER: return "NullPointer";
    case QCERT_E_INTERNAL: return "Internal";
    default:
      if (status > QCERT_OK && status < QCERT_E_NULL_POINTER)
        return qcert::to_string(static_cast<qcert::ErrorCode>(status - 1));
      return "Unknown";
  }
}

const char* qcert_version(void) { return "0.1.0"; }

qcert_status qcert_spec_parse(const char* text, size_t len, qcert_spec** out) {
  if (!text) return null_arg("text");
  return make_spec(out, [&] { return qcert::parse_spec(std::string(text, len)); });
}

qcert_status qcert_spec_load(const char* path, qcert_spec** out) {
  if (!path) return null_arg("path");
  return make_spec(out, [&] { return qcert::load_spec(path); });
}

qcert_status qcert_spec_from_dense(size_t n, const double* entries, int markov, qcert_spec** out) {
  if (!entries) return null_arg("entries");
  return make_spec(out, [&] {
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) rows[i][j] = entries[i * n + j];
    qcert::KernelSpec s;
    s.kernel = qcert::Kernel::from_dense(qcert::StateSpace::finite(n), rows, markov != 0);
    return s;
  });
}

qcert_status qcert_spec_emit(const qcert_spec* spec, char** out) {
  if (!spec) return null_arg("spec");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = dup(qcert::emit_spec(spec->spec)); });
}

qcert_status qcert_spec_size(const qcert_spec* spec, size_t* out) {
  if (!spec) return null_arg("spec");
  if (!out) return null_arg("out");
  *out = spec->spec.kernel.size();
  return QCERT_OK;
}

void qcert_spec_free(qcert_spec* spec) { delete spec; }

qcert_status qcert_example_walk(double p, size_t x_max, qcert_spec** out) {
  return make_spec(out, [&] { return qcert::spec_from_walk(qcert::build_reflected_walk(p, x_max)); });
}

qcert_status qcert_example_chain(size_t n, uint64_t seed, qcert_spec** out) {
  return make_spec(out, [&] {
    qcert::KernelSpec s;
    s.kernel = qcert::random_chain(n, seed);
    return s;
  });
}

qcert_status qcert_analyze(const qcert_spec* spec, size_t window, int weighted, qcert_report** out) {
  if (!spec) return null_arg("spec");
  return make_report(out, [&] {
    qcert::AnalyzeOptions opts;
    if (window) opts.window = window;
    opts.weighted = weighted != 0;
    return qcert::run_analyze(spec->spec, opts);
  });
}

qcert_status qcert_certify(const qcert_spec* spec, size_t window, qcert_report** out) {
  if (!spec) return null_arg("spec");
  return make_report(out, [&] {
    qcert::CertifyOptions opts;
    if (window) opts.window = window;
    return qcert::run_certify(spec->spec, opts);
  });
}

qcert_status qcert_spectrum(const qcert_spec* spec, int weighted, unsigned top, qcert_report** out) {
  if (!spec) return null_arg("spec");
  return make_report(out, [&] {
    qcert::SpectrumOptions opts;
    opts.weighted = weighted != 0;
    opts.top = top;
    return qcert::run_spectrum(spec->spec, opts);
  });
}

qcert_status qcert_ergodic(const qcert_spec* spec, unsigned n_max, qcert_report** out) {
  if (!spec) return null_arg("spec");
  return make_report(out, [&] { return qcert::run_ergodic(spec->spec, n_max); });
}

qcert_status qcert_conze_raugi(double lambda_re, double lambda_im, unsigned terms, unsigned grid,
                               int u_kind, double amplitude, qcert_report** out) {
  return make_report(out, [&] {
    qcert::require(u_kind == 0 || u_kind == 1, qcert::ErrorCode::InvalidArgument,
                   "u_kind must be 0 or 1");
    return qcert::run_conze_raugi({lambda_re, lambda_im}, terms, grid,
                                  u_kind == 0 ? qcert::UnitKind::Half : qcert::UnitKind::Sine,
                                  amplitude);
  });
}

qcert_verdict qcert_report_verdict(const qcert_report* report) {
  if (!report) return QCERT_FAILED;
  return static_cast<qcert_verdict>(static_cast<int>(report->report.verdict));
}

const char* qcert_report_json(const qcert_report* report) {
  return report ? report->report.json.c_str() : "";
}

const char* qcert_report_summary(const qcert_report* report) {
  return report ? report->report.summary.c_str() : "";
}

qcert_status qcert_report_number(const qcert_report* report, const char* pointer, double* out) {
  if (!report) return null_arg("report");
  if (!pointer) return null_arg("pointer");
  if (!out) return null_arg("out");
  return guarded([&] {
    auto doc = nlohmann::json::parse(report->report.json);
    nlohmann::json::json_pointer ptr(pointer);
    qcert::require(doc.contains(ptr), qcert::ErrorCode::NotFound,
                   std::string("no value at ") + pointer);
    const auto& v = doc.at(ptr);
    qcert::require(v.is_number(), qcert::ErrorCode::InvalidArgument,
                   std::string("value at ") + pointer + " is not a number");
    *out = v.get<double>();
  });
}

void qcert_report_free(qcert_report* report) { delete report; }

void qcert_string_free(char* s) { std::free(s); }

}  // extern "C"
