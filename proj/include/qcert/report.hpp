#pragma once

#include <optional>
#include <string>

#include "qcert/drift_split.hpp"
#include "qcert/spec_file.hpp"

namespace qcert {

enum class Verdict { Verified = 0, Failed = 1, Inconclusive = 3 };

const char* to_string(Verdict v);

/// A finished analysis: canonical JSON plus a short human rendering.
struct Report {
  Verdict verdict = Verdict::Verified;
  std::string json;
  std::string summary;
};

struct AnalyzeOptions {
  std::optional<Index> window;  // shrink a windowed kernel to 0..window
  unsigned n_power = 8;
  bool weighted = true;
};

struct CertifyOptions {
  std::optional<Index> window;
  RbOptions rb;
};

struct SpectrumOptions {
  bool weighted = true;
  unsigned top = 0;  // 0 keeps every eigenvalue
};

Report run_analyze(const KernelSpec& spec, const AnalyzeOptions& opts = {});
Report run_certify(const KernelSpec& spec, const CertifyOptions& opts = {});
Report run_spectrum(const KernelSpec& spec, const SpectrumOptions& opts = {});
Report run_ergodic(const KernelSpec& spec, unsigned n_max = 200);

enum class UnitKind { Half, Sine };

Report run_conze_raugi(Complex lambda, unsigned terms, unsigned grid, UnitKind u,
                       double amplitude = 0.1);

}  // namespace qcert
