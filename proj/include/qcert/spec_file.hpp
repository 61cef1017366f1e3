#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qcert/decompose.hpp"
#include "qcert/drift_split.hpp"
#include "qcert/kernel.hpp"

namespace qcert {

struct DriftBlock {
  std::vector<Index> c;
  double r1 = 0.0;
  double eta = 0.0;
};

struct MinorizationBlock {
  std::vector<Index> c;
  double b = 0.0;
  Measure nu;
  /// Empty means α ≡ 1 on the support of nu.
  std::vector<DensityKernel::Row> alpha;
};

struct MultiplierBlock {
  std::vector<double> xi;
  double t = 0.0;
};

/// In-memory form of a kernel spec file.
struct KernelSpec {
  Kernel kernel;
  std::optional<WeightFn> weight;
  std::optional<double> weight_geometric;  // kept so that emit reproduces the input form
  std::optional<DoeblinCertificate> doeblin;
  std::optional<DriftBlock> drift;
  std::optional<MinorizationBlock> minorization;
  std::optional<MultiplierBlock> multiplier;

  DriftCertificate drift_certificate() const;
  MinorizationCertificate minorization_certificate() const;
};

/// Throws ParseError; messages carry "line L, column C" for syntax errors and
/// a JSON pointer ("/rows/3/w") for field errors.
KernelSpec parse_spec(const std::string& text);
KernelSpec load_spec(const std::string& path);

/// Canonical text: fixed key order, two-space indent, trailing newline.
std::string emit_spec(const KernelSpec& spec);

KernelSpec spec_from_walk(const struct WalkExample& walk);

}  // namespace qcert
