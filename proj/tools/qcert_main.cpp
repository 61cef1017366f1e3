#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qcert/qcert.h"

namespace {

constexpr int kExitInput = 2;

bool use_color() {
  const char* nc = std::getenv("NO_COLOR");
  if (nc && *nc) return false;
  return isatty(fileno(stdout)) != 0;
}

// Failures inside an analysis map onto the report exit codes; anything else
// means the input could not be processed.
int exit_for(qcert_status s) {
  switch (s) {
    case QCERT_E_DOEBLIN_VIOLATED:
    case QCERT_E_ENVELOPE_VIOLATED:
    case QCERT_E_NOT_DOMINATED:
    case QCERT_E_NOT_UNIFORMLY_INTEGRABLE:
    case QCERT_E_NOT_A_KERNEL:
    case QCERT_E_DIVERGENT:
      return 1;
    case QCERT_E_INCONCLUSIVE:
    case QCERT_E_NO_CONVERGENCE:
      return 3;
    default:
      return kExitInput;
  }
}

int report_error(qcert_status s) {
  std::cerr << "qcert: " << qcert_last_error() << "\n";
  return exit_for(s);
}

bool write_file(const std::string& path, const char* text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "qcert: cannot write " << path << "\n";
    return false;
  }
  out << text;
  return static_cast<bool>(out);
}

int finish(qcert_status s, qcert_report* report, const std::string& out_path) {
  if (s != QCERT_OK) return report_error(s);
  std::string summary = qcert_report_summary(report);
  qcert_verdict v = qcert_report_verdict(report);
  if (use_color()) {
    const char* color = v == QCERT_VERIFIED ? "\033[32m" : v == QCERT_FAILED ? "\033[31m" : "\033[33m";
    auto pos = summary.rfind("verdict: ");
    if (pos != std::string::npos) {
      summary.insert(summary.size() - 1, "\033[0m");
      summary.insert(pos + 9, color);
    }
  }
  std::cout << summary;
  int code = static_cast<int>(v);
  if (!out_path.empty() && !write_file(out_path, qcert_report_json(report))) code = kExitInput;
  qcert_report_free(report);
  return code;
}

int emit_spec(qcert_status s, qcert_spec* spec, const std::string& out_path) {
  if (s != QCERT_OK) return report_error(s);
  char* text = nullptr;
  s = qcert_spec_emit(spec, &text);
  qcert_spec_free(spec);
  if (s != QCERT_OK) return report_error(s);
  int code = 0;
  if (out_path.empty()) std::cout << text;
  else if (!write_file(out_path, text)) code = kExitInput;
  qcert_string_free(text);
  return code;
}

qcert_status load(const std::string& path, qcert_spec** spec) {
  return qcert_spec_load(path.c_str(), spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified spectral bounds for Markov and positive kernels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qcert_version()));

  std::string kernel_path, out_path;
  std::size_t window = 0;
  bool unweighted = false;
  unsigned top = 0, n_max = 200;

  auto* analyze = app.add_subcommand("analyze", "essential spectral radius bounds for a kernel file");
  analyze->add_option("--kernel", kernel_path, "kernel spec file")->required();
  analyze->add_option("--window", window, "shrink a windowed kernel to 0..N");
  analyze->add_flag("--unweighted", unweighted, "ignore the file's weight");
  analyze->add_option("--out", out_path, "write the JSON report here");

  auto* certify = app.add_subcommand("certify", "drift/minorization pipeline: r_b and the r_e^w bound");
  certify->add_option("--kernel", kernel_path, "kernel spec file with certificates")->required();
  certify->add_option("--window", window, "shrink a windowed kernel to 0..N");
  certify->add_option("--out", out_path, "write the JSON report here");

  auto* spectrum = app.add_subcommand("spectrum", "dense eigenvalue dump");
  spectrum->add_option("--kernel", kernel_path, "kernel spec file")->required();
  spectrum->add_flag("--unweighted", unweighted, "skip the weight conjugation");
  spectrum->add_option("--top", top, "keep only the largest N eigenvalues");
  spectrum->add_option("--out", out_path, "write the JSON report here");

  auto* ergodic = app.add_subcommand("ergodic", "stationary law, period and decay envelope");
  ergodic->add_option("--kernel", kernel_path, "kernel spec file")->required();
  ergodic->add_option("--n-max", n_max, "largest power checked")->check(CLI::Range(2u, 100000u));
  ergodic->add_option("--out", out_path, "write the JSON report here");

  auto* example = app.add_subcommand("example", "built-in examples");
  example->require_subcommand(1);

  double lambda = 0.4, lambda_im = 0.0, amplitude = 0.1;
  unsigned terms = 48, grid = 1024;
  std::string u_kind = "half";
  auto* cr = example->add_subcommand("conze-raugi", "eigenfunction residual of the doubling kernel");
  cr->add_option("--lambda", lambda, "real part of lambda");
  cr->add_option("--lambda-im", lambda_im, "imaginary part of lambda");
  cr->add_option("--terms", terms, "series terms N");
  cr->add_option("--grid", grid, "grid points");
  cr->add_option("--u", u_kind, "half | sine")->check(CLI::IsMember({"half", "sine"}));
  cr->add_option("--amplitude", amplitude, "amplitude of the sine perturbation");
  cr->add_option("--out", out_path, "write the JSON report here");

  double p = 0.3;
  std::size_t x_max = 300;
  auto* walk = example->add_subcommand("walk", "reflected walk spec with its canonical certificates");
  walk->add_option("--p", p, "right-step probability, 0 < p < 1/2");
  walk->add_option("--window", x_max, "largest window state");
  walk->add_option("--out", out_path, "write the spec here instead of stdout");

  std::size_t size = 30;
  std::uint64_t seed = 1;
  auto* chain = example->add_subcommand("chain", "seeded random aperiodic chain spec");
  chain->add_option("--size", size, "number of states")->check(CLI::Range(std::size_t{2}, std::size_t{1500}));
  chain->add_option("--seed", seed, "generator seed");
  chain->add_option("--out", out_path, "write the spec here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  qcert_spec* spec = nullptr;
  qcert_report* report = nullptr;
  qcert_status s = QCERT_OK;

  if (analyze->parsed() || certify->parsed() || spectrum->parsed() || ergodic->parsed()) {
    s = load(kernel_path, &spec);
    if (s != QCERT_OK) return report_error(s);
    if (analyze->parsed()) {
      s = qcert_analyze(spec, window, unweighted ? 0 : 1, &report);
    } else if (certify->parsed()) {
      s = qcert_certify(spec, window, &report);
    } else if (spectrum->parsed()) {
      s = qcert_spectrum(spec, unweighted ? 0 : 1, top, &report);
    } else {
      s = qcert_ergodic(spec, n_max, &report);
    }
    qcert_spec_free(spec);
    return finish(s, report, out_path);
  }

  if (cr->parsed()) {
    s = qcert_conze_raugi(lambda, lambda_im, terms, grid, u_kind == "half" ? 0 : 1, amplitude, &report);
    return finish(s, report, out_path);
  }
  if (walk->parsed()) {
    s = qcert_example_walk(p, x_max, &spec);
    return emit_spec(s, spec, out_path);
  }
  if (chain->parsed()) {
    s = qcert_example_chain(size, seed, &spec);
    return emit_spec(s, spec, out_path);
  }
  return kExitInput;
}
