#ifndef QCERT_QCERT_H
#define QCERT_QCERT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QCERT_API __declspec(dllexport)
#else
#define QCERT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qcert_status {
  QCERT_OK = 0,
  QCERT_E_INVALID_ARGUMENT,
  QCERT_E_SPACE_MISMATCH,
  QCERT_E_MISSING_TAIL_BOUND,
  QCERT_E_INCOMPATIBLE_TAIL,
  QCERT_E_NOT_MARKOV,
  QCERT_E_DOEBLIN_VIOLATED,
  QCERT_E_NOT_DOMINATED,
  QCERT_E_NOT_UNIFORMLY_INTEGRABLE,
  QCERT_E_DIVERGENT,
  QCERT_E_INCONCLUSIVE,
  QCERT_E_SIZE_LIMIT,
  QCERT_E_NO_CONVERGENCE,
  QCERT_E_NOT_FOUND,
  QCERT_E_ENVELOPE_VIOLATED,
  QCERT_E_NOT_A_KERNEL,
  QCERT_E_PARSE,
  QCERT_E_NULL_POINTER,
  QCERT_E_INTERNAL
} qcert_status;

/* Outcome of a finished analysis; values match the CLI exit codes. */
typedef enum qcert_verdict {
  QCERT_VERIFIED = 0,
  QCERT_FAILED = 1,
  QCERT_INCONCLUSIVE = 3
} qcert_verdict;

typedef struct qcert_spec qcert_spec;
typedef struct qcert_report qcert_report;

/* Message of the last failing call on this thread ("" if none). */
QCERT_API const char* qcert_last_error(void);
QCERT_API const char* qcert_status_name(qcert_status status);
QCERT_API const char* qcert_version(void);

/* Kernel spec files. */
QCERT_API qcert_status qcert_spec_parse(const char* text, size_t len, qcert_spec** out);
QCERT_API qcert_status qcert_spec_load(const char* path, qcert_spec** out);
/* Row-major dense finite kernel; markov != 0 requests the Markov check. */
QCERT_API qcert_status qcert_spec_from_dense(size_t n, const double* entries, int markov,
                                             qcert_spec** out);
/* Canonical text; release with qcert_string_free. */
QCERT_API qcert_status qcert_spec_emit(const qcert_spec* spec, char** out);
QCERT_API qcert_status qcert_spec_size(const qcert_spec* spec, size_t* out);
QCERT_API void qcert_spec_free(qcert_spec* spec);

/* Built-in examples. */
QCERT_API qcert_status qcert_example_walk(double p, size_t x_max, qcert_spec** out);
QCERT_API qcert_status qcert_example_chain(size_t n, uint64_t seed, qcert_spec** out);

/* Analyses. window = 0 keeps the spec's window. */
QCERT_API qcert_status qcert_analyze(const qcert_spec* spec, size_t window, int weighted,
                                     qcert_report** out);
QCERT_API qcert_status qcert_certify(const qcert_spec* spec, size_t window, qcert_report** out);
QCERT_API qcert_status qcert_spectrum(const qcert_spec* spec, int weighted, unsigned top,
                                      qcert_report** out);
QCERT_API qcert_status qcert_ergodic(const qcert_spec* spec, unsigned n_max, qcert_report** out);
/* u_kind 0: u = 1/2; 1: u(x) = 1/2 + amplitude sin(2 pi x). */
QCERT_API qcert_status qcert_conze_raugi(double lambda_re, double lambda_im, unsigned terms,
                                         unsigned grid, int u_kind, double amplitude,
                                         qcert_report** out);

/* Report accessors. Borrowed strings live as long as the report. */
QCERT_API qcert_verdict qcert_report_verdict(const qcert_report* report);
QCERT_API const char* qcert_report_json(const qcert_report* report);
QCERT_API const char* qcert_report_summary(const qcert_report* report);
/* Number at a JSON pointer such as "/re_upper/hi". */
QCERT_API qcert_status qcert_report_number(const qcert_report* report, const char* pointer,
                                           double* out);
QCERT_API void qcert_report_free(qcert_report* report);

QCERT_API void qcert_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
