/* Compiled as C to keep the public header C-clean. */
#include <stdio.h>
#include <string.h>

#include "qcert/qcert.h"

int main(void) {
  qcert_spec* spec = NULL;
  qcert_report* report = NULL;
  double hi = 0.0;
  int rc = 1;
  if (qcert_example_walk(0.3, 120, &spec) != QCERT_OK) return 1;
  if (qcert_certify(spec, 0, &report) == QCERT_OK &&
      qcert_report_verdict(report) == QCERT_VERIFIED &&
      qcert_report_number(report, "/re_upper/hi", &hi) == QCERT_OK && hi < 0.9166)
    rc = 0;
  printf("re_upper.hi = %.12f\n", hi);
  qcert_report_free(report);
  qcert_spec_free(spec);
  return rc;
}
