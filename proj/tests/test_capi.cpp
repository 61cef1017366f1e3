#include <gtest/gtest.h>

#include <cstring>
#include <string>

#include "qcert/qcert.h"

namespace {

struct SpecGuard {
  qcert_spec* p = nullptr;
  ~SpecGuard() { qcert_spec_free(p); }
};

struct ReportGuard {
  qcert_report* p = nullptr;
  ~ReportGuard() { qcert_report_free(p); }
};

}  // namespace

TEST(CApi, StatusNamesMatchEnum) {
  EXPECT_STREQ(qcert_status_name(QCERT_OK), "OK");
  EXPECT_STREQ(qcert_status_name(QCERT_E_PARSE), "ParseError");
  EXPECT_STREQ(qcert_status_name(QCERT_E_DOEBLIN_VIOLATED), "DoeblinViolated");
  EXPECT_STREQ(qcert_status_name(QCERT_E_NULL_POINTER), "NullPointer");
  EXPECT_STREQ(qcert_version(), "0.1.0");
}

TEST(CApi, NullArgumentsAreRejected) {
  qcert_spec* spec = nullptr;
  EXPECT_EQ(qcert_spec_parse(nullptr, 0, &spec), QCERT_E_NULL_POINTER);
  EXPECT_EQ(qcert_spec_load("x", nullptr), QCERT_E_NULL_POINTER);
  EXPECT_EQ(qcert_analyze(nullptr, 0, 1, nullptr), QCERT_E_NULL_POINTER);
  EXPECT_NE(std::string(qcert_last_error()), "");
  qcert_spec_free(nullptr);
  qcert_report_free(nullptr);
}

TEST(CApi, WalkCertifyThroughHandles) {
  SpecGuard spec;
  ASSERT_EQ(qcert_example_walk(0.3, 300, &spec.p), QCERT_OK);
  size_t n = 0;
  ASSERT_EQ(qcert_spec_size(spec.p, &n), QCERT_OK);
  EXPECT_EQ(n, 301u);
  ReportGuard rep;
  ASSERT_EQ(qcert_certify(spec.p, 0, &rep.p), QCERT_OK) << qcert_last_error();
  EXPECT_EQ(qcert_report_verdict(rep.p), QCERT_VERIFIED);
  double hi = 0;
  ASSERT_EQ(qcert_report_number(rep.p, "/re_upper/hi", &hi), QCERT_OK);
  EXPECT_GE(hi, 0.916515);
  EXPECT_LE(hi, 0.916516);
  EXPECT_EQ(qcert_report_number(rep.p, "/no/such", &hi), QCERT_E_NOT_FOUND);
  EXPECT_NE(std::strstr(qcert_report_summary(rep.p), "verdict"), nullptr);
}

TEST(CApi, EmitParseRoundTrip) {
  SpecGuard a;
  ASSERT_EQ(qcert_example_chain(15, 3, &a.p), QCERT_OK);
  char* text = nullptr;
  ASSERT_EQ(qcert_spec_emit(a.p, &text), QCERT_OK);
  SpecGuard b;
  ASSERT_EQ(qcert_spec_parse(text, std::strlen(text), &b.p), QCERT_OK);
  char* again = nullptr;
  ASSERT_EQ(qcert_spec_emit(b.p, &again), QCERT_OK);
  EXPECT_STREQ(text, again);
  qcert_string_free(text);
  qcert_string_free(again);
}

TEST(CApi, ParseErrorsMapToStatus) {
  const char* bad = "{ \"space\": ";
  SpecGuard s;
  EXPECT_EQ(qcert_spec_parse(bad, std::strlen(bad), &s.p), QCERT_E_PARSE);
  EXPECT_EQ(s.p, nullptr);
  EXPECT_NE(std::string(qcert_last_error()).find("line 1"), std::string::npos);
}

TEST(CApi, DenseSpecAndErgodic) {
  const double m[4] = {0.9, 0.1, 0.2, 0.8};
  SpecGuard s;
  ASSERT_EQ(qcert_spec_from_dense(2, m, 1, &s.p), QCERT_OK);
  ReportGuard r;
  ASSERT_EQ(qcert_ergodic(s.p, 200, &r.p), QCERT_OK) << qcert_last_error();
  EXPECT_EQ(qcert_report_verdict(r.p), QCERT_VERIFIED);
  const double bad[4] = {0.9, 0.2, 0.2, 0.8};
  SpecGuard t;
  EXPECT_EQ(qcert_spec_from_dense(2, bad, 1, &t.p), QCERT_E_NOT_MARKOV);
}

TEST(CApi, ConzeRaugiKinds) {
  ReportGuard a, b;
  ASSERT_EQ(qcert_conze_raugi(0.4, 0.0, 48, 1024, 0, 0.0, &a.p), QCERT_OK);
  EXPECT_EQ(qcert_report_verdict(a.p), QCERT_VERIFIED);
  ASSERT_EQ(qcert_conze_raugi(0.4, 0.0, 48, 1024, 1, 0.1, &b.p), QCERT_OK);
  EXPECT_EQ(qcert_report_verdict(b.p), QCERT_FAILED);
  ReportGuard c;
  EXPECT_EQ(qcert_conze_raugi(0.4, 0.0, 48, 1024, 7, 0.1, &c.p), QCERT_E_INVALID_ARGUMENT);
}
