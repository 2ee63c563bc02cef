#include <putput/metrics.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace putput;

namespace {

RowSet rows(const std::string& bits) {
  RowSet s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] == '1';
  return s;
}

}  // namespace

TEST(Score, HandCountedConfusion) {
  // predicted 1100110, target 1010100: tp 2, fp 2, fn 1, tn 2.
  const EvalReport r = score(rows("1100110"), rows("1010100"));
  EXPECT_EQ(r.tp, 2u);
  EXPECT_EQ(r.fp, 2u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_EQ(r.tn, 2u);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f1, 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(f1_score(rows("1100110"), rows("1010100")), 4.0 / 7.0);
}

TEST(Score, EmptySetConventions) {
  const EvalReport both = score(rows("000"), rows("000"));
  EXPECT_EQ(both.precision, 1.0);
  EXPECT_EQ(both.recall, 1.0);
  EXPECT_EQ(both.f1, 1.0);

  const EvalReport none_predicted = score(rows("000"), rows("010"));
  EXPECT_EQ(none_predicted.precision, 0.0);
  EXPECT_EQ(none_predicted.recall, 0.0);
  EXPECT_EQ(none_predicted.f1, 0.0);

  const EvalReport empty_target = score(rows("110"), rows("000"));
  EXPECT_EQ(empty_target.recall, 0.0);
  EXPECT_EQ(empty_target.f1, 0.0);
}

TEST(Score, PerfectPrediction) {
  EXPECT_EQ(f1_score(rows("0110"), rows("0110")), 1.0);
}

TEST(Report, FixedKeyOrder) {
  std::ostringstream os;
  write_report(os, score(rows("10"), rows("11")), "x_");
  EXPECT_EQ(os.str(),
            "x_tp: 1\nx_fp: 0\nx_fn: 1\nx_tn: 0\nx_precision: 1.000000\n"
            "x_recall: 0.500000\nx_f1: 0.666667\n");
}
