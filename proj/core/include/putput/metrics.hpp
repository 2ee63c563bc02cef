#pragma once

#include <putput/bits.hpp>

#include <cstddef>
#include <iosfwd>
#include <string>

namespace putput {

// Confusion counts of a predicted row set against a target row set.
//
// precision = TP/(TP+FP), recall = TP/(TP+FN), f1 = 2TP/(2TP+FP+FN). When a
// denominator is zero: both sets empty scores 1 on all three; otherwise the
// undefined ratio is 0.
struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Both sets must be sized to the universe (database row count).
EvalReport score(const RowSet& predicted, const RowSet& target);

// f1 only, without building the full report.
double f1_score(const RowSet& predicted, const RowSet& target);

// `key: value` lines in fixed order (tp, fp, fn, tn, precision, recall, f1).
// Ratios are printed with 6 decimals.
void write_report(std::ostream& os, const EvalReport& r, const std::string& prefix = "");
std::string to_string(const EvalReport& r);

}  // namespace putput
