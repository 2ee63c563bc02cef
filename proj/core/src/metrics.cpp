#include <putput/errors.hpp>
#include <putput/metrics.hpp>

#include <cstdio>
#include <ostream>
#include <sstream>

namespace putput {

EvalReport score(const RowSet& predicted, const RowSet& target) {
  if (predicted.size() != target.size())
    throw InputError("predicted and target sets belong to different universes");
  EvalReport r;
  r.tp = (predicted & target).count();
  r.fp = predicted.count() - r.tp;
  r.fn = target.count() - r.tp;
  r.tn = predicted.size() - r.tp - r.fp - r.fn;
  const bool both_empty = r.tp + r.fp + r.fn == 0;
  r.precision = r.tp + r.fp ? double(r.tp) / double(r.tp + r.fp) : (both_empty ? 1.0 : 0.0);
  r.recall = r.tp + r.fn ? double(r.tp) / double(r.tp + r.fn) : (both_empty ? 1.0 : 0.0);
  r.f1 = both_empty ? 1.0 : 2.0 * double(r.tp) / double(2 * r.tp + r.fp + r.fn);
  return r;
}

double f1_score(const RowSet& predicted, const RowSet& target) {
  return score(predicted, target).f1;
}

void write_report(std::ostream& os, const EvalReport& r, const std::string& prefix) {
  char buf[32];
  auto ratio = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
  };
  os << prefix << "tp: " << r.tp << '\n'
     << prefix << "fp: " << r.fp << '\n'
     << prefix << "fn: " << r.fn << '\n'
     << prefix << "tn: " << r.tn << '\n';
  os << prefix << "precision: " << ratio(r.precision) << '\n';
  os << prefix << "recall: " << ratio(r.recall) << '\n';
  os << prefix << "f1: " << ratio(r.f1) << '\n';
}

std::string to_string(const EvalReport& r) {
  std::ostringstream os;
  write_report(os, r);
  return os.str();
}

}  // namespace putput
