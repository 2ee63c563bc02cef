#include <putput/putput.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace putput {

std::string_view to_string(ElbowScale s) noexcept {
  return s == ElbowScale::Log ? "log" : "linear";
}

std::vector<ProfilePoint> elbow_profile(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<ProfilePoint> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.push_back({sorted[i], sorted.size() - i - 1});
  }
  return out;
}

void write_profile(std::ostream& os, std::span<const ProfilePoint> profile) {
  const auto flags = os.flags();
  const auto precision = os.precision(17);
  os << "t above\n";
  for (const auto& p : profile) os << p.t << ' ' << p.above << '\n';
  os.precision(precision);
  os.flags(flags);
}

double elbow_threshold(std::span<const double> values, double epsilon) {
  if (values.empty()) throw InputError("elbow threshold needs at least one value");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InputError("epsilon must be a positive finite number");
  for (double v : values)
    if (std::isnan(v)) throw InputError("likelihood values must not be NaN");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto f = [&](double x) -> double {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(sorted.end() - it);
  };

  auto profile = elbow_profile(values);
  // Highest candidate first; the top value has f = 0 and never qualifies.
  for (std::size_t i = profile.size(); i-- > 0;) {
    const double t = profile[i].t;
    if (profile[i].above == 0) continue;
    const double below = f(t - epsilon) - f(t);
    const double step = f(t) - f(t + epsilon);
    const double after = f(t + epsilon) - f(t + 2 * epsilon);
    if (below == 0.0 || !(std::max(step, 1.0) / below < 0.25)) continue;
    if (step != 0.0 && !(after / step > 0.25)) continue;
    return profile[i + 1].t;
  }
  const std::string what = "no likelihood elbow found (" +
                           std::to_string(profile.size()) + " distinct values)";
  throw ElbowError(what, std::move(profile));
}

Elbow find_elbow(const ProbCircuit& pc, const Database& db, double epsilon,
                 ElbowScale scale) {
  auto values = log_likelihoods(pc, db);
  if (scale == ElbowScale::Linear)
    for (double& v : values) v = std::exp(v);
  Elbow out;
  out.scale = scale;
  out.threshold = elbow_threshold(values, epsilon);
  for (std::size_t r = 0; r < values.size(); ++r)
    if (values[r] >= out.threshold) out.target.push_back(r);
  return out;
}

}  // namespace putput
