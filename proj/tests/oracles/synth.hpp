#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

struct SynthCohort {
  std::vector<double> times;
  std::vector<int> indicators;
  std::vector<double> risk_times;
};

// Right-censored survival sample with exponential or Weibull event times and
// uniform censoring, plus an evenly spaced risk-table grid. The censoring
// window scales with the event distribution so the censored fraction stays
// in a trial-like range across seeds.
inline SynthCohort synth_cohort(std::uint64_t seed, std::size_t n, bool weibull) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double scale = 10.0 + 8.0 * u01(rng);
  const double shape = weibull ? 1.2 + 0.6 * u01(rng) : 1.0;
  const double lo = scale * (0.35 + 0.25 * u01(rng));
  const double hi = lo + scale * (1.6 + 0.8 * u01(rng));
  SynthCohort out;
  for (std::size_t i = 0; i < n; ++i) {
    const double t_event = scale * std::pow(-std::log(1.0 - u01(rng)), 1.0 / shape);
    const double t_cens = lo + (hi - lo) * u01(rng);
    if (t_event <= t_cens) {
      out.times.push_back(t_event);
      out.indicators.push_back(1);
    } else {
      out.times.push_back(t_cens);
      out.indicators.push_back(0);
    }
  }
  double t_max = 0.0;
  for (double t : out.times)
    t_max = std::max(t_max, t);
  const int rows = 4 + static_cast<int>(seed % 5);
  for (int r = 0; r < rows; ++r)
    out.risk_times.push_back(t_max * static_cast<double>(r) / static_cast<double>(rows));
  return out;
}

} // namespace oracle
