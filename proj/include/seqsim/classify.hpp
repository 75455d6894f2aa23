#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "ipd.hpp"

namespace seqsim {

// Event codes: 0 censored, 1 progression, 2 death without prior progression.
struct CompetingRisksData {
  std::vector<double> times;
  std::vector<int> codes;
  double epsilon = 0.0;

  std::size_t n_subjects() const { return times.size(); }
  long count(int code) const {
    long n = 0;
    for (int c : codes)
      n += c == code;
    return n;
  }
};

// Split the progression-curve endpoints into true progressions and deaths by
// lining them up against the death times recovered from the survival curve.
// Deaths are taken in ascending order; each claims the earliest unconverted
// observation whose time lies within epsilon and whose indicator matches the
// convention the published curve used for deaths (event or censoring).
inline CompetingRisksData classify_events(const ReconstructedIPD& pfs, const ReconstructedIPD& os,
                                          double epsilon, DeathHandling handling) {
  if (!(epsilon >= 0.0))
    throw ParameterError("classify_events: epsilon must be >= 0");
  const int match = handling == DeathHandling::event ? 1 : 0;
  CompetingRisksData out;
  out.times = pfs.times;
  out.codes = pfs.indicators;
  out.epsilon = epsilon;
  std::vector<double> deaths;
  for (std::size_t j = 0; j < os.times.size(); ++j)
    if (os.indicators[j] == 1)
      deaths.push_back(os.times[j]);
  std::sort(deaths.begin(), deaths.end());
  for (double td : deaths) {
    std::size_t best = out.times.size();
    for (std::size_t j = 0; j < out.times.size(); ++j) {
      if (out.codes[j] != match)
        continue;
      if (out.times[j] < td - epsilon || out.times[j] > td + epsilon)
        continue;
      if (best == out.times.size() || out.times[j] < out.times[best])
        best = j;
    }
    if (best < out.times.size())
      out.codes[best] = 2;
  }
  return out;
}

} // namespace seqsim
