#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

// Reference classifier built by literal candidate-set construction: for each
// published death time, enumerate every unconverted progression-curve
// observation whose indicator matches the curve's death convention and whose
// time falls inside the epsilon window, then convert the earliest of them.
// Deliberately shares nothing with the production implementation.
inline std::vector<int> brute_force_classify(const std::vector<double>& pfs_times,
                                             const std::vector<int>& pfs_indicators,
                                             const std::vector<double>& os_times,
                                             const std::vector<int>& os_indicators,
                                             double epsilon, bool death_is_event) {
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("brute_force_classify: epsilon must be >= 0");
  if (pfs_times.size() != pfs_indicators.size() || os_times.size() != os_indicators.size())
    throw std::invalid_argument("brute_force_classify: ragged inputs");
  const int match = death_is_event ? 1 : 0;
  std::vector<int> codes = pfs_indicators;
  std::vector<char> converted(pfs_times.size(), 0);
  std::vector<double> deaths;
  for (std::size_t j = 0; j < os_times.size(); ++j)
    if (os_indicators[j] == 1)
      deaths.push_back(os_times[j]);
  std::sort(deaths.begin(), deaths.end());
  for (double td : deaths) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pfs_times.size(); ++i) {
      if (converted[i] || pfs_indicators[i] != match)
        continue;
      if (pfs_times[i] >= td - epsilon && pfs_times[i] <= td + epsilon)
        candidates.push_back(i);
    }
    if (candidates.empty())
      continue;
    std::size_t best = candidates.front();
    for (std::size_t i : candidates)
      if (pfs_times[i] < pfs_times[best])
        best = i;
    converted[best] = 1;
    codes[best] = 2;
  }
  return codes;
}

} // namespace oracle
