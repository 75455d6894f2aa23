#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace seqsim {

// Right-continuous step function: value values[i] holds on [times[i], times[i+1]).
// Queries left of the first knot return the first value.
struct StepFunction {
  std::vector<double> times;
  std::vector<double> values;

  double operator()(double t) const {
    if (times.empty())
      throw ParameterError("step function: no knots");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin())
      return values.front();
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  std::size_t size() const { return times.size(); }
};

} // namespace seqsim
