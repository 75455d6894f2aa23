#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

// Chain of live states 0..S-1 plus an implicit absorbing death state.
// State s carries stationary per-cycle hazards; a progression draw moves a
// survivor from s to s+1, except a branch fraction that jumps straight to the
// last live state. Death is resolved before progression within a cycle, and a
// transition lands at the start of the next cycle, matching the engine.
struct DpOracleSpec {
  std::vector<double> h_death;
  std::vector<double> h_prog;  // ignored for the last live state
  std::vector<double> branch;  // P(progression from s lands in the last live state)
  int horizon = 0;
};

// Exact occupancy recursion over (state, entry cycle). Entry cycle is
// redundant under stationary hazards but keeps the recursion in the same
// shape as the semi-Markov process it checks. Returns S(c) for c = 0..horizon
// where S(c) is the probability of being alive at the start of cycle c.
inline std::vector<double> exact_semi_markov_os(const DpOracleSpec& spec) {
  const std::size_t S = spec.h_death.size();
  if (S == 0 || spec.h_prog.size() != S || spec.branch.size() != S)
    throw std::invalid_argument("exact_semi_markov_os: state vectors must share a size");
  if (spec.horizon < 0)
    throw std::invalid_argument("exact_semi_markov_os: negative horizon");
  for (std::size_t s = 0; s < S; ++s) {
    if (!(spec.h_death[s] >= 0.0 && spec.h_death[s] <= 1.0) ||
        !(spec.h_prog[s] >= 0.0 && spec.h_prog[s] <= 1.0) ||
        !(spec.branch[s] >= 0.0 && spec.branch[s] <= 1.0))
      throw std::invalid_argument("exact_semi_markov_os: probabilities outside [0,1]");
  }
  const std::size_t C = static_cast<std::size_t>(spec.horizon);
  std::vector<std::vector<double>> occ(S, std::vector<double>(C + 2, 0.0));
  occ[0][0] = 1.0;
  double dead = 0.0;
  std::vector<double> surv;
  surv.push_back(1.0);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<std::vector<double>> next(S, std::vector<double>(C + 2, 0.0));
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t e = 0; e <= c; ++e) {
        const double p = occ[s][e];
        if (p == 0.0)
          continue;
        const double died = p * spec.h_death[s];
        dead += died;
        const double rest = p - died;
        if (s + 1 < S) {
          const double moved = rest * spec.h_prog[s];
          const double direct = moved * spec.branch[s];
          next[S - 1][c + 1] += direct;
          next[s + 1][c + 1] += moved - direct;
          next[s][e] += rest - moved;
        } else {
          next[s][e] += rest;
        }
      }
    }
    occ = std::move(next);
    surv.push_back(1.0 - dead);
  }
  return surv;
}

} // namespace oracle
