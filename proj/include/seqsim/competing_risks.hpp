#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "classify.hpp"
#include "errors.hpp"

namespace seqsim {

// Aalen-Johansen cumulative incidence for two competing causes, evaluated on
// the grid of observed event times with a leading zero.
struct CifPair {
  std::vector<double> grid;
  std::vector<double> f_prog;
  std::vector<double> f_death;
  std::vector<double> s_all;

  double at(const std::vector<double>& v, double t) const {
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    if (it == grid.begin())
      return v.front();
    return v[static_cast<std::size_t>(it - grid.begin()) - 1];
  }
  double prog_at(double t) const { return at(f_prog, t); }
  double death_at(double t) const { return at(f_death, t); }
  double surv_at(double t) const { return at(s_all, t); }
};

inline CifPair estimate_cif(const CompetingRisksData& data) {
  if (data.times.empty())
    throw ParameterError("estimate_cif: no observations");
  if (data.times.size() != data.codes.size())
    throw ParameterError("estimate_cif: times and codes differ in length");
  for (int c : data.codes)
    if (c < 0 || c > 2)
      throw ParameterError("estimate_cif: codes must be 0, 1, or 2");
  std::vector<std::size_t> order(data.times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.times[a] < data.times[b]; });
  CifPair cif;
  cif.grid.push_back(0.0);
  cif.f_prog.push_back(0.0);
  cif.f_death.push_back(0.0);
  cif.s_all.push_back(1.0);
  double surv = 1.0, fp = 0.0, fd = 0.0;
  long at_risk = static_cast<long>(order.size());
  std::size_t i = 0;
  while (i < order.size()) {
    double t = data.times[order[i]];
    long d1 = 0, d2 = 0, removed = 0;
    while (i < order.size() && data.times[order[i]] == t) {
      d1 += data.codes[order[i]] == 1;
      d2 += data.codes[order[i]] == 2;
      ++removed;
      ++i;
    }
    if (d1 + d2 > 0) {
      double n = static_cast<double>(at_risk);
      fp += surv * (static_cast<double>(d1) / n);
      fd += surv * (static_cast<double>(d2) / n);
      surv *= static_cast<double>(at_risk - d1 - d2) / n;
      if (t == 0.0) {
        cif.f_prog.back() = fp;
        cif.f_death.back() = fd;
        cif.s_all.back() = surv;
      } else {
        cif.grid.push_back(t);
        cif.f_prog.push_back(fp);
        cif.f_death.push_back(fd);
        cif.s_all.push_back(surv);
      }
    }
    at_risk -= removed;
  }
  return cif;
}

constexpr double days_per_month = 30.4375;

// Per-cycle cause-specific transition probabilities on the model's discrete
// clock. Cycles whose right boundary falls beyond the observed grid reuse a
// tail rate (mean of the last few fully observed cycles); cycles where the
// combined probability overflows 1 are rescaled proportionally, with a note.
struct TransitionTable {
  std::vector<double> h_prog;
  std::vector<double> h_death;
  std::vector<std::string> warnings;

  std::size_t n_cycles() const { return h_prog.size(); }
};

inline TransitionTable discrete_hazards(const CifPair& cif, double cycle_length_days,
                                        int horizon_cycles) {
  if (cycle_length_days <= 0)
    throw ParameterError("discrete_hazards: cycle length must be positive");
  if (horizon_cycles <= 0)
    throw ParameterError("discrete_hazards: horizon must be positive");
  const double mpc = cycle_length_days / days_per_month;
  const double t_max = cif.grid.back();
  TransitionTable tab;
  tab.h_prog.assign(static_cast<std::size_t>(horizon_cycles), 0.0);
  tab.h_death.assign(static_cast<std::size_t>(horizon_cycles), 0.0);
  int observed = 0;
  for (int c = 0; c < horizon_cycles; ++c) {
    double t0 = c * mpc, t1 = (c + 1) * mpc;
    if (t1 > t_max)
      break;
    double s0 = cif.surv_at(t0);
    if (s0 <= 0.0) {
      observed = c + 1;
      continue;
    }
    tab.h_prog[c] = std::clamp((cif.prog_at(t1) - cif.prog_at(t0)) / s0, 0.0, 1.0);
    tab.h_death[c] = std::clamp((cif.death_at(t1) - cif.death_at(t0)) / s0, 0.0, 1.0);
    observed = c + 1;
  }
  if (observed < horizon_cycles) {
    int window = std::min(observed, 4);
    double tp = 0, td = 0;
    for (int c = observed - window; c < observed; ++c) {
      tp += tab.h_prog[c];
      td += tab.h_death[c];
    }
    if (window > 0) {
      tp /= window;
      td /= window;
    }
    if (tp == 0.0 && td == 0.0) {
      for (int c = observed - 1; c >= 0; --c)
        if (tab.h_prog[c] + tab.h_death[c] > 0) {
          tp = tab.h_prog[c];
          td = tab.h_death[c];
          break;
        }
    }
    for (int c = observed; c < horizon_cycles; ++c) {
      tab.h_prog[c] = tp;
      tab.h_death[c] = td;
    }
    tab.warnings.push_back("cycles " + std::to_string(observed) + ".." +
                           std::to_string(horizon_cycles - 1) + " extrapolated from tail rates");
  }
  for (int c = 0; c < horizon_cycles; ++c) {
    double sum = tab.h_prog[c] + tab.h_death[c];
    if (sum > 1.0) {
      tab.h_prog[c] /= sum;
      tab.h_death[c] /= sum;
      tab.warnings.push_back("cycle " + std::to_string(c) +
                             ": combined probability exceeded 1, rescaled");
    }
  }
  return tab;
}

} // namespace seqsim
