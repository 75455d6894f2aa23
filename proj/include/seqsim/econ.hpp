#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "microsim.hpp"

namespace seqsim {

enum class Pricing { generic = 0, branded = 1, on_patent = 2 };

constexpr std::array<Pricing, 3> all_pricings{Pricing::generic, Pricing::branded,
                                              Pricing::on_patent};

inline Pricing pricing_from_string(const std::string& s) {
  if (s == "generic")
    return Pricing::generic;
  if (s == "branded")
    return Pricing::branded;
  if (s == "on_patent")
    return Pricing::on_patent;
  throw ParseError("pricing must be 'generic', 'branded', or 'on_patent', got '" + s + "'");
}

inline std::string to_string(Pricing p) {
  switch (p) {
  case Pricing::generic:
    return "generic";
  case Pricing::branded:
    return "branded";
  default:
    return "on_patent";
  }
}

// Per-cycle costs in dollars, utilities on [0,1]. Adverse-event costs are
// one-time charges in the cycle the event fires.
struct EconomicInputs {
  double aa_drug_generic = 296;
  double aa_drug_branded = 2396;
  double aa_drug_on_patent = 6560;
  double dct_drug = 2388;
  double dct_admin = 287;
  double office_labs = 39;
  double adt = 1153;
  double extensive_disease = 5477;
  double neutropenia_cost = 8143;
  double febrile_neutropenia_cost = 19675;

  double u_l1_aa = 0.83;
  double u_l1_dct = 0.78;
  double u_l2_aa = 0.725;
  double u_l2_dct = 0.675;
  double u_ed = 0.62;
  double u_post_l1_recovered = 0.83;
  double u_post_l2_recovered = 0.725;
  int post_dct_recovery_cycles = 9;
  double u_l1_fatigue = 0.78;
  double u_l2_fatigue = 0.675;
  double u_l1_febrile = 0.47;
  double u_l2_febrile = 0.365;

  double discount_rate = 0.03;
  double cycle_length_days = 21.0;
};

inline double aa_drug_cost(const EconomicInputs& in, Pricing p) {
  switch (p) {
  case Pricing::generic:
    return in.aa_drug_generic;
  case Pricing::branded:
    return in.aa_drug_branded;
  default:
    return in.aa_drug_on_patent;
  }
}

inline double discount_factor(int cycle, double annual_rate, double cycle_length_days) {
  if (cycle < 0)
    throw ParameterError("discount_factor: cycle must be >= 0");
  if (annual_rate <= -1.0)
    throw ParameterError("discount_factor: rate must exceed -1");
  double years = cycle * cycle_length_days / 365.25;
  return std::pow(1.0 + annual_rate, -years);
}

struct PatientEconomics {
  double cost = 0;
  double qaly = 0;
};

namespace detail {

// One pass over a trajectory. The abiraterone drug spend is kept as a
// discounted cycle weight so all three pricing eras can be priced from a
// single replay of the same trajectory.
struct EconCore {
  double common_cost = 0; // everything except the AA drug itself
  double aa_weight = 0;   // sum of discount factors over active-AA cycles
  double qaly = 0;
};

inline EconCore accumulate_core(const PatientTrajectory& tr, Strategy strategy,
                                const EconomicInputs& in) {
  const int C = static_cast<int>(tr.state_per_cycle.size());
  const Drug d1 = strategy == Strategy::dct_first ? Drug::dct : Drug::aa;
  const Drug d2 = strategy == Strategy::dct_first ? Drug::aa : Drug::dct;
  const double year_frac = in.cycle_length_days / 365.25;

  // per-cycle event flags
  std::vector<unsigned char> febrile(static_cast<std::size_t>(C), 0);
  int fatigue_l1_from = C + 1, fatigue_l2_from = C + 1;
  EconCore out;
  for (const auto& ev : tr.events) {
    if (ev.cycle < 0 || ev.cycle >= C)
      continue;
    double df = discount_factor(ev.cycle, in.discount_rate, in.cycle_length_days);
    switch (ev.kind) {
    case EventKind::neutropenia:
      out.common_cost += df * in.neutropenia_cost;
      break;
    case EventKind::febrile_neutropenia:
      out.common_cost += df * in.febrile_neutropenia_cost;
      febrile[static_cast<std::size_t>(ev.cycle)] = 1;
      break;
    case EventKind::fatigue:
      if (tr.state_per_cycle[static_cast<std::size_t>(ev.cycle)] == State::L1)
        fatigue_l1_from = ev.cycle;
      else
        fatigue_l2_from = ev.cycle;
      break;
    default:
      break;
    }
  }

  State prev = State::L1;
  int post_entry = 0;
  for (int c = 0; c < C; ++c) {
    State st = tr.state_per_cycle[static_cast<std::size_t>(c)];
    if (st != prev && (st == State::PostL1 || st == State::PostL2))
      post_entry = c;
    prev = st;
    if (st == State::Death)
      continue;
    double df = discount_factor(c, in.discount_rate, in.cycle_length_days);
    double cost = 0, util = 0;
    switch (st) {
    case State::L1:
      if (d1 == Drug::dct) {
        cost = in.dct_drug + in.dct_admin + in.office_labs + in.adt;
        util = febrile[static_cast<std::size_t>(c)] ? in.u_l1_febrile : in.u_l1_dct;
      } else {
        cost = in.office_labs + in.adt;
        out.aa_weight += df;
        util = c >= fatigue_l1_from ? in.u_l1_fatigue : in.u_l1_aa;
      }
      break;
    case State::L2:
      if (d2 == Drug::dct) {
        cost = in.dct_drug + in.dct_admin + in.office_labs + in.adt;
        util = febrile[static_cast<std::size_t>(c)] ? in.u_l2_febrile : in.u_l2_dct;
      } else {
        cost = in.office_labs + in.adt;
        out.aa_weight += df;
        util = c >= fatigue_l2_from ? in.u_l2_fatigue : in.u_l2_aa;
      }
      break;
    case State::PostL1:
      cost = in.office_labs + in.adt;
      if (d1 == Drug::dct) {
        int k = std::min(c - post_entry, in.post_dct_recovery_cycles);
        util = in.u_l1_dct + (in.u_post_l1_recovered - in.u_l1_dct) * k /
                                 in.post_dct_recovery_cycles;
      } else {
        util = in.u_l1_aa;
      }
      break;
    case State::PostL2:
      cost = in.office_labs + in.adt;
      if (d2 == Drug::dct) {
        int k = std::min(c - post_entry, in.post_dct_recovery_cycles);
        util = in.u_l2_dct + (in.u_post_l2_recovered - in.u_l2_dct) * k /
                                 in.post_dct_recovery_cycles;
      } else {
        util = in.u_l2_aa;
      }
      break;
    case State::ED:
      cost = in.extensive_disease;
      util = in.u_ed;
      break;
    default:
      break;
    }
    out.common_cost += df * cost;
    out.qaly += df * util * year_frac;
  }
  return out;
}

} // namespace detail

inline PatientEconomics accumulate(const PatientTrajectory& tr, Strategy strategy,
                                   const EconomicInputs& in, Pricing pricing) {
  auto core = detail::accumulate_core(tr, strategy, in);
  return {core.common_cost + aa_drug_cost(in, pricing) * core.aa_weight, core.qaly};
}

// Cohort means per pricing era from one simulation pass. The trajectories are
// identical across eras by construction; only the drug price differs.
struct CohortEconomics {
  std::array<double, 3> mean_cost{};
  double mean_qaly = 0;
  long n = 0;
};

inline CohortEconomics accumulate_cohort(const ModelSpec& spec, const DependenceParams& dep,
                                         const EconomicInputs& in, int threads = 1) {
  const auto rates = detail::CycleRates::from(spec.behavior);
  struct Block {
    double common = 0, weight = 0, qaly = 0;
  };
  double common = 0, weight = 0, qaly = 0;
  detail::run_blocks<Block>(
      spec.n_patients, threads,
      [&](long lo, long hi) {
        Block blk;
        PatientTrajectory tr;
        for (long p = lo; p < hi; ++p) {
          detail::simulate_patient_into(spec, dep, p, rates, tr);
          auto core = detail::accumulate_core(tr, spec.strategy, in);
          blk.common += core.common_cost;
          blk.weight += core.aa_weight;
          blk.qaly += core.qaly;
        }
        return blk;
      },
      [&](Block&& blk) {
        common += blk.common;
        weight += blk.weight;
        qaly += blk.qaly;
      });
  CohortEconomics out;
  out.n = spec.n_patients;
  const auto n = static_cast<double>(spec.n_patients);
  for (std::size_t i = 0; i < all_pricings.size(); ++i)
    out.mean_cost[i] = (common + aa_drug_cost(in, all_pricings[i]) * weight) / n;
  out.mean_qaly = qaly / n;
  return out;
}

// Incremental comparison of aa_first against dct_first. Dominance labels are
// assigned from the unrounded deltas; rounding is a display concern.
struct CeComparison {
  double cost_dct_first = 0, qaly_dct_first = 0;
  double cost_aa_first = 0, qaly_aa_first = 0;
  double delta_cost = 0, delta_qaly = 0;
  double icer = std::numeric_limits<double>::quiet_NaN();
  std::string label;
};

inline std::string icer_label(double delta_cost, double delta_qaly) {
  if (delta_qaly == 0.0) {
    if (delta_cost > 0.0)
      return "dominated_equal_effect";
    if (delta_cost < 0.0)
      return "dominant_equal_effect";
    return "equivalent";
  }
  if (delta_qaly > 0.0 && delta_cost < 0.0)
    return "dominant";
  if (delta_qaly < 0.0 && delta_cost > 0.0)
    return "dominated";
  return "icer";
}

inline CeComparison compare_strategies(double cost_dct, double qaly_dct, double cost_aa,
                                       double qaly_aa) {
  CeComparison cmp;
  cmp.cost_dct_first = cost_dct;
  cmp.qaly_dct_first = qaly_dct;
  cmp.cost_aa_first = cost_aa;
  cmp.qaly_aa_first = qaly_aa;
  cmp.delta_cost = cost_aa - cost_dct;
  cmp.delta_qaly = qaly_aa - qaly_dct;
  if (cmp.delta_qaly != 0.0)
    cmp.icer = cmp.delta_cost / cmp.delta_qaly;
  cmp.label = icer_label(cmp.delta_cost, cmp.delta_qaly);
  return cmp;
}

} // namespace seqsim
