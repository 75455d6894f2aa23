#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "competing_risks.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace seqsim {

enum class State : std::uint8_t { L1 = 0, PostL1, L2, PostL2, ED, Death };
constexpr int n_states = 6;

enum class Strategy { dct_first, aa_first };
enum class Drug { dct, aa };

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "dct_first")
    return Strategy::dct_first;
  if (s == "aa_first")
    return Strategy::aa_first;
  throw ParseError("strategy must be 'dct_first' or 'aa_first', got '" + s + "'");
}

inline std::string to_string(Strategy s) {
  return s == Strategy::dct_first ? "dct_first" : "aa_first";
}

// Treatment-sequence dependence. theta is the hazard ratio applied to
// post-progression transitions for a patient who progressed at time zero;
// the effect decays linearly to 1 at progression cycle omega.
struct DependenceParams {
  double theta = 1.0;
  double omega = 1.0;

  DependenceParams() = default;
  DependenceParams(double th, double om) : theta(th), omega(om) {
    if (!std::isfinite(th) || th < 1.0)
      throw ParameterError("dependence: theta must be finite and >= 1");
    if (!std::isfinite(om) || om < 1.0)
      throw ParameterError("dependence: omega must be finite and >= 1");
  }
};

inline double g_hazard_ratio(double t1_cycles, const DependenceParams& p) {
  if (!(t1_cycles >= 0))
    throw ParameterError("g_hazard_ratio: progression time must be >= 0");
  if (t1_cycles >= p.omega)
    return 1.0;
  return p.theta - (p.theta - 1.0) / p.omega * t1_cycles;
}

// Apply a hazard ratio to a per-cycle probability on the survival scale.
inline double apply_hr(double prob, double hr) {
  if (!(prob >= 0.0 && prob <= 1.0))
    throw ParameterError("apply_hr: probability outside [0,1]");
  if (!(hr >= 0.0))
    throw ParameterError("apply_hr: hazard ratio must be >= 0");
  if (hr == 1.0)
    return prob;
  return 1.0 - std::pow(1.0 - prob, hr);
}

// Discontinuation and adverse-event inputs. Totals are cumulative
// incidences spread geometrically over their window of active-therapy
// cycles; the taxane first-line early-stop rate is per cycle and declines
// linearly over the planned course.
struct BehaviorParams {
  double dct_l1_early_disc_first = 0.043;
  double dct_l1_early_disc_last = 0.019;
  double dct_l2_early_disc = 0.016;
  double aa_disc_l1_total = 0.12;
  double aa_disc_l2_total = 0.10;
  int aa_disc_window = 9;
  double aa_fatigue_l1_total = 0.02;
  double aa_fatigue_l2_total = 0.02;
  int aa_fatigue_window = 9;
  double dct_neutropenia_l1_total = 0.12;
  double dct_neutropenia_l2_total = 0.163;
  int dct_neutropenia_window = 6;
  double dct_febrile_l1_total = 0.061;
  double dct_febrile_l2_total = 0.044;
  int dct_febrile_window = 6;
};

inline double per_cycle_rate(double total, int window) {
  if (!(total >= 0.0 && total < 1.0) || window < 1)
    throw ParameterError("per_cycle_rate: need total in [0,1) and window >= 1");
  return 1.0 - std::pow(1.0 - total, 1.0 / window);
}

struct ModelSpec {
  Strategy strategy = Strategy::dct_first;
  TransitionTable line1;
  TransitionTable line2;
  TransitionTable ed_death;
  double p_direct_ed = 0.10;
  int planned_cycles_line1_dct = 6;
  int planned_cycles_line2_dct = 10;
  BehaviorParams behavior;
  int horizon_cycles = 87;
  long n_patients = 100000;
  std::uint64_t seed = 0;

  Drug line1_drug() const { return strategy == Strategy::dct_first ? Drug::dct : Drug::aa; }
  Drug line2_drug() const { return strategy == Strategy::dct_first ? Drug::aa : Drug::dct; }
};

enum class EventKind : std::uint8_t {
  progression,
  death,
  discontinuation,
  fatigue,
  neutropenia,
  febrile_neutropenia
};

struct TrajectoryEvent {
  int cycle;
  EventKind kind;
};

struct PatientTrajectory {
  std::vector<State> state_per_cycle; // state at the start of each cycle
  std::vector<TrajectoryEvent> events;
  int t1 = -1;          // cycle of first progression, -1 if none
  int death_cycle = -1; // cycle the death occurred in, -1 if alive at horizon
};

namespace detail {

// Draw slots. Each (patient, cycle) pair owns one independent uniform per
// slot whether or not the simulation consumes it.
enum Slot : std::uint64_t {
  slot_death = 0,
  slot_progression = 1,
  slot_branch = 2,
  slot_disc = 3,
  slot_fatigue = 4,
  slot_neutropenia = 5,
  slot_febrile = 6
};

struct CycleRates {
  double aa_disc_l1, aa_disc_l2;
  double aa_fatigue_l1, aa_fatigue_l2;
  double dct_neut_l1, dct_neut_l2;
  double dct_feb_l1, dct_feb_l2;

  static CycleRates from(const BehaviorParams& b) {
    CycleRates r;
    r.aa_disc_l1 = per_cycle_rate(b.aa_disc_l1_total, b.aa_disc_window);
    r.aa_disc_l2 = per_cycle_rate(b.aa_disc_l2_total, b.aa_disc_window);
    r.aa_fatigue_l1 = per_cycle_rate(b.aa_fatigue_l1_total, b.aa_fatigue_window);
    r.aa_fatigue_l2 = per_cycle_rate(b.aa_fatigue_l2_total, b.aa_fatigue_window);
    r.dct_neut_l1 = per_cycle_rate(b.dct_neutropenia_l1_total, b.dct_neutropenia_window);
    r.dct_neut_l2 = per_cycle_rate(b.dct_neutropenia_l2_total, b.dct_neutropenia_window);
    r.dct_feb_l1 = per_cycle_rate(b.dct_febrile_l1_total, b.dct_febrile_window);
    r.dct_feb_l2 = per_cycle_rate(b.dct_febrile_l2_total, b.dct_febrile_window);
    return r;
  }
};

inline double table_at(const std::vector<double>& v, long k) {
  if (v.empty())
    return 0.0;
  if (k < 0)
    k = 0;
  std::size_t i = static_cast<std::size_t>(k);
  return v[std::min(i, v.size() - 1)];
}

inline void simulate_patient_into(const ModelSpec& spec, const DependenceParams& dep, long patient,
                                  const CycleRates& rates, PatientTrajectory& out) {
  const int C = spec.horizon_cycles;
  out.state_per_cycle.assign(static_cast<std::size_t>(C), State::Death);
  out.events.clear();
  out.t1 = -1;
  out.death_cycle = -1;
  const std::uint64_t seed = spec.seed;
  const auto pid = static_cast<std::uint64_t>(patient);
  const Drug d1 = spec.line1_drug();
  const Drug d2 = spec.line2_drug();
  const BehaviorParams& b = spec.behavior;
  State st = State::L1;
  int entry_l2 = 0, entry_ed = 0;
  int active_l1 = 0, active_l2 = 0;
  bool fired_fatigue_l1 = false, fired_fatigue_l2 = false;
  bool fired_neut_l1 = false, fired_neut_l2 = false;
  bool fired_feb_l1 = false, fired_feb_l2 = false;

  for (int c = 0; c < C; ++c) {
    out.state_per_cycle[c] = st;
    if (st == State::Death)
      continue;
    const auto uc = static_cast<std::uint64_t>(c);
    double g = 1.0;
    if (st == State::L2 || st == State::PostL2 || st == State::ED)
      g = g_hazard_ratio(static_cast<double>(out.t1), dep);

    double p_death;
    if (st == State::L1 || st == State::PostL1)
      p_death = table_at(spec.line1.h_death, c);
    else if (st == State::L2 || st == State::PostL2)
      p_death = apply_hr(table_at(spec.line2.h_death, c - entry_l2), g);
    else
      p_death = apply_hr(table_at(spec.ed_death.h_death, c - entry_ed), g);
    if (rng::uniform(seed, pid, uc, slot_death) < p_death) {
      out.death_cycle = c;
      out.events.push_back({c, EventKind::death});
      st = State::Death;
      continue;
    }

    if (st != State::ED) {
      double p_prog;
      if (st == State::L1 || st == State::PostL1)
        p_prog = table_at(spec.line1.h_prog, c);
      else
        p_prog = apply_hr(table_at(spec.line2.h_prog, c - entry_l2), g);
      if (rng::uniform(seed, pid, uc, slot_progression) < p_prog) {
        out.events.push_back({c, EventKind::progression});
        if (st == State::L1 || st == State::PostL1) {
          if (out.t1 < 0)
            out.t1 = c;
          if (rng::uniform(seed, pid, uc, slot_branch) < spec.p_direct_ed) {
            st = State::ED;
            entry_ed = c + 1;
          } else {
            st = State::L2;
            entry_l2 = c + 1;
          }
        } else {
          st = State::ED;
          entry_ed = c + 1;
        }
        continue;
      }
    }

    if (st == State::L1) {
      int k = active_l1;
      if (d1 == Drug::dct) {
        int span = std::max(spec.planned_cycles_line1_dct - 1, 1);
        double r = b.dct_l1_early_disc_first +
                   (b.dct_l1_early_disc_last - b.dct_l1_early_disc_first) *
                       static_cast<double>(std::min(k, span)) / span;
        if (rng::uniform(seed, pid, uc, slot_disc) < r) {
          out.events.push_back({c, EventKind::discontinuation});
          st = State::PostL1;
          continue;
        }
        if (!fired_neut_l1 && k < b.dct_neutropenia_window &&
            rng::uniform(seed, pid, uc, slot_neutropenia) < rates.dct_neut_l1) {
          fired_neut_l1 = true;
          out.events.push_back({c, EventKind::neutropenia});
        }
        if (!fired_feb_l1 && k < b.dct_febrile_window &&
            rng::uniform(seed, pid, uc, slot_febrile) < rates.dct_feb_l1) {
          fired_feb_l1 = true;
          out.events.push_back({c, EventKind::febrile_neutropenia});
        }
        if (++active_l1 >= spec.planned_cycles_line1_dct)
          st = State::PostL1;
      } else {
        if (k < b.aa_disc_window && rng::uniform(seed, pid, uc, slot_disc) < rates.aa_disc_l1) {
          out.events.push_back({c, EventKind::discontinuation});
          st = State::PostL1;
          continue;
        }
        if (!fired_fatigue_l1 && k < b.aa_fatigue_window &&
            rng::uniform(seed, pid, uc, slot_fatigue) < rates.aa_fatigue_l1) {
          fired_fatigue_l1 = true;
          out.events.push_back({c, EventKind::fatigue});
        }
        ++active_l1;
      }
    } else if (st == State::L2) {
      int k = active_l2;
      if (d2 == Drug::dct) {
        if (rng::uniform(seed, pid, uc, slot_disc) < b.dct_l2_early_disc) {
          out.events.push_back({c, EventKind::discontinuation});
          st = State::PostL2;
          continue;
        }
        if (!fired_neut_l2 && k < b.dct_neutropenia_window &&
            rng::uniform(seed, pid, uc, slot_neutropenia) < rates.dct_neut_l2) {
          fired_neut_l2 = true;
          out.events.push_back({c, EventKind::neutropenia});
        }
        if (!fired_feb_l2 && k < b.dct_febrile_window &&
            rng::uniform(seed, pid, uc, slot_febrile) < rates.dct_feb_l2) {
          fired_feb_l2 = true;
          out.events.push_back({c, EventKind::febrile_neutropenia});
        }
        if (++active_l2 >= spec.planned_cycles_line2_dct)
          st = State::PostL2;
      } else {
        if (k < b.aa_disc_window && rng::uniform(seed, pid, uc, slot_disc) < rates.aa_disc_l2) {
          out.events.push_back({c, EventKind::discontinuation});
          st = State::PostL2;
          continue;
        }
        if (!fired_fatigue_l2 && k < b.aa_fatigue_window &&
            rng::uniform(seed, pid, uc, slot_fatigue) < rates.aa_fatigue_l2) {
          fired_fatigue_l2 = true;
          out.events.push_back({c, EventKind::fatigue});
        }
        ++active_l2;
      }
    }
  }
}

// Deterministic block scheduler. Work is cut into fixed-size patient blocks,
// blocks may run on any thread, and partial results are folded serially in
// block order, so the reduction is identical for any thread count.
constexpr long cohort_block_size = 4096;

template <class Block, class PerBlock, class Combine>
void run_blocks(long n, int threads, PerBlock per_block, Combine combine) {
  if (n <= 0)
    return;
  const long nblocks = (n + cohort_block_size - 1) / cohort_block_size;
  auto bounds = [&](long blk) {
    long lo = blk * cohort_block_size;
    long hi = std::min(lo + cohort_block_size, n);
    return std::pair<long, long>(lo, hi);
  };
  if (threads <= 1 || nblocks == 1) {
    for (long blk = 0; blk < nblocks; ++blk) {
      auto [lo, hi] = bounds(blk);
      combine(per_block(lo, hi));
    }
    return;
  }
  std::vector<std::optional<Block>> partial(static_cast<std::size_t>(nblocks));
  std::atomic<long> next{0};
  auto worker = [&] {
    for (;;) {
      long blk = next.fetch_add(1);
      if (blk >= nblocks)
        return;
      auto [lo, hi] = bounds(blk);
      partial[static_cast<std::size_t>(blk)] = per_block(lo, hi);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back(worker);
  for (auto& th : pool)
    th.join();
  for (long blk = 0; blk < nblocks; ++blk)
    combine(std::move(*partial[static_cast<std::size_t>(blk)]));
}

} // namespace detail

inline PatientTrajectory simulate_patient(const ModelSpec& spec, const DependenceParams& dep,
                                          long patient) {
  if (spec.horizon_cycles <= 0)
    throw ParameterError("simulate_patient: horizon must be positive");
  auto rates = detail::CycleRates::from(spec.behavior);
  PatientTrajectory out;
  detail::simulate_patient_into(spec, dep, patient, rates, out);
  return out;
}

struct CohortResult {
  std::vector<double> os_curve;                      // P(alive at start of cycle c), c = 0..C
  std::vector<std::array<long, n_states>> occupancy; // state counts at cycle start, c = 0..C-1
  std::vector<PatientTrajectory> trajectories;       // filled only on request
};

inline CohortResult simulate_cohort(const ModelSpec& spec, const DependenceParams& dep,
                                    int threads = 1, bool keep_trajectories = false) {
  if (spec.n_patients <= 0)
    throw ParameterError("simulate_cohort: n_patients must be positive");
  if (spec.horizon_cycles <= 0)
    throw ParameterError("simulate_cohort: horizon must be positive");
  const int C = spec.horizon_cycles;
  const long n = spec.n_patients;
  const auto rates = detail::CycleRates::from(spec.behavior);

  struct Block {
    std::vector<long> deaths_per_cycle;
    std::vector<std::array<long, n_states>> occ;
    std::vector<PatientTrajectory> trajs;
  };
  CohortResult result;
  std::vector<long> deaths(static_cast<std::size_t>(C), 0);
  result.occupancy.assign(static_cast<std::size_t>(C), {});
  if (keep_trajectories)
    result.trajectories.reserve(static_cast<std::size_t>(n));

  detail::run_blocks<Block>(
      n, threads,
      [&](long lo, long hi) {
        Block blk;
        blk.deaths_per_cycle.assign(static_cast<std::size_t>(C), 0);
        blk.occ.assign(static_cast<std::size_t>(C), {});
        if (keep_trajectories)
          blk.trajs.reserve(static_cast<std::size_t>(hi - lo));
        PatientTrajectory tr;
        for (long p = lo; p < hi; ++p) {
          detail::simulate_patient_into(spec, dep, p, rates, tr);
          for (int c = 0; c < C; ++c)
            ++blk.occ[c][static_cast<std::size_t>(tr.state_per_cycle[c])];
          if (tr.death_cycle >= 0)
            ++blk.deaths_per_cycle[static_cast<std::size_t>(tr.death_cycle)];
          if (keep_trajectories)
            blk.trajs.push_back(tr);
        }
        return blk;
      },
      [&](Block&& blk) {
        for (int c = 0; c < C; ++c) {
          deaths[c] += blk.deaths_per_cycle[c];
          for (int s = 0; s < n_states; ++s)
            result.occupancy[c][s] += blk.occ[c][s];
        }
        if (keep_trajectories)
          for (auto& tr : blk.trajs)
            result.trajectories.push_back(std::move(tr));
      });

  result.os_curve.resize(static_cast<std::size_t>(C) + 1);
  long dead = 0;
  for (int c = 0; c <= C; ++c) {
    result.os_curve[c] = static_cast<double>(n - dead) / static_cast<double>(n);
    if (c < C)
      dead += deaths[c];
  }
  return result;
}

} // namespace seqsim
