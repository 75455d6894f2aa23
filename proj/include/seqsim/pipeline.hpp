#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibrate.hpp"
#include "classify.hpp"
#include "competing_risks.hpp"
#include "csv.hpp"
#include "curve.hpp"
#include "econ.hpp"
#include "errors.hpp"
#include "ipd.hpp"
#include "microsim.hpp"

namespace seqsim {

constexpr const char* version_string = "0.1.0";

struct CurveSetConfig {
  std::string pfs_path;
  std::string os_path;
  DeathHandling handling = DeathHandling::event;
};

// Evidence roles. Each strategy draws its first line from the matching
// first-line trial arm and its second line from the other drug's
// post-progression arm; the extensive-disease death table is shared.
inline const std::vector<std::string>& curve_set_names() {
  static const std::vector<std::string> names{"line1_dct", "line1_aa", "line2_dct", "line2_aa"};
  return names;
}

struct RunConfig {
  std::uint64_t seed = 0;
  long n_patients = 10000;
  int horizon_cycles = 87;
  int threads = 1;
  double cycle_length_days = 21.0;
  double epsilon_months = 0.25;
  double p_direct_ed = 0.10;
  int planned_cycles_line1_dct = 6;
  int planned_cycles_line2_dct = 10;
  std::map<std::string, CurveSetConfig> curve_sets;
  std::string ed_os_path;
  CalibrationBounds bounds;
  NmSettings nm;
  int polish_evaluations = 300;
  BehaviorParams behavior;
  EconomicInputs econ;
  std::vector<Pricing> pricings{Pricing::generic, Pricing::branded, Pricing::on_patent};
  std::string config_hash;
};

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  RunConfig cfg;
  cfg.config_hash = fnv1a_hex(text);
  const auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (dir / fp).string();
  };
  auto require = [&](const char* key) {
    if (!doc.contains(key))
      throw ConfigError(std::string("config: missing field '") + key + "'");
    return doc[key];
  };
  cfg.seed = require("seed").get<std::uint64_t>();
  cfg.n_patients = require("n_patients").get<long>();
  cfg.horizon_cycles = doc.value("horizon_cycles", cfg.horizon_cycles);
  cfg.threads = doc.value("threads", cfg.threads);
  cfg.cycle_length_days = doc.value("cycle_length_days", cfg.cycle_length_days);
  cfg.epsilon_months = doc.value("epsilon_months", cfg.epsilon_months);
  cfg.p_direct_ed = doc.value("p_direct_ed", cfg.p_direct_ed);
  cfg.planned_cycles_line1_dct = doc.value("planned_cycles_line1_dct", cfg.planned_cycles_line1_dct);
  cfg.planned_cycles_line2_dct = doc.value("planned_cycles_line2_dct", cfg.planned_cycles_line2_dct);
  auto curves = require("curves");
  for (const auto& name : curve_set_names()) {
    if (!curves.contains(name))
      throw ConfigError("config: curves missing set '" + name + "'");
    const auto& c = curves[name];
    for (const char* k : {"pfs", "os", "death_handling"})
      if (!c.contains(k))
        throw ConfigError("config: curve set '" + name + "' missing field '" + k + "'");
    CurveSetConfig sc;
    sc.pfs_path = resolve(c["pfs"].get<std::string>());
    sc.os_path = resolve(c["os"].get<std::string>());
    sc.handling = death_handling_from_string(c["death_handling"].get<std::string>());
    cfg.curve_sets[name] = sc;
  }
  if (!curves.contains("ed_os"))
    throw ConfigError("config: curves missing 'ed_os'");
  cfg.ed_os_path = resolve(curves["ed_os"].get<std::string>());
  if (doc.contains("calibration")) {
    const auto& c = doc["calibration"];
    cfg.bounds.theta_lo = c.value("theta_lo", cfg.bounds.theta_lo);
    cfg.bounds.theta_hi = c.value("theta_hi", cfg.bounds.theta_hi);
    cfg.bounds.omega_lo = c.value("omega_lo", cfg.bounds.omega_lo);
    cfg.bounds.omega_hi = c.value("omega_hi", cfg.bounds.omega_hi);
    cfg.nm.max_evaluations = c.value("max_evaluations_per_start", cfg.nm.max_evaluations);
    cfg.nm.spread_tol = c.value("spread_tol", cfg.nm.spread_tol);
    cfg.nm.size_tol = c.value("size_tol", cfg.nm.size_tol);
    cfg.polish_evaluations = c.value("polish_evaluations", cfg.polish_evaluations);
  }
  if (doc.contains("economics")) {
    const auto& e = doc["economics"];
    cfg.econ.discount_rate = e.value("discount_rate", cfg.econ.discount_rate);
  }
  cfg.econ.cycle_length_days = cfg.cycle_length_days;
  if (doc.contains("pricings")) {
    cfg.pricings.clear();
    for (const auto& p : doc["pricings"])
      cfg.pricings.push_back(pricing_from_string(p.get<std::string>()));
    if (cfg.pricings.empty())
      throw ConfigError("config: pricings must not be empty");
  }
  if (cfg.horizon_cycles <= 0 || cfg.n_patients <= 0)
    throw ConfigError("config: horizon_cycles and n_patients must be positive");
  return cfg;
}

// Per-set pipeline state, filled stage by stage.
struct SetBundle {
  std::string name;
  TrialCurveSet set;
  ReconstructedIPD pfs_ipd;
  ReconstructedIPD os_ipd;
  CompetingRisksData classified;
  CifPair cif;
  TransitionTable table;
};

struct EdBundle {
  DigitizedCurve curve;
  ReconstructedIPD os_ipd;
  CompetingRisksData data;
  CifPair cif;
  TransitionTable table;
};

inline SetBundle load_set(const RunConfig& cfg, const std::string& name) {
  auto it = cfg.curve_sets.find(name);
  if (it == cfg.curve_sets.end())
    throw ConfigError("unknown curve set '" + name + "'");
  SetBundle b;
  b.name = name;
  b.set.pfs = load_curve_file(it->second.pfs_path);
  b.set.os = load_curve_file(it->second.os_path);
  b.set.death_handling = it->second.handling;
  check_curve_set(b.set);
  return b;
}

// All deaths in the extensive-disease evidence are cause-2 events, so the
// survival-only curve drops straight into the competing-risks machinery.
inline CompetingRisksData ed_competing_data(const ReconstructedIPD& os_ipd) {
  CompetingRisksData d;
  d.times = os_ipd.times;
  d.codes.reserve(os_ipd.indicators.size());
  for (int ind : os_ipd.indicators)
    d.codes.push_back(ind == 1 ? 2 : 0);
  return d;
}

inline std::vector<double> target_from_os(const ReconstructedIPD& os_ipd, const RunConfig& cfg) {
  StepFunction km = km_estimate(os_ipd.times, os_ipd.indicators);
  const double mpc = cfg.cycle_length_days / days_per_month;
  std::vector<double> target(static_cast<std::size_t>(cfg.horizon_cycles) + 1);
  for (int c = 0; c <= cfg.horizon_cycles; ++c)
    target[static_cast<std::size_t>(c)] = km(c * mpc);
  return target;
}

inline ModelSpec model_spec_for(const RunConfig& cfg, Strategy strat, const TransitionTable& line1,
                                const TransitionTable& line2, const TransitionTable& ed) {
  ModelSpec ms;
  ms.strategy = strat;
  ms.line1 = line1;
  ms.line2 = line2;
  ms.ed_death = ed;
  ms.p_direct_ed = cfg.p_direct_ed;
  ms.planned_cycles_line1_dct = cfg.planned_cycles_line1_dct;
  ms.planned_cycles_line2_dct = cfg.planned_cycles_line2_dct;
  ms.behavior = cfg.behavior;
  ms.horizon_cycles = cfg.horizon_cycles;
  ms.n_patients = cfg.n_patients;
  ms.seed = cfg.seed;
  return ms;
}

namespace detail {

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create directory " + dir + ": " + ec.message());
}

inline std::string join(const std::string& dir, const std::string& rel) {
  return (std::filesystem::path(dir) / rel).string();
}

inline void write_ipd_csv(const std::string& path, const ReconstructedIPD& ipd) {
  std::vector<std::vector<double>> rows;
  rows.reserve(ipd.times.size());
  for (std::size_t i = 0; i < ipd.times.size(); ++i)
    rows.push_back({ipd.times[i], static_cast<double>(ipd.indicators[i])});
  csv::write(path, {"time", "indicator"}, rows);
}

inline void write_classified_csv(const std::string& path, const CompetingRisksData& d) {
  std::vector<std::vector<double>> rows;
  rows.reserve(d.times.size());
  for (std::size_t i = 0; i < d.times.size(); ++i)
    rows.push_back({d.times[i], static_cast<double>(d.codes[i])});
  csv::write(path, {"time", "code"}, rows);
}

inline void write_cif_csv(const std::string& path, const CifPair& cif) {
  std::vector<std::vector<double>> rows;
  rows.reserve(cif.grid.size());
  for (std::size_t i = 0; i < cif.grid.size(); ++i)
    rows.push_back({cif.grid[i], cif.f_prog[i], cif.f_death[i], cif.s_all[i]});
  csv::write(path, {"time", "f_prog", "f_death", "s_all"}, rows);
}

inline void write_transitions_csv(const std::string& path, const TransitionTable& t) {
  std::vector<std::vector<double>> rows;
  for (std::size_t c = 0; c < t.n_cycles(); ++c)
    rows.push_back({static_cast<double>(c), t.h_prog[c], t.h_death[c]});
  csv::write(path, {"cycle", "h_prog", "h_death"}, rows);
}

inline void write_occupancy_csv(const std::string& path, const CohortResult& r) {
  std::vector<std::vector<double>> rows;
  for (std::size_t c = 0; c < r.occupancy.size(); ++c) {
    std::vector<double> row{static_cast<double>(c)};
    for (int s = 0; s < n_states; ++s)
      row.push_back(static_cast<double>(r.occupancy[c][static_cast<std::size_t>(s)]));
    rows.push_back(std::move(row));
  }
  csv::write(path, {"cycle", "l1", "post_l1", "l2", "post_l2", "ed", "death"}, rows);
}

inline void write_calibration_json(const std::string& path, const CalibrationResult& r,
                                   double n_eff) {
  nlohmann::json cj;
  cj["theta"] = r.params.theta;
  cj["omega"] = r.params.omega;
  cj["sse"] = r.sse;
  cj["ks_d"] = r.ks.d;
  cj["ks_p"] = r.ks.p;
  cj["evaluations"] = r.evaluations;
  cj["converged"] = r.converged;
  cj["n_eff"] = n_eff;
  std::ofstream out(path);
  out << cj.dump(2) << "\n";
  if (!out)
    throw ConfigError("write failed: " + path);
}

inline void write_calibration_trace(const std::string& path, const CalibrationResult& r) {
  std::vector<std::vector<double>> rows;
  rows.reserve(r.trace.size());
  for (const auto& t : r.trace)
    rows.push_back({t[0], t[1], t[2]});
  csv::write(path, {"theta", "omega", "sse"}, rows);
}

inline std::string round_dollars(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

inline std::string round_qaly(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline void write_ce_csv(const std::string& path, const RunConfig& cfg,
                         const CohortEconomics& dct_uncal, const CohortEconomics& aa_uncal,
                         const CohortEconomics& dct_cal, const CohortEconomics& aa_cal) {
  std::ofstream ce(path);
  if (!ce)
    throw ConfigError("write failed: " + path);
  ce << "pricing,calibration,cost_dct_first,qaly_dct_first,cost_aa_first,qaly_aa_first,"
        "delta_cost,delta_qaly,icer,label,delta_cost_display,delta_qaly_display,icer_display\n";
  auto emit = [&](const std::string& variant, const CohortEconomics& d, const CohortEconomics& a) {
    for (Pricing p : cfg.pricings) {
      const auto i = static_cast<std::size_t>(p);
      auto cmp = compare_strategies(d.mean_cost[i], d.mean_qaly, a.mean_cost[i], a.mean_qaly);
      ce << to_string(p) << ',' << variant << ',' << csv::format_double(cmp.cost_dct_first) << ','
         << csv::format_double(cmp.qaly_dct_first) << ','
         << csv::format_double(cmp.cost_aa_first) << ',' << csv::format_double(cmp.qaly_aa_first)
         << ',' << csv::format_double(cmp.delta_cost) << ','
         << csv::format_double(cmp.delta_qaly) << ','
         << (std::isnan(cmp.icer) ? std::string() : csv::format_double(cmp.icer)) << ','
         << cmp.label << ',' << round_dollars(cmp.delta_cost) << ',' << round_qaly(cmp.delta_qaly)
         << ',' << (std::isnan(cmp.icer) ? std::string() : round_dollars(cmp.icer)) << "\n";
    }
  };
  emit("none", dct_uncal, aa_uncal);
  emit("calibrated", dct_cal, aa_cal);
  if (!ce)
    throw ConfigError("write failed: " + path);
}

} // namespace detail

// Everything one strategy needs for calibration and simulation.
struct StrategyInputs {
  ModelSpec spec;
  std::vector<double> target;
  double n_eff = 0;
};

inline StrategyInputs strategy_inputs_from(const RunConfig& cfg, Strategy strat,
                                           const SetBundle& l1, const SetBundle& l2,
                                           const EdBundle& ed) {
  StrategyInputs si;
  si.spec = model_spec_for(cfg, strat, l1.table, l2.table, ed.table);
  si.target = target_from_os(l1.os_ipd, cfg);
  si.n_eff = static_cast<double>(l1.os_ipd.n_subjects());
  return si;
}

inline CalibrationProblem calibration_problem_for(const RunConfig& cfg,
                                                  const StrategyInputs& si) {
  CalibrationProblem prob;
  prob.spec = si.spec;
  prob.target = si.target;
  prob.bounds = cfg.bounds;
  prob.settings.nm = cfg.nm;
  prob.settings.polish_evaluations = cfg.polish_evaluations;
  prob.n_eff = si.n_eff;
  prob.threads = cfg.threads;
  return prob;
}

namespace detail {

struct LoadedEvidence {
  std::vector<SetBundle> sets;
  EdBundle ed;

  SetBundle& by_name(const std::string& name) {
    for (auto& b : sets)
      if (b.name == name)
        return b;
    throw ConfigError("internal: set '" + name + "' not loaded");
  }
};

inline LoadedEvidence load_evidence(const RunConfig& cfg) {
  LoadedEvidence ev;
  for (const auto& name : curve_set_names())
    ev.sets.push_back(load_set(cfg, name));
  ev.ed.curve = load_curve_file(cfg.ed_os_path);
  return ev;
}

inline void reconstruct_evidence(LoadedEvidence& ev) {
  for (auto& b : ev.sets) {
    b.pfs_ipd = reconstruct(b.set.pfs);
    b.os_ipd = reconstruct(b.set.os);
  }
  ev.ed.os_ipd = reconstruct(ev.ed.curve);
}

inline void classify_evidence(LoadedEvidence& ev, const RunConfig& cfg) {
  for (auto& b : ev.sets)
    b.classified = classify_events(b.pfs_ipd, b.os_ipd, cfg.epsilon_months, b.set.death_handling);
  ev.ed.data = ed_competing_data(ev.ed.os_ipd);
}

inline std::vector<std::string> incidence_evidence(LoadedEvidence& ev, const RunConfig& cfg) {
  std::vector<std::string> notes;
  for (auto& b : ev.sets) {
    b.cif = estimate_cif(b.classified);
    b.table = discrete_hazards(b.cif, cfg.cycle_length_days, cfg.horizon_cycles);
    for (const auto& w : b.table.warnings)
      notes.push_back(b.name + ": " + w);
  }
  ev.ed.cif = estimate_cif(ev.ed.data);
  ev.ed.table = discrete_hazards(ev.ed.cif, cfg.cycle_length_days, cfg.horizon_cycles);
  for (const auto& w : ev.ed.table.warnings)
    notes.push_back("ed: " + w);
  return notes;
}

inline StrategyInputs strategy_inputs(LoadedEvidence& ev, const RunConfig& cfg, Strategy strat) {
  const bool dct = strat == Strategy::dct_first;
  return strategy_inputs_from(cfg, strat, ev.by_name(dct ? "line1_dct" : "line1_aa"),
                              ev.by_name(dct ? "line2_aa" : "line2_dct"), ev.ed);
}

inline LoadedEvidence evidence_through_incidence(const RunConfig& cfg) {
  LoadedEvidence ev = load_evidence(cfg);
  reconstruct_evidence(ev);
  classify_evidence(ev, cfg);
  incidence_evidence(ev, cfg);
  return ev;
}

inline void write_reconstruction_outputs(const LoadedEvidence& ev, const std::string& out_dir) {
  for (const auto& b : ev.sets) {
    ensure_dir(join(out_dir, b.name));
    write_ipd_csv(join(out_dir, b.name + "/pfs_ipd.csv"), b.pfs_ipd);
    write_ipd_csv(join(out_dir, b.name + "/os_ipd.csv"), b.os_ipd);
  }
  ensure_dir(join(out_dir, "ed"));
  write_ipd_csv(join(out_dir, "ed/os_ipd.csv"), ev.ed.os_ipd);
}

inline void write_classified_outputs(const LoadedEvidence& ev, const std::string& out_dir) {
  for (const auto& b : ev.sets) {
    ensure_dir(join(out_dir, b.name));
    write_classified_csv(join(out_dir, b.name + "/classified.csv"), b.classified);
  }
  ensure_dir(join(out_dir, "ed"));
  write_classified_csv(join(out_dir, "ed/classified.csv"), ev.ed.data);
}

inline void write_incidence_outputs(const LoadedEvidence& ev, const std::string& out_dir) {
  for (const auto& b : ev.sets) {
    ensure_dir(join(out_dir, b.name));
    write_cif_csv(join(out_dir, b.name + "/cif.csv"), b.cif);
    write_transitions_csv(join(out_dir, b.name + "/transitions.csv"), b.table);
  }
  ensure_dir(join(out_dir, "ed"));
  write_cif_csv(join(out_dir, "ed/cif.csv"), ev.ed.cif);
  write_transitions_csv(join(out_dir, "ed/transitions.csv"), ev.ed.table);
}

} // namespace detail

// Standalone stage runners backing the CLI subcommands. Each recomputes its
// prerequisites in memory and writes only its own files, so running the
// stages in order into one directory reproduces the run_all outputs.
inline void stage_reconstruct(const RunConfig& cfg, const std::string& out_dir) {
  auto ev = detail::load_evidence(cfg);
  detail::reconstruct_evidence(ev);
  detail::ensure_dir(out_dir);
  detail::write_reconstruction_outputs(ev, out_dir);
}

inline void stage_classify(const RunConfig& cfg, const std::string& out_dir) {
  auto ev = detail::load_evidence(cfg);
  detail::reconstruct_evidence(ev);
  detail::classify_evidence(ev, cfg);
  detail::ensure_dir(out_dir);
  detail::write_classified_outputs(ev, out_dir);
}

inline void stage_incidence(const RunConfig& cfg, const std::string& out_dir) {
  auto ev = detail::evidence_through_incidence(cfg);
  detail::ensure_dir(out_dir);
  detail::write_incidence_outputs(ev, out_dir);
}

inline CalibrationResult stage_calibrate(const RunConfig& cfg, const std::string& out_dir,
                                         Strategy strat) {
  auto ev = detail::evidence_through_incidence(cfg);
  auto si = detail::strategy_inputs(ev, cfg, strat);
  auto result = calibrate(calibration_problem_for(cfg, si));
  const std::string dir = detail::join(out_dir, to_string(strat));
  detail::ensure_dir(dir);
  detail::write_calibration_json(detail::join(dir, "calibration.json"), result, si.n_eff);
  detail::write_calibration_trace(detail::join(dir, "calibration_trace.csv"), result);
  return result;
}

inline CohortResult stage_simulate(const RunConfig& cfg, const std::string& out_dir,
                                   Strategy strat, const DependenceParams& dep) {
  auto ev = detail::evidence_through_incidence(cfg);
  auto si = detail::strategy_inputs(ev, cfg, strat);
  auto cohort = simulate_cohort(si.spec, dep, cfg.threads);
  const std::string dir = detail::join(out_dir, to_string(strat));
  detail::ensure_dir(dir);
  std::vector<std::vector<double>> rows;
  for (std::size_t c = 0; c < cohort.os_curve.size(); ++c)
    rows.push_back({static_cast<double>(c), cohort.os_curve[c]});
  csv::write(detail::join(dir, "os_curve.csv"), {"cycle", "survival"}, rows);
  detail::write_occupancy_csv(detail::join(dir, "occupancy.csv"), cohort);
  return cohort;
}

// The calibrated CE scenario applies the dct_first optimum to both strategies:
// the line-1 DCT trial has the longest follow-up, so its correction is the
// base case, and a common correction keeps the comparison attributable to
// strategy rather than to per-strategy fitting artifacts.
inline void stage_ce(const RunConfig& cfg, const std::string& out_dir) {
  auto ev = detail::evidence_through_incidence(cfg);
  auto si_dct = detail::strategy_inputs(ev, cfg, Strategy::dct_first);
  auto si_aa = detail::strategy_inputs(ev, cfg, Strategy::aa_first);
  auto cal_dct = calibrate(calibration_problem_for(cfg, si_dct));
  auto dct_uncal = accumulate_cohort(si_dct.spec, DependenceParams(), cfg.econ, cfg.threads);
  auto aa_uncal = accumulate_cohort(si_aa.spec, DependenceParams(), cfg.econ, cfg.threads);
  auto dct_cal = accumulate_cohort(si_dct.spec, cal_dct.params, cfg.econ, cfg.threads);
  auto aa_cal = accumulate_cohort(si_aa.spec, cal_dct.params, cfg.econ, cfg.threads);
  detail::ensure_dir(out_dir);
  detail::write_ce_csv(detail::join(out_dir, "ce.csv"), cfg, dct_uncal, aa_uncal, dct_cal, aa_cal);
}

struct PipelineResult {
  bool complete = true;
  nlohmann::json manifest;
};

// Run every stage against one output directory. A stage failure marks the
// manifest and skips the rest; the manifest is always written. Nothing in
// the outputs depends on wall clock or thread count, so a rerun with the
// same config and seed reproduces every file byte for byte.
inline PipelineResult run_all(const RunConfig& cfg, const std::string& out_dir) {
  detail::ensure_dir(out_dir);
  nlohmann::json stages = nlohmann::json::array();
  std::vector<std::string> outputs;
  bool failed = false;
  std::vector<std::string> notes;
  auto run_stage = [&](const std::string& name, auto&& body) {
    if (failed) {
      stages.push_back({{"name", name}, {"status", "skipped"}, {"notes", nlohmann::json::array()}});
      return;
    }
    notes.clear();
    try {
      body();
      stages.push_back({{"name", name}, {"status", "ok"}, {"notes", notes}});
    } catch (const std::exception& e) {
      stages.push_back(
          {{"name", name}, {"status", std::string("failed: ") + e.what()}, {"notes", notes}});
      failed = true;
    }
  };
  auto rel = [&](const std::string& r) {
    outputs.push_back(r);
    return detail::join(out_dir, r);
  };

  detail::LoadedEvidence ev;
  std::map<Strategy, StrategyInputs> inputs;
  std::map<Strategy, CalibrationResult> calibrations;
  std::map<Strategy, CohortEconomics> econ_uncal, econ_cal;

  run_stage("ingest", [&] { ev = detail::load_evidence(cfg); });

  run_stage("reconstruct", [&] {
    detail::reconstruct_evidence(ev);
    for (const auto& b : ev.sets) {
      detail::ensure_dir(detail::join(out_dir, b.name));
      detail::write_ipd_csv(rel(b.name + "/pfs_ipd.csv"), b.pfs_ipd);
      detail::write_ipd_csv(rel(b.name + "/os_ipd.csv"), b.os_ipd);
    }
    detail::ensure_dir(detail::join(out_dir, "ed"));
    detail::write_ipd_csv(rel("ed/os_ipd.csv"), ev.ed.os_ipd);
  });

  run_stage("classify", [&] {
    detail::classify_evidence(ev, cfg);
    for (const auto& b : ev.sets)
      detail::write_classified_csv(rel(b.name + "/classified.csv"), b.classified);
    detail::write_classified_csv(rel("ed/classified.csv"), ev.ed.data);
  });

  run_stage("incidence", [&] {
    notes = detail::incidence_evidence(ev, cfg);
    for (const auto& b : ev.sets) {
      detail::write_cif_csv(rel(b.name + "/cif.csv"), b.cif);
      detail::write_transitions_csv(rel(b.name + "/transitions.csv"), b.table);
    }
    detail::write_cif_csv(rel("ed/cif.csv"), ev.ed.cif);
    detail::write_transitions_csv(rel("ed/transitions.csv"), ev.ed.table);
  });

  run_stage("calibrate", [&] {
    for (Strategy strat : {Strategy::dct_first, Strategy::aa_first}) {
      auto si = detail::strategy_inputs(ev, cfg, strat);
      auto result = calibrate(calibration_problem_for(cfg, si));
      const std::string dir = to_string(strat);
      detail::ensure_dir(detail::join(out_dir, dir));
      detail::write_calibration_json(rel(dir + "/calibration.json"), result, si.n_eff);
      detail::write_calibration_trace(rel(dir + "/calibration_trace.csv"), result);
      inputs[strat] = std::move(si);
      calibrations[strat] = std::move(result);
    }
  });

  run_stage("simulate", [&] {
    for (Strategy strat : {Strategy::dct_first, Strategy::aa_first}) {
      const auto& si = inputs[strat];
      auto uncal = simulate_cohort(si.spec, DependenceParams(), cfg.threads);
      auto cal = simulate_cohort(si.spec, calibrations[strat].params, cfg.threads);
      const std::string dir = to_string(strat);
      std::vector<std::vector<double>> rows;
      for (int c = 0; c <= cfg.horizon_cycles; ++c)
        rows.push_back({static_cast<double>(c), si.target[static_cast<std::size_t>(c)],
                        uncal.os_curve[static_cast<std::size_t>(c)],
                        cal.os_curve[static_cast<std::size_t>(c)]});
      csv::write(rel(dir + "/os_comparison.csv"),
                 {"cycle", "target", "model_uncalibrated", "model_calibrated"}, rows);
      detail::write_occupancy_csv(rel(dir + "/occupancy.csv"), cal);
    }
  });

  run_stage("economics", [&] {
    // Base case: the dct_first optimum corrects both strategies (see stage_ce).
    const DependenceParams base = calibrations[Strategy::dct_first].params;
    for (Strategy strat : {Strategy::dct_first, Strategy::aa_first}) {
      const auto& si = inputs[strat];
      econ_uncal[strat] = accumulate_cohort(si.spec, DependenceParams(), cfg.econ, cfg.threads);
      econ_cal[strat] = accumulate_cohort(si.spec, base, cfg.econ, cfg.threads);
    }
    detail::write_ce_csv(rel("ce.csv"), cfg, econ_uncal[Strategy::dct_first],
                         econ_uncal[Strategy::aa_first], econ_cal[Strategy::dct_first],
                         econ_cal[Strategy::aa_first]);
  });

  PipelineResult result;
  result.complete = !failed;
  nlohmann::json manifest;
  manifest["complete"] = !failed;
  manifest["config_hash"] = cfg.config_hash;
  manifest["n_patients"] = cfg.n_patients;
  manifest["seed"] = cfg.seed;
  manifest["stages"] = stages;
  manifest["outputs"] = outputs;
  manifest["version"] = version_string;
  std::ofstream mf(detail::join(out_dir, "manifest.json"));
  mf << manifest.dump(2) << "\n";
  if (!mf)
    throw ConfigError("write failed: manifest.json");
  result.manifest = manifest;
  return result;
}

} // namespace seqsim
