#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace seqsim {

// A survival curve as digitized from a published figure: step coordinates in
// months plus the number-at-risk row printed under the axis.
struct CurvePoint {
  double time = 0;
  double survival = 1;
};

struct RiskEntry {
  double time = 0;
  long n_at_risk = 0;
};

struct DigitizedCurve {
  std::string label;
  std::vector<CurvePoint> points;
  std::vector<RiskEntry> risk_table;
  std::optional<long> total_events;
};

namespace detail {

inline void validate_curve(const DigitizedCurve& c) {
  const auto& pts = c.points;
  if (pts.empty())
    throw ValidationError(c.label + ": points empty");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].time >= 0))
      throw ValidationError(c.label + ": points: time negative at index " + std::to_string(i));
    if (!(pts[i].survival >= 0 && pts[i].survival <= 1))
      throw ValidationError(c.label + ": points: survival outside [0,1] at index " +
                            std::to_string(i));
    if (i > 0) {
      if (!(pts[i].time > pts[i - 1].time))
        throw ValidationError(c.label + ": points: time strictly increasing violated at index " +
                              std::to_string(i));
      if (pts[i].survival > pts[i - 1].survival)
        throw ValidationError(c.label + ": points: survival non-increasing violated at index " +
                              std::to_string(i));
    }
  }
  const auto& rt = c.risk_table;
  if (rt.empty())
    throw ValidationError(c.label + ": risk_table empty");
  for (std::size_t i = 0; i < rt.size(); ++i) {
    if (!(rt[i].time >= 0))
      throw ValidationError(c.label + ": risk_table: time negative at index " + std::to_string(i));
    if (rt[i].n_at_risk < 0)
      throw ValidationError(c.label + ": risk_table: n_at_risk negative at index " +
                            std::to_string(i));
    if (i > 0) {
      if (!(rt[i].time > rt[i - 1].time))
        throw ValidationError(c.label +
                              ": risk_table: time strictly increasing violated at index " +
                              std::to_string(i));
      if (rt[i].n_at_risk > rt[i - 1].n_at_risk)
        throw ValidationError(c.label +
                              ": risk_table: n_at_risk non-increasing violated at index " +
                              std::to_string(i));
    }
  }
  if (rt.front().time > pts.front().time)
    throw ValidationError(c.label + ": risk_table starts after the first curve point");
  if (c.total_events && *c.total_events < 0)
    throw ValidationError(c.label + ": total_events negative");
}

// Digitization leaves duplicated clicks and often omits the (0, 1) anchor.
// Collapse exact duplicates, reject contradictory ones, then validate.
inline DigitizedCurve finalize_curve(DigitizedCurve c, double dup_tol) {
  std::vector<CurvePoint> cleaned;
  for (const auto& p : c.points) {
    if (!cleaned.empty() && std::abs(p.time - cleaned.back().time) <= 1e-12) {
      if (std::abs(p.survival - cleaned.back().survival) <= 1e-12)
        continue;
      throw ValidationError(c.label + ": points: duplicate time with differing survival at index " +
                            std::to_string(cleaned.size()));
    }
    cleaned.push_back(p);
  }
  c.points = std::move(cleaned);
  if (!c.points.empty() && c.points.front().time > dup_tol)
    c.points.insert(c.points.begin(), CurvePoint{0.0, 1.0});
  validate_curve(c);
  return c;
}

} // namespace detail

inline DigitizedCurve load_curve(const nlohmann::json& doc, double dup_tol = 0.01) {
  if (!doc.is_object())
    throw ParseError("curve document must be an object");
  DigitizedCurve c;
  c.label = doc.value("label", std::string());
  if (!doc.contains("points") || !doc["points"].is_array())
    throw ParseError(c.label + ": missing or non-array field 'points'");
  for (const auto& p : doc["points"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ParseError(c.label + ": 'points' entries must be [time, survival] number pairs");
    c.points.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  if (!doc.contains("risk_table") || !doc["risk_table"].is_array())
    throw ParseError(c.label + ": missing or non-array field 'risk_table'");
  for (const auto& r : doc["risk_table"]) {
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number_integer())
      throw ParseError(c.label + ": 'risk_table' entries must be [time, n_at_risk] pairs");
    c.risk_table.push_back({r[0].get<double>(), r[1].get<long>()});
  }
  if (doc.contains("total_events") && !doc["total_events"].is_null()) {
    if (!doc["total_events"].is_number_integer())
      throw ParseError(c.label + ": 'total_events' must be an integer");
    c.total_events = doc["total_events"].get<long>();
  }
  return detail::finalize_curve(std::move(c), dup_tol);
}

inline DigitizedCurve load_curve_file(const std::string& path, double dup_tol = 0.01) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open curve file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return load_curve(doc, dup_tol);
}

inline nlohmann::json curve_to_json(const DigitizedCurve& c) {
  nlohmann::json doc;
  doc["label"] = c.label;
  auto& pts = doc["points"] = nlohmann::json::array();
  for (const auto& p : c.points)
    pts.push_back({p.time, p.survival});
  auto& rt = doc["risk_table"] = nlohmann::json::array();
  for (const auto& r : c.risk_table)
    rt.push_back({r.time, r.n_at_risk});
  if (c.total_events)
    doc["total_events"] = *c.total_events;
  else
    doc["total_events"] = nullptr;
  return doc;
}

// How deaths were handled in the published progression curve.
enum class DeathHandling { event, censored };

inline DeathHandling death_handling_from_string(const std::string& s) {
  if (s == "death_is_event")
    return DeathHandling::event;
  if (s == "death_is_censored")
    return DeathHandling::censored;
  throw ParseError("death_handling must be 'death_is_event' or 'death_is_censored', got '" + s +
                   "'");
}

inline std::string to_string(DeathHandling h) {
  return h == DeathHandling::event ? "death_is_event" : "death_is_censored";
}

// Progression and overall survival from the same trial arm. The pair is only
// usable when the progression follow-up does not outrun the survival
// follow-up by more than one risk-table reporting interval.
struct TrialCurveSet {
  DigitizedCurve pfs;
  DigitizedCurve os;
  DeathHandling death_handling = DeathHandling::event;
};

inline void check_curve_set(const TrialCurveSet& set) {
  double interval = 0;
  const auto& rt = set.os.risk_table;
  for (std::size_t i = 1; i < rt.size(); ++i)
    interval = std::max(interval, rt[i].time - rt[i - 1].time);
  double pfs_end = set.pfs.points.back().time;
  double os_end = set.os.points.back().time;
  if (pfs_end > os_end + interval)
    throw ValidationError(set.pfs.label +
                          ": progression follow-up exceeds survival follow-up by more than one "
                          "reporting interval");
}

} // namespace seqsim
