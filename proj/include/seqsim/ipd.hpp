#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "step_function.hpp"

namespace seqsim {

// Patient-level observations recovered from a published curve: one row per
// subject, indicator 1 for an event and 0 for censoring.
struct ReconstructedIPD {
  std::vector<double> times;
  std::vector<int> indicators;

  std::size_t n_subjects() const { return times.size(); }
  long n_events() const {
    long n = 0;
    for (int d : indicators)
      n += d == 1;
    return n;
  }
};

// Product-limit estimate. The returned step function carries a leading
// (0, 1) knot so it can be evaluated anywhere on [0, inf).
inline StepFunction km_estimate(const std::vector<double>& times,
                                const std::vector<int>& indicators) {
  if (times.size() != indicators.size())
    throw ParameterError("km_estimate: times and indicators differ in length");
  if (times.empty())
    throw ParameterError("km_estimate: no observations");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  StepFunction s;
  s.times.push_back(0.0);
  s.values.push_back(1.0);
  double surv = 1.0;
  std::size_t i = 0;
  long at_risk = static_cast<long>(times.size());
  while (i < order.size()) {
    double t = times[order[i]];
    long d = 0, removed = 0;
    while (i < order.size() && times[order[i]] == t) {
      d += indicators[order[i]] == 1;
      ++removed;
      ++i;
    }
    if (d > 0) {
      surv *= static_cast<double>(at_risk - d) / static_cast<double>(at_risk);
      if (t == 0.0) {
        s.values.back() = surv;
      } else {
        s.times.push_back(t);
        s.values.push_back(surv);
      }
    }
    at_risk -= removed;
  }
  return s;
}

// Forward pass: produce the curve a figure digitizer would hand back for this
// data set, with exact step coordinates and exact risk-table counts.
inline DigitizedCurve digitize(const ReconstructedIPD& ipd, const std::vector<double>& risk_times,
                               const std::string& label = std::string()) {
  if (risk_times.empty())
    throw ParameterError("digitize: risk_times empty");
  StepFunction s = km_estimate(ipd.times, ipd.indicators);
  DigitizedCurve c;
  c.label = label;
  for (std::size_t i = 0; i < s.times.size(); ++i)
    c.points.push_back({s.times[i], s.values[i]});
  for (double rt : risk_times) {
    long n = 0;
    for (double t : ipd.times)
      n += t >= rt;
    c.risk_table.push_back({rt, n});
  }
  c.total_events = ipd.n_events();
  return detail::finalize_curve(std::move(c), 0.01);
}

namespace detail {

struct IntervalPlan {
  bool feasible = false;
  long implied_end = 0;
  double km_end = 1.0;
  std::vector<long> events_per_click;
};

// Walk one inter-risk-time interval with a fixed number of censorings placed
// at evenly spaced interior quantiles, deriving integer event counts from the
// published survival drops.
inline IntervalPlan plan_interval(const std::vector<CurvePoint>& pts, std::size_t click_lo,
                                  std::size_t click_hi, double t_lo, double t_hi, long ncen,
                                  double km_prev, long n_start) {
  IntervalPlan plan;
  plan.events_per_click.assign(click_hi - click_lo, 0);
  double km = km_prev;
  long n = n_start;
  long placed = 0;
  auto censor_time = [&](long j) { return t_lo + (t_hi - t_lo) * (j + 1) / (ncen + 1); };
  for (std::size_t k = click_lo; k < click_hi; ++k) {
    double t = pts[k].time;
    double target = pts[k].survival;
    while (placed < ncen && censor_time(placed) < t) {
      if (n == 0)
        return plan;
      --n;
      ++placed;
    }
    if (km <= 0.0 || n == 0) {
      if (km - target > 1e-9)
        return plan;
      continue;
    }
    long d = std::llround(n * (1.0 - target / km));
    d = std::clamp(d, 0L, n);
    if (d > 0) {
      km *= static_cast<double>(n - d) / static_cast<double>(n);
      n -= d;
    }
    plan.events_per_click[k - click_lo] = d;
  }
  while (placed < ncen) {
    if (n == 0)
      return plan;
    --n;
    ++placed;
  }
  plan.feasible = true;
  plan.implied_end = n;
  plan.km_end = km;
  return plan;
}

} // namespace detail

// Invert a digitized curve into patient-level data. Between consecutive
// risk-table entries the censoring count is chosen so the implied number at
// risk lands as close as possible to the published count (ties resolved
// toward fewer censorings), with censoring times spread across the interval
// and events pinned to the curve's drop coordinates.
inline ReconstructedIPD reconstruct(const DigitizedCurve& curve) {
  const auto& pts = curve.points;
  const auto& rt = curve.risk_table;
  if (rt.size() < 2)
    throw ParameterError(curve.label + ": reconstruct needs at least two risk-table entries");
  ReconstructedIPD out;
  double km_prev = 1.0;
  long n_cur = rt.front().n_at_risk;
  std::size_t click = 0;
  while (click < pts.size() && pts[click].time < rt.front().time)
    ++click; // excluded by validation, kept for safety
  for (std::size_t i = 0; i + 1 < rt.size(); ++i) {
    double t_lo = rt[i].time, t_hi = rt[i + 1].time;
    std::size_t click_lo = click;
    while (click < pts.size() && pts[click].time < t_hi)
      ++click;
    std::size_t click_hi = click;
    long target = rt[i + 1].n_at_risk;
    detail::IntervalPlan best;
    long best_ncen = -1;
    long best_disc = 0;
    for (long ncen = 0; ncen <= n_cur; ++ncen) {
      auto plan = detail::plan_interval(pts, click_lo, click_hi, t_lo, t_hi, ncen, km_prev, n_cur);
      if (!plan.feasible)
        continue;
      long disc = std::labs(plan.implied_end - target);
      if (best_ncen < 0 || disc < best_disc) {
        best = std::move(plan);
        best_ncen = ncen;
        best_disc = disc;
        if (disc == 0)
          break;
      }
    }
    if (best_ncen < 0)
      throw ReconstructionError(curve.label + ": no feasible censoring count in interval " +
                                std::to_string(i) + " [" + std::to_string(t_lo) + ", " +
                                std::to_string(t_hi) + ")");
    // merge events and censorings chronologically, events first on ties
    std::size_t k = click_lo;
    long j = 0;
    auto censor_time = [&](long jj) { return t_lo + (t_hi - t_lo) * (jj + 1) / (best_ncen + 1); };
    while (k < click_hi || j < best_ncen) {
      bool take_event = k < click_hi &&
                        (j >= best_ncen || pts[k].time <= censor_time(j));
      if (take_event) {
        for (long e = 0; e < best.events_per_click[k - click_lo]; ++e) {
          out.times.push_back(pts[k].time);
          out.indicators.push_back(1);
        }
        ++k;
      } else {
        out.times.push_back(censor_time(j));
        out.indicators.push_back(0);
        ++j;
      }
    }
    km_prev = best.km_end;
    n_cur = best.implied_end;
  }
  // final segment: clicks past the last risk time yield events only, and
  // whoever is left is censored at the end of follow-up
  for (; click < pts.size(); ++click) {
    double target = pts[click].survival;
    if (km_prev <= 0.0 || n_cur == 0) {
      if (km_prev - target > 1e-9)
        throw ReconstructionError(curve.label +
                                  ": curve drops after the risk set is exhausted (final segment)");
      continue;
    }
    long d = std::llround(n_cur * (1.0 - target / km_prev));
    d = std::clamp(d, 0L, n_cur);
    if (d > 0) {
      km_prev *= static_cast<double>(n_cur - d) / static_cast<double>(n_cur);
      n_cur -= d;
      for (long e = 0; e < d; ++e) {
        out.times.push_back(pts[click].time);
        out.indicators.push_back(1);
      }
    }
  }
  double t_end = std::max(pts.back().time, rt.back().time);
  for (long e = 0; e < n_cur; ++e) {
    out.times.push_back(t_end);
    out.indicators.push_back(0);
  }
  return out;
}

} // namespace seqsim
