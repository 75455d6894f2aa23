#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "microsim.hpp"

namespace seqsim {

struct NmSettings {
  double initial_step = 0.05; // fraction of the box width per coordinate
  double spread_tol = 1e-6;   // relative objective spread across vertices
  double size_tol = 1e-4;     // simplex diameter
  int max_evaluations = 400;
};

struct NmResult {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

// Nelder-Mead with reflection 1, expansion 2, contraction 0.5, shrink 0.5.
// Candidates are clipped to the box coordinate-wise, so the simplex can
// crawl along a face. Exhausting the budget is reported, not thrown.
template <class F>
NmResult nelder_mead_bounded(F&& f, std::vector<double> x0, const std::vector<double>& lo,
                             const std::vector<double>& hi, const NmSettings& settings = {}) {
  const std::size_t dim = x0.size();
  if (dim == 0 || lo.size() != dim || hi.size() != dim)
    throw ParameterError("nelder_mead_bounded: dimension mismatch");
  for (std::size_t i = 0; i < dim; ++i) {
    if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw ParameterError("nelder_mead_bounded: invalid bounds at coordinate " +
                           std::to_string(i));
  }
  auto clip = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < dim; ++i)
      x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
  };
  x0 = clip(std::move(x0));

  NmResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    return f(x);
  };

  std::vector<std::vector<double>> vx;
  std::vector<double> vf;
  vx.push_back(x0);
  vf.push_back(eval(x0));
  for (std::size_t i = 0; i < dim; ++i) {
    auto v = x0;
    double step = settings.initial_step * (hi[i] - lo[i]);
    if (step == 0.0)
      step = settings.initial_step * std::max(1.0, std::abs(x0[i]));
    v[i] = x0[i] + step <= hi[i] ? x0[i] + step : x0[i] - step;
    v = clip(std::move(v));
    vx.push_back(v);
    vf.push_back(eval(v));
  }

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  auto order = [&] {
    std::vector<std::size_t> idx(vx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vf[a] < vf[b]; });
    std::vector<std::vector<double>> nx;
    std::vector<double> nf;
    for (auto i : idx) {
      nx.push_back(std::move(vx[i]));
      nf.push_back(vf[i]);
    }
    vx = std::move(nx);
    vf = std::move(nf);
  };

  while (true) {
    order();
    double spread = vf.back() - vf.front();
    double size = 0;
    for (std::size_t v = 1; v < vx.size(); ++v)
      for (std::size_t i = 0; i < dim; ++i)
        size = std::max(size, std::abs(vx[v][i] - vx[0][i]));
    if (spread < settings.spread_tol * (1.0 + std::abs(vf.front())) ||
        size < settings.size_tol) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= settings.max_evaluations)
      break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t v = 0; v + 1 < vx.size(); ++v)
      for (std::size_t i = 0; i < dim; ++i)
        centroid[i] += vx[v][i];
    for (std::size_t i = 0; i < dim; ++i)
      centroid[i] /= static_cast<double>(dim);

    auto offset = [&](double coef) {
      std::vector<double> x(dim);
      for (std::size_t i = 0; i < dim; ++i)
        x[i] = centroid[i] + coef * (centroid[i] - vx.back()[i]);
      return clip(std::move(x));
    };

    auto xr = offset(alpha);
    double fr = eval(xr);
    if (fr < vf.front()) {
      auto xe = offset(gamma);
      double fe = eval(xe);
      if (fe < fr) {
        vx.back() = std::move(xe);
        vf.back() = fe;
      } else {
        vx.back() = std::move(xr);
        vf.back() = fr;
      }
    } else if (fr < vf[vf.size() - 2]) {
      vx.back() = std::move(xr);
      vf.back() = fr;
    } else {
      auto xc = offset(-rho);
      double fc = eval(xc);
      if (fc < std::min(fr, vf.back())) {
        vx.back() = std::move(xc);
        vf.back() = fc;
      } else {
        for (std::size_t v = 1; v < vx.size(); ++v) {
          for (std::size_t i = 0; i < dim; ++i)
            vx[v][i] = vx[0][i] + sigma * (vx[v][i] - vx[0][i]);
          vx[v] = clip(std::move(vx[v]));
          vf[v] = eval(vx[v]);
          if (result.evaluations >= settings.max_evaluations)
            break;
        }
      }
    }
  }
  order();
  result.x = vx.front();
  result.fx = vf.front();
  return result;
}

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
// truncated once terms drop below 1e-10.
inline double kolmogorov_q(double lambda) {
  if (lambda <= 1e-8)
    return 1.0;
  double sum = 0;
  for (int k = 1; k <= 100000; ++k) {
    double term = std::exp(-2.0 * static_cast<double>(k) * k * lambda * lambda);
    if (term < 1e-10)
      break;
    sum += (k % 2 == 1) ? term : -term;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsStat {
  double d = 0;
  double p = 1;
};

// Sup-norm distance between two curves sampled on a shared grid, with the
// asymptotic p-value at effective sample size n_eff.
inline KsStat ks_lack_of_fit(const std::vector<double>& model, const std::vector<double>& target,
                             double n_eff) {
  if (model.empty() || model.size() != target.size())
    throw ParameterError("ks_lack_of_fit: curves must be non-empty and equal length");
  if (!(n_eff >= 1.0))
    throw ParameterError("ks_lack_of_fit: n_eff must be >= 1");
  KsStat s;
  for (std::size_t i = 0; i < model.size(); ++i)
    s.d = std::max(s.d, std::abs(model[i] - target[i]));
  s.p = kolmogorov_q(std::sqrt(n_eff) * s.d);
  return s;
}

struct CalibrationBounds {
  double theta_lo = 1.0;
  double theta_hi = 20.0;
  double omega_lo = 1.0;
  double omega_hi = 87.0;
};

struct OptimizerSettings {
  NmSettings nm;
  int polish_evaluations = 300;
  // multi-start positions, relative to the box
  std::vector<std::array<double, 2>> starts = {
      {0.0, 0.0}, {0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
};

struct CalibrationProblem {
  ModelSpec spec;
  std::vector<double> target; // survival at cycle boundaries 0..horizon
  CalibrationBounds bounds;
  OptimizerSettings settings;
  double n_eff = 0; // subjects behind the target curve
  int threads = 1;
};

struct CalibrationResult {
  DependenceParams params;
  double sse = std::numeric_limits<double>::infinity();
  KsStat ks;
  long evaluations = 0;
  bool converged = false;
  std::vector<std::array<double, 3>> trace; // theta, omega, sse per evaluation
};

inline double sse_objective(const std::vector<double>& model, const std::vector<double>& target) {
  if (model.size() != target.size())
    throw ParameterError("sse_objective: curve length mismatch");
  double sse = 0;
  for (std::size_t c = 1; c < model.size(); ++c) {
    double d = model[c] - target[c];
    sse += d * d;
  }
  return sse;
}

// Fit (theta, omega) to a target survival curve under common random numbers.
// Multi-start Nelder-Mead finds the basin; a shrinking 8-neighbor pattern
// search then walks the staircase the finite-cohort objective is made of,
// which plain Nelder-Mead tends to stall on. The returned point is the best
// ever evaluated, so the fit can never be worse than any start.
inline CalibrationResult calibrate(const CalibrationProblem& problem) {
  const auto C = static_cast<std::size_t>(problem.spec.horizon_cycles);
  if (problem.target.size() != C + 1)
    throw ParameterError("calibrate: target must have horizon_cycles + 1 entries");
  const auto& b = problem.bounds;
  if (!(b.theta_lo >= 1.0) || !(b.omega_lo >= 1.0) || !(b.theta_lo <= b.theta_hi) ||
      !(b.omega_lo <= b.omega_hi))
    throw ParameterError("calibrate: bounds must satisfy 1 <= lo <= hi");
  if (!(problem.n_eff >= 1.0))
    throw ParameterError("calibrate: n_eff must be >= 1");

  CalibrationResult result;
  std::map<std::pair<double, double>, double> memo;
  std::vector<double> best_x{b.theta_lo, b.omega_lo};
  auto objective = [&](const std::vector<double>& x) {
    auto key = std::make_pair(x[0], x[1]);
    auto it = memo.find(key);
    if (it != memo.end())
      return it->second;
    auto cohort = simulate_cohort(problem.spec, DependenceParams(x[0], x[1]), problem.threads);
    double sse = sse_objective(cohort.os_curve, problem.target);
    memo.emplace(key, sse);
    ++result.evaluations;
    result.trace.push_back({x[0], x[1], sse});
    if (sse < result.sse) {
      result.sse = sse;
      best_x = x;
    }
    return sse;
  };

  const std::vector<double> lo{b.theta_lo, b.omega_lo};
  const std::vector<double> hi{b.theta_hi, b.omega_hi};
  bool any_converged = false;
  for (const auto& s : problem.settings.starts) {
    std::vector<double> x0{b.theta_lo + s[0] * (b.theta_hi - b.theta_lo),
                           b.omega_lo + s[1] * (b.omega_hi - b.omega_lo)};
    auto nm = nelder_mead_bounded(objective, x0, lo, hi, problem.settings.nm);
    any_converged = any_converged || nm.converged;
    if (result.sse == 0.0)
      break;
  }

  // pattern-search polish around the incumbent
  double step_theta = 0.1 * (b.theta_hi - b.theta_lo);
  double step_omega = 0.1 * (b.omega_hi - b.omega_lo);
  const double floor_theta = 1e-7 * std::max(1.0, b.theta_hi - b.theta_lo);
  const double floor_omega = 1e-7 * std::max(1.0, b.omega_hi - b.omega_lo);
  long polish_used = 0;
  bool polish_done = false;
  while (result.sse > 0.0 && polish_used < problem.settings.polish_evaluations) {
    if (step_theta < floor_theta && step_omega < floor_omega) {
      polish_done = true;
      break;
    }
    double f_before = result.sse;
    for (int dt = -1; dt <= 1; ++dt) {
      for (int dw = -1; dw <= 1; ++dw) {
        if (dt == 0 && dw == 0)
          continue;
        std::vector<double> x{std::clamp(best_x[0] + dt * step_theta, b.theta_lo, b.theta_hi),
                              std::clamp(best_x[1] + dw * step_omega, b.omega_lo, b.omega_hi)};
        objective(x);
        ++polish_used;
      }
    }
    if (!(result.sse < f_before)) {
      step_theta *= 0.5;
      step_omega *= 0.5;
    }
  }
  if (result.sse == 0.0 || step_theta < floor_theta)
    polish_done = true;

  result.params = DependenceParams(best_x[0], best_x[1]);
  result.converged = any_converged || polish_done;
  auto final_cohort =
      simulate_cohort(problem.spec, result.params, problem.threads);
  result.ks = ks_lack_of_fit(final_cohort.os_curve, problem.target, problem.n_eff);
  return result;
}

} // namespace seqsim
