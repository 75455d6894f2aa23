// Generates the bundled curve fixtures: five synthetic trial arms with
// realistic shapes, digitized through the library's forward path so the
// fixtures carry exact step coordinates and risk tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqsim/curve.hpp"
#include "seqsim/ipd.hpp"
#include "seqsim/rng.hpp"

namespace {

constexpr std::uint64_t generator_seed = 911803;
constexpr double two_pi = 6.283185307179586;

double round2(double t) { return std::max(0.01, std::round(t * 100.0) / 100.0); }

struct TrialShape {
  std::string stem;    // fixture file stem, e.g. "line1_dct"
  std::uint64_t id;    // stream id
  long n;
  double sigma;        // lognormal frailty spread, couples progression and death
  double weib_shape;
  double median_pfs;   // months
  double pre_death_mean;
  double post_death_mean;
  double censor_lo, censor_hi;
  double risk_spacing, risk_max;
  bool death_is_censored;
};

struct Subject {
  double t_prog, t_death, censor;
};

Subject draw_subject(const TrialShape& s, long i) {
  using seqsim::rng::uniform;
  auto u = [&](int slot) { return uniform(generator_seed, s.id, static_cast<std::uint64_t>(i), slot); };
  double n01 = std::sqrt(-2.0 * std::log(1.0 - u(0))) * std::cos(two_pi * u(1));
  double z = std::exp(s.sigma * n01);
  double scale = s.median_pfs / std::pow(std::log(2.0), 1.0 / s.weib_shape);
  Subject out;
  out.t_prog = scale * std::pow(-std::log(1.0 - u(2)), 1.0 / s.weib_shape) / z;
  double t_pre = -s.pre_death_mean * std::log(1.0 - u(3)) / std::sqrt(z);
  double post = -s.post_death_mean * std::log(1.0 - u(4)) / std::pow(z, 0.7);
  out.t_death = std::min(t_pre, out.t_prog + post);
  out.censor = s.censor_lo + (s.censor_hi - s.censor_lo) * u(5);
  return out;
}

std::vector<double> risk_grid(const TrialShape& s) {
  std::vector<double> g;
  for (double t = 0; t <= s.risk_max + 1e-9; t += s.risk_spacing)
    g.push_back(t);
  return g;
}

void write_curve(const std::filesystem::path& dir, const std::string& name,
                 const seqsim::DigitizedCurve& c) {
  std::ofstream out(dir / (name + ".json"));
  out << seqsim::curve_to_json(c).dump(2) << "\n";
  std::printf("  %-18s n=%-5ld events=%-4ld points=%zu\n", name.c_str(),
              c.risk_table.front().n_at_risk, c.total_events.value_or(-1), c.points.size());
}

void make_trial(const TrialShape& s, const std::filesystem::path& dir) {
  seqsim::ReconstructedIPD pfs, os;
  for (long i = 0; i < s.n; ++i) {
    Subject sub = draw_subject(s, i);
    double t_pfs_event = std::min(sub.t_prog, sub.t_death);
    if (s.death_is_censored) {
      if (sub.t_prog <= std::min(sub.t_death, sub.censor)) {
        pfs.times.push_back(round2(sub.t_prog));
        pfs.indicators.push_back(1);
      } else if (sub.t_death <= sub.censor) {
        pfs.times.push_back(round2(sub.t_death));
        pfs.indicators.push_back(0);
      } else {
        pfs.times.push_back(round2(sub.censor));
        pfs.indicators.push_back(0);
      }
    } else {
      pfs.times.push_back(round2(std::min(t_pfs_event, sub.censor)));
      pfs.indicators.push_back(t_pfs_event <= sub.censor ? 1 : 0);
    }
    os.times.push_back(round2(std::min(sub.t_death, sub.censor)));
    os.indicators.push_back(sub.t_death <= sub.censor ? 1 : 0);
  }
  auto grid = risk_grid(s);
  write_curve(dir, s.stem + "_pfs", seqsim::digitize(pfs, grid, s.stem + " pfs"));
  write_curve(dir, s.stem + "_os", seqsim::digitize(os, grid, s.stem + " os"));
}

void make_ed(const std::filesystem::path& dir) {
  TrialShape s;
  s.stem = "ed";
  s.id = 9;
  s.n = 598;
  s.sigma = 0.4;
  s.censor_lo = 24;
  s.censor_hi = 30;
  s.risk_spacing = 6;
  s.risk_max = 30;
  seqsim::ReconstructedIPD os;
  for (long i = 0; i < s.n; ++i) {
    using seqsim::rng::uniform;
    auto u = [&](int slot) {
      return uniform(generator_seed, s.id, static_cast<std::uint64_t>(i), slot);
    };
    double n01 = std::sqrt(-2.0 * std::log(1.0 - u(0))) * std::cos(two_pi * u(1));
    double z = std::exp(s.sigma * n01);
    double t_death = -16.0 * std::log(1.0 - u(2)) / z;
    double censor = s.censor_lo + (s.censor_hi - s.censor_lo) * u(3);
    os.times.push_back(round2(std::min(t_death, censor)));
    os.indicators.push_back(t_death <= censor ? 1 : 0);
  }
  write_curve(dir, "ed_os", seqsim::digitize(os, risk_grid(s), "ed os"));
}

void write_config(const std::filesystem::path& data_dir) {
  nlohmann::json cfg;
  cfg["seed"] = 20240817;
  cfg["n_patients"] = 8000;
  cfg["horizon_cycles"] = 87;
  cfg["threads"] = 1;
  cfg["cycle_length_days"] = 21.0;
  cfg["epsilon_months"] = 0.01;
  cfg["p_direct_ed"] = 0.10;
  cfg["planned_cycles_line1_dct"] = 6;
  cfg["planned_cycles_line2_dct"] = 10;
  nlohmann::json curves;
  auto entry = [](const std::string& stem, const std::string& handling) {
    nlohmann::json e;
    e["pfs"] = "fixtures/" + stem + "_pfs.json";
    e["os"] = "fixtures/" + stem + "_os.json";
    e["death_handling"] = handling;
    return e;
  };
  curves["line1_dct"] = entry("line1_dct", "death_is_censored");
  curves["line1_aa"] = entry("line1_aa", "death_is_event");
  curves["line2_dct"] = entry("line2_dct", "death_is_event");
  curves["line2_aa"] = entry("line2_aa", "death_is_event");
  curves["ed_os"] = "fixtures/ed_os.json";
  cfg["curves"] = curves;
  cfg["calibration"] = {{"theta_lo", 1.0},
                        {"theta_hi", 20.0},
                        {"omega_lo", 1.0},
                        {"omega_hi", 87.0},
                        {"max_evaluations_per_start", 200},
                        {"polish_evaluations", 220}};
  cfg["pricings"] = {"generic", "branded", "on_patent"};
  std::ofstream out(data_dir / "config.json");
  out << cfg.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv) {
  std::filesystem::path data_dir = argc > 1 ? argv[1] : "data";
  auto fixtures = data_dir / "fixtures";
  std::filesystem::create_directories(fixtures);

  // First-line docetaxel arm: moderate progression control, strong
  // prog/death coupling, deaths censored in the progression figure.
  TrialShape l1_dct{"line1_dct", 1, 397, 0.65, 1.25, 20.0, 120.0, 26.0, 50.0, 63.0, 6.0, 60.0, true};
  // First-line abiraterone arm: longer progression-free interval.
  TrialShape l1_aa{"line1_aa", 2, 597, 0.65, 1.30, 33.0, 130.0, 24.0, 50.0, 63.0, 6.0, 60.0, false};
  // Post-progression docetaxel arm: short PFS, short survival.
  TrialShape l2_dct{"line2_dct", 3, 526, 0.50, 1.10, 8.0, 90.0, 16.0, 28.0, 36.0, 6.0, 36.0, false};
  // Post-progression abiraterone arm.
  TrialShape l2_aa{"line2_aa", 4, 546, 0.50, 1.15, 16.5, 100.0, 22.0, 30.0, 38.0, 6.0, 36.0, false};

  std::printf("writing fixtures to %s\n", fixtures.string().c_str());
  for (const auto& s : {l1_dct, l1_aa, l2_dct, l2_aa})
    make_trial(s, fixtures);
  make_ed(fixtures);
  write_config(data_dir);
  std::printf("wrote %s\n", (data_dir / "config.json").string().c_str());
  return 0;
}
