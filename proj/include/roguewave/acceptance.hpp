#pragma once

// The ten end-to-end acceptance checks. Each returns a pass flag and a one-line
// summary of the measured numbers; run_acceptance prints one line per check.

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roguewave/approx.hpp"
#include "roguewave/hos.hpp"
#include "roguewave/normal_form.hpp"
#include "roguewave/phase_sync.hpp"
#include "roguewave/random_init.hpp"
#include "roguewave/rare_event.hpp"
#include "roguewave/stats.hpp"

namespace roguewave::acceptance {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;

  CheckResult() = default;
  CheckResult(int id_, std::string name_) : id(id_), name(std::move(name_)) {}
};

namespace detail {

inline std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

inline ComplexSpectrum gaussian_z(int J, std::uint64_t seed, double amp) {
  Stream rng(seed, 0, StreamPurpose::probe);
  ComplexSpectrum z(J);
  for (auto& c : z.values()) c = amp * cplx(rng.gaussian(), rng.gaussian());
  return z;
}

// Random sea rescaled so that max |eta_x| equals `steepness`.
inline SurfaceState sea_with_steepness(int J, double steepness, std::uint64_t seed) {
  SeaSpec spec;
  spec.j_max = J;
  spec.epsilon = 1.0;
  const auto s = build_initial_state(spec, sample_sea(spec, seed, 0));
  return (steepness / sup_abs(derivative(s.eta), TorusGrid::for_band(J))) * s;
}

inline double max_diff(const ComplexSpectrum& a, const ComplexSpectrum& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace detail

/// Finite-difference gradient of H4 against (L_k - |k|^{1/2}) z_k.
inline CheckResult check_normal_form() {
  CheckResult r{1, "normal-form transcription"};
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto z = detail::gaussian_z(8, seed, 0.3);
    for (int k = -8; k <= 8; ++k)
      if (k != 0) worst = std::max(worst, gradient_consistency(z, k, 1e-5));
  }
  r.passed = worst <= 1e-8;
  r.detail = detail::fmt("max |FD grad H4 - (L_k - sqrt|k|) z_k| = %.2e over 20 states (limit 1e-8)", worst);
  return r;
}

/// Phase rotation rate of a single mode under the solver against the Stokes correction.
inline CheckResult check_stokes() {
  CheckResult r{2, "Stokes frequency"};
  const int J = 32;
  double worst_rel = 0.0, worst_identity = 0.0;
  for (int k : {1, 2, 3}) {
    for (double ka : {0.01, 0.02}) {
      const double a = ka / k;
      ComplexSpectrum z(J);
      z[k] = std::sqrt(kPi * a * a / std::sqrt(double(k)));
      const double stokes = std::sqrt(double(k)) * (1.0 + ka * ka / 2.0);
      worst_identity = std::max(worst_identity, std::abs(nonlinear_frequency(k, actions(z)) - stokes));
      HosConfig c;
      c.snapshot_stride = 5;
      const auto tr = evolve(from_complex_variable(z), 30.0, c);
      std::vector<double> t, phase;
      double prev = 0.0, unwrapped = 0.0;
      for (std::size_t i = 0; i < tr.size(); ++i) {
        const double p = std::arg(tr.zeta(i)[k]);
        if (i) unwrapped += wrap(p - prev);
        prev = p;
        t.push_back(tr.times[i]);
        phase.push_back(unwrapped);
      }
      const double rate = -stats::fit_slope(t, phase);
      worst_rel = std::max(worst_rel, std::abs(rate - stokes) / stokes);
    }
  }
  r.passed = worst_rel <= 0.03 && worst_identity <= 1e-12;
  r.detail = detail::fmt("max rel. rate error %.2e (limit 3e-2), |L_k - Stokes| = %.1e (limit 1e-12)", worst_rel,
                         worst_identity);
  return r;
}

inline CheckResult check_conservation() {
  CheckResult r{3, "conservation and symmetry"};
  const auto s0 = detail::sea_with_steepness(32, 0.05, 3);
  const auto tr = evolve(s0, 20.0, HosConfig{});
  const auto& c0 = tr.conserved.front();
  double dh = 0.0, dp = 0.0, dm = 0.0;
  for (const auto& c : tr.conserved) {
    dh = std::max(dh, std::abs(c.hamiltonian - c0.hamiltonian) / std::abs(c0.hamiltonian));
    dp = std::max(dp, std::abs(c.momentum - c0.momentum) / std::abs(c0.momentum));
    // Mean relative to the elevation scale.
    dm = std::max(dm, std::abs(c.eta_mean) / sup_abs(s0.eta, TorusGrid::for_band(32)));
  }
  HosConfig coarse;
  coarse.dt = 0.05;
  const auto rev = reversibility_check(detail::sea_with_steepness(16, 0.05, 5), 5.0, coarse);
  const double shift = 0.731;
  const auto a = evolve(translate(s0, shift), 5.0, HosConfig{}).final_state();
  const auto b = translate(evolve(s0, 5.0, HosConfig{}).final_state(), shift);
  const double trans = state_distance(a, b);
  const auto s1 = detail::sea_with_steepness(32, 0.05, 4);
  auto run = [&](double dt) {
    HosConfig c;
    c.dt = dt;
    return evolve(s1, 5.0, c).final_state();
  };
  const auto ref = run(0.0025);
  std::vector<double> dts, errs;
  for (double dt : {0.04, 0.02, 0.01}) {
    dts.push_back(dt);
    errs.push_back(state_distance(run(dt), ref));
  }
  const double slope = stats::loglog_slope(dts, errs);
  r.passed = dh <= 1e-8 && dp <= 1e-8 && dm <= 1e-8 && rev.residual <= 10.0 * rev.integrator_error &&
             trans <= 1e-10 && std::abs(slope - 4.0) <= 0.3;
  r.detail = detail::fmt(
      "drift H %.1e P %.1e mean %.1e; reversibility %.1e vs 10x %.1e; translation %.1e; RK4 slope %.2f", dh, dp, dm,
      rev.residual, 10.0 * rev.integrator_error, trans, slope);
  return r;
}

inline CheckResult check_integrable_flow() {
  CheckResult r{4, "integrable flow exactness"};
  const auto z = detail::gaussian_z(10, 4, 0.2);
  const auto I0 = actions(z);
  double worst = 0.0;
  for (double t : {0.5, 7.0, 100.0}) {
    const auto zt = integrable_flow(z, t);
    const auto It = actions(zt);
    for (std::size_t i = 0; i < I0.size(); ++i)
      worst = std::max(worst, std::abs(It.values()[i] - I0.values()[i]) / I0.values()[i]);
    for (double s : {0.0, 0.5, 1.0, 2.0, 4.0})
      worst = std::max(worst, std::abs(sobolev_norm(zt, s) - sobolev_norm(z, s)) / sobolev_norm(z, s));
  }
  const auto zr = detail::gaussian_z(8, 5, 0.1);
  const auto exact = integrable_flow(zr, 5.0);
  std::vector<double> dts, errs;
  for (double dt : {0.02, 0.01, 0.005}) {
    dts.push_back(dt);
    errs.push_back(detail::max_diff(rk4_flow(zr, 5.0, dt), exact));
  }
  const double slope = stats::loglog_slope(dts, errs);
  r.passed = worst <= 1e-12 && std::abs(slope - 4.0) <= 0.3;
  r.detail = detail::fmt("max rel. change of actions and H^s norms %.1e (limit 1e-12); RK4 slope %.2f", worst, slope);
  return r;
}

inline CheckResult check_approximation_scaling() {
  CheckResult r{5, "approximation scaling"};
  SeaSpec spec;
  spec.j_max = 32;
  spec.b = 1.0;
  std::vector<double> eps, errs;
  double app80 = 0.0, app2_80 = 0.0;
  const double t_long = 80.0;
  for (double e : {0.02, 0.04, 0.08}) {
    spec.epsilon = e;
    const auto z0 = initial_zeta(spec, sample_sea(spec, 1, 0));
    const bool last = e == 0.08;
    PhaseAccumulator acc;
    const auto tr = evolve(from_complex_variable(z0), last ? t_long : 10.0, HosConfig{}, std::ref(acc));
    eps.push_back(e);
    errs.push_back(approximation_error(tr, 10.0, Approximation::app).sup);
    if (last) {
      app80 = approximation_error(tr, t_long, Approximation::app).sup;
      app2_80 = approximation_error(tr, t_long, Approximation::app2, &acc.ledger()).sup;
    }
  }
  const double slope = stats::loglog_slope(eps, errs);
  r.passed = std::abs(slope - 2.0) <= 0.3 && app2_80 <= 1.05 * app80;
  r.detail = detail::fmt("sup-error slope %.2f at t = 10 (2 +- 0.3); at eps 0.08, t = 80 (t eps^2 = %.2f): app2 %.3e vs "
                         "1.05 app %.3e",
                         slope, t_long * 0.08 * 0.08, app2_80, 1.05 * app80);
  return r;
}

inline CheckResult check_gaussianity(unsigned workers) {
  CheckResult r{6, "Gaussianity preservation"};
  SeaSpec spec;
  const auto rep = gaussianity_preservation_test(spec, 7.3, {1, -1, 3}, 20000, 6, false, workers);
  const auto adv = gaussianity_preservation_test(spec, 7.3, {1, -1, 3}, 20000, 6, true, workers);
  double min_p = 1.0;
  for (const auto& m : rep.modes)
    for (const auto* t : {&m.ks_re, &m.ks_im, &m.phase_uniform, &m.modulus_phase}) min_p = std::min(min_p, t->p_value);
  for (const auto& c : rep.cross) min_p = std::min(min_p, c.result.p_value);
  double adv_p = 1.0;
  for (const auto& m : adv.modes) adv_p = std::min(adv_p, m.phase_uniform.p_value);
  r.passed = rep.passed(0.01) && !adv.passed(0.01);
  r.detail = detail::fmt("smallest p-value %.3f over %zu tests (level 0.01); adversarial uniformity p = %.1e", min_p,
                         rep.modes.size() * 4 + rep.cross.size(), adv_p);
  return r;
}

inline CheckResult check_rayleigh_ldp(unsigned workers) {
  CheckResult r{7, "Rayleigh-sum large deviations"};
  const double c1 = std::exp(-1.0);
  double worst_z = 0.0;
  std::uint64_t seed = 70;
  for (double p : {1e-4, 1e-7, 1e-10}) {
    const auto e = tilted_rayleigh_tail({c1}, c1 * std::sqrt(-std::log(p)), 20000, seed++, std::nullopt, 0.0, workers);
    worst_z = std::max(worst_z, std::abs(e.p_hat - p) / e.std_error);
  }
  std::vector<double> c;
  double s2 = 0.0;
  for (int j = 1; j <= 8; ++j) {
    c.push_back(std::exp(-j));
    s2 += c.back() * c.back();
  }
  // Threshold with P = 1e-10: start from the rate guess, then correct with the estimate.
  const double target = std::log(1e-10);
  double x = std::sqrt(-target * s2);
  TailEstimate e;
  for (int it = 0; it < 4; ++it) {
    e = tilted_rayleigh_tail(c, x, 20000, 80, std::nullopt, 0.0, workers);
    x *= std::sqrt(target / e.log_p());
  }
  e = tilted_rayleigh_tail(c, x, 20000, 81, std::nullopt, 0.0, workers);
  const double rel = std::abs(extracted_rate(e, x) * s2 - 1.0);
  r.passed = worst_z <= 3.0 && rel <= 0.15;
  r.detail = detail::fmt("single weight max |z| = %.2f (limit 3); 8 weights at p = %.1e: rate off by %.1f%% (limit 15%%)",
                         worst_z, e.p_hat, 100.0 * rel);
  return r;
}

inline CheckResult check_quasi_sync(unsigned workers) {
  CheckResult r{8, "quasi-synchronization event and factorization"};
  SeaSpec spec;
  PhaseMapConfig cfg;
  double min_p = 1.0, worst_sigma = 0.0;
  for (int N : {1, 2}) {
    cfg.n_sync = N;
    const auto f = factorization_check(spec, cfg, kPi / 4, 1.0, 100000, 80 + N, workers);
    min_p = std::min(min_p, f.p_value_n);
    worst_sigma = std::max(worst_sigma, f.residual / f.std_error);
  }
  r.passed = min_p >= 0.01 && worst_sigma <= 3.0;
  r.detail = detail::fmt("binomial p-value min %.3f (level 0.01); factorization residual max %.2f sigma (limit 3)",
                         min_p, worst_sigma);
  return r;
}

inline CheckResult check_phase_sync(unsigned workers) {
  CheckResult r{9, "phase synchronization and rogue synthesis"};
  SeaSpec spec;
  spec.epsilon = 0.04;
  PhaseMapConfig cfg;
  cfg.backend = PhaseBackend::reference;
  cfg.n_sync = 8;
  cfg.t_target = 50.0;
  cfg.max_iter = 20;
  struct Outcome {
    int iterations = 0;
    double ratio = 0.0;
    char ok = 0;
  };
  const auto grid = TorusGrid::for_band(spec.j_max);
  const auto out = parallel_map(20, workers, [&](std::size_t i) {
    const auto sample = sample_sea(spec, 9, i);
    const auto sync = find_fixed_point(spec, sample, cfg);
    Outcome o;
    o.iterations = sync.iterations;
    if (!sync.converged) return o;
    HosConfig h = cfg.hos;
    h.snapshot_stride = INT_MAX;
    const auto tr = evolve(synthesize_rogue_seed(spec, sample, sync), cfg.t_target, h);
    o.ratio = sup_eval(tr.final_state().eta, grid).value / focused_bound(spec, sample, cfg.n_sync);
    o.ok = o.ratio >= 0.9;
    return o;
  });
  int ok = 0, max_it = 0;
  double min_ratio = 1e300;
  for (const auto& o : out) {
    ok += o.ok;
    max_it = std::max(max_it, o.iterations);
    min_ratio = std::min(min_ratio, o.ratio);
  }
  r.passed = ok == 20;
  r.detail = detail::fmt("%d/20 seeds focus; max iterations %d (limit 20); min crest / bound %.3f (limit 0.9)", ok,
                         max_it, min_ratio);
  return r;
}

inline CheckResult check_rogue_tail(unsigned workers, std::size_t n = 1000000) {
  CheckResult r{10, "mild-rarity rogue tail"};
  SeaSpec spec;
  spec.epsilon = 0.05;
  spec.delta = 0.2;
  spec.j_max = 14;
  RogueStudyConfig cfg;
  cfg.n = n;
  // lambda0 with lambda0^2 eps^{-2 delta} / (2 sigma^2) = 7
  cfg.lambda0 = std::sqrt(7.0 * 2.0 * spec.sigma_squared() * std::pow(spec.epsilon, 2.0 * spec.delta));
  cfg.t = 0.0;
  cfg.model = EvolutionModel::integrable;
  const auto r0 = rogue_rate_study(spec, cfg, 10, workers).front();
  cfg.t = 20.0;
  cfg.model = EvolutionModel::reference;
  cfg.hos.dt = 0.05;
  cfg.screen_margin = 0.15;
  const auto r20 = rogue_rate_study(spec, cfg, 10, workers).front();
  const double theory = r0.theory_exponent;
  const double rel0 = r0.estimate.hits ? std::abs(r0.estimate.log_p() / theory - 1.0) : 1.0;
  const double rel20 = r20.estimate.hits ? std::abs(r20.estimate.log_p() / theory - 1.0) : 1.0;
  const double bound = std::exp(rate_theory(spec, cfg.lambda0).chernoff_exponent);
  const auto outside = proportion_estimate(r0.outside_ball, n);
  bool chernoff_ok = outside.hits == 0 || outside.ci_low <= bound;
  for (double R : {1.0, 1.5, 2.0}) {
    SeaSpec s = spec;
    s.ball_radius = R;
    chernoff_ok = chernoff_ok && !chernoff_ball_bound(s, 100000, 11, {1}, workers).violated;
  }
  r.passed = rel0 <= 0.25 && rel20 <= 0.35 && r20.screen_valid && chernoff_ok;
  r.detail = detail::fmt(
      "theory %.2f; log p t=0 %.2f (%.0f%%, limit 25%%), t=20 %.2f (%.0f%%, limit 35%%); %zu solver runs, screen gap "
      "%.1f%% of level; Chernoff %s",
      theory, r0.estimate.log_p(), 100 * rel0, r20.estimate.log_p(), 100 * rel20, r20.solver_runs,
      100 * r20.max_screen_gap / r20.threshold, chernoff_ok ? "respected" : "VIOLATED");
  return r;
}

/// Runs the selected checks (all when empty), printing one line each.
inline std::vector<CheckResult> run_acceptance(unsigned workers, const std::vector<int>& only = {},
                                               std::FILE* out = stdout) {
  const std::vector<std::function<CheckResult()>> checks = {
      [] { return check_normal_form(); },
      [] { return check_stokes(); },
      [] { return check_conservation(); },
      [] { return check_integrable_flow(); },
      [] { return check_approximation_scaling(); },
      [&] { return check_gaussianity(workers); },
      [&] { return check_rayleigh_ldp(workers); },
      [&] { return check_quasi_sync(workers); },
      [&] { return check_phase_sync(workers); },
      [&] { return check_rogue_tail(workers); },
  };
  std::vector<CheckResult> results;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), int(i + 1)) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult res;
    try {
      res = checks[i]();
    } catch (const std::exception& e) {
      res.id = int(i + 1);
      res.name = "check " + std::to_string(i + 1);
      res.detail = std::string("exception: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out) {
      std::fprintf(out, "[%s] %2d %s: %s (%.1f s)\n", res.passed ? "PASS" : "FAIL", res.id, res.name.c_str(),
                   res.detail.c_str(), res.seconds);
      std::fflush(out);
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace roguewave::acceptance
