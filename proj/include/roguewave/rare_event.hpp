#pragma once

// Tail probabilities of sea states: naive and importance-sampled Monte Carlo,
// large-deviation rates, the Chernoff bound on leaving the initial-data ball,
// distribution tests of the rotated amplitudes and focusing-event rates.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "roguewave/approx.hpp"
#include "roguewave/errors.hpp"
#include "roguewave/hos.hpp"
#include "roguewave/normal_form.hpp"
#include "roguewave/parallel.hpp"
#include "roguewave/phase_sync.hpp"
#include "roguewave/random_init.hpp"
#include "roguewave/rng.hpp"
#include "roguewave/stats.hpp"

namespace roguewave {

struct TailEstimate {
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::size_t hits = 0;
  std::string method = "naive";
  double tilt = 0.0;
  double ess = 0.0;  ///< effective sample size of the weights (naive: n)
  bool ess_warning = false;
  double log_rate = std::numeric_limits<double>::quiet_NaN();  ///< eps^{2 delta} log p_hat when set

  double log_p() const { return std::log(p_hat); }
};

inline nlohmann::json to_json(const TailEstimate& e) {
  nlohmann::json j = {{"p_hat", e.p_hat},         {"ci_low", e.ci_low}, {"ci_high", e.ci_high},
                      {"std_error", e.std_error}, {"n_samples", e.n_samples}, {"hits", e.hits},
                      {"method", e.method},       {"tilt", e.tilt},     {"ess", e.ess},
                      {"ess_warning", e.ess_warning}};
  j["log_rate"] = std::isfinite(e.log_rate) ? nlohmann::json(e.log_rate) : nlohmann::json(nullptr);
  return j;
}

/// Binomial proportion with a Wilson 95% interval; zero hits uses the rule of three.
inline TailEstimate proportion_estimate(std::size_t hits, std::size_t n) {
  if (n == 0) throw ConfigError("tail estimate: no samples");
  TailEstimate e;
  e.n_samples = n;
  e.hits = hits;
  e.p_hat = double(hits) / double(n);
  e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / double(n));
  e.ess = double(n);
  if (hits == 0) {
    e.ci_low = 0.0;
    e.ci_high = std::min(1.0, 3.0 / double(n));
  } else {
    const auto ci = stats::wilson(hits, n);
    e.ci_low = std::min(ci.low, e.p_hat);
    e.ci_high = std::max(ci.high, e.p_hat);
  }
  return e;
}

struct RateTheory {
  double rogue_rate = 0.0;          ///< -lambda0^2 / (2 sigma^2)
  double rayleigh_sum_rate = 0.0;   ///< -lambda0^2 / sum_{0<|j|<=J} c_j^2 for the event sum c_j R_j >= lambda0 eps^-delta
  double chernoff_exponent = 0.0;   ///< 1 - R^2 eps^{-2 delta} / (4 ||c||^2_{h^s})
};

inline RateTheory rate_theory(const SeaSpec& spec, double lambda0) {
  spec.validate();
  RateTheory r;
  r.rogue_rate = -lambda0 * lambda0 / (2.0 * spec.sigma_squared());
  r.rayleigh_sum_rate = -lambda0 * lambda0 / spec.c_l2_squared();
  r.chernoff_exponent = 1.0 - spec.ball_radius * spec.ball_radius * std::pow(spec.epsilon, -2.0 * spec.delta) /
                                  (4.0 * spec.c_hs_norm_squared());
  return r;
}

inline nlohmann::json to_json(const RateTheory& r) {
  return {{"rogue_rate", r.rogue_rate},
          {"rayleigh_sum_rate", r.rayleigh_sum_rate},
          {"chernoff_exponent", r.chernoff_exponent}};
}

/// Fraction of samples 0..n-1 for which `event` holds.
template <class Event>
TailEstimate mc_tail(const SeaSpec& spec, Event&& event, std::size_t n, std::uint64_t seed, unsigned workers = 1) {
  if (n < 100) throw ConfigError("mc_tail: need at least 100 samples");
  spec.validate();
  const auto flags = parallel_map(n, workers, [&](std::size_t i) { return char(event(sample_sea(spec, seed, i))); });
  std::size_t hits = 0;
  for (char f : flags) hits += f;
  return proportion_estimate(hits, n);
}

// ---------------------------------------------------------------------------
// Tilted Rayleigh sums

namespace tilt_detail {

// K(a) = int_0^inf 2 r e^{-(r-a)^2} dr = e^{-a^2} + a sqrt(pi) (1 + erf a)
inline double kernel_mass(double a) { return std::exp(-a * a) + a * std::sqrt(kPi) * boost::math::erfc(-a); }

// int_0^inf 2 r^2 e^{-(r-a)^2} dr
inline double kernel_first_moment(double a) {
  return a * std::exp(-a * a) + 0.5 * std::sqrt(kPi) * boost::math::erfc(-a) * (1.0 + 2.0 * a * a);
}

// int_0^r 2 s e^{-(s-a)^2} ds
inline double kernel_cdf(double r, double a) {
  return std::exp(-a * a) - std::exp(-(r - a) * (r - a)) +
         a * std::sqrt(kPi) * (boost::math::erf(r - a) + boost::math::erf(a));
}

}  // namespace tilt_detail

/// log E[e^{t R}] for R with density 2 r e^{-r^2}: Z(t) = 1 + (t sqrt(pi)/2) e^{t^2/4} (1 + erf(t/2)).
inline double rayleigh_log_mgf(double t) {
  if (!(t >= 0.0)) throw ConfigError("rayleigh mgf: tilt must be >= 0");
  const double a = 0.5 * t;
  return a * a + std::log(tilt_detail::kernel_mass(a));
}

/// Mean of R under the tilted density proportional to e^{t r} 2 r e^{-r^2}.
inline double tilted_rayleigh_mean(double t) {
  const double a = 0.5 * t;
  return tilt_detail::kernel_first_moment(a) / tilt_detail::kernel_mass(a);
}

/// Inverse-CDF draw from the tilted density 2 r e^{-(r-a)^2} / K(a), a = t/2.
inline double sample_tilted_rayleigh(double t, double u) {
  const double a = 0.5 * t;
  if (a == 0.0) return std::sqrt(-std::log1p(-u));
  const double target = u * tilt_detail::kernel_mass(a);
  auto f = [&](double r) { return tilt_detail::kernel_cdf(r, a) - target; };
  double hi = a + 1.0;
  while (f(hi) < 0.0) hi += 1.0 + hi;
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto [lo, up] = boost::math::tools::toms748_solve(f, 0.0, hi, -target, f(hi), tol, iters);
  return 0.5 * (lo + up);
}

/// Tilt t with sum_j c_j E_t[R_j] = threshold (tilted mean on the threshold), by bisection.
inline std::optional<double> solve_tilt(const std::vector<double>& c, double threshold) {
  auto mean = [&](double t) {
    double m = 0.0;
    for (double cj : c) m += cj * tilted_rayleigh_mean(t * cj);
    return m;
  };
  if (mean(0.0) >= threshold) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (mean(hi) < threshold) {
    hi *= 2.0;
    if (hi > 1e8) return std::nullopt;
  }
  for (int k = 0; k < 200 && hi - lo > 1e-13 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mean(mid) < threshold ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Importance-sampled P(sum_j c_j R_j >= threshold) for i.i.d. R_j with density
/// 2 r e^{-r^2}. Each R_j is drawn from the exponentially tilted law with
/// parameter tilt c_j and weighted by the exact likelihood ratio. With no tilt
/// given, it is solved so that the tilted mean sits on the threshold; a failed
/// solve falls back to `fallback_tilt`.
inline TailEstimate tilted_rayleigh_tail(const std::vector<double>& c, double threshold, std::size_t n,
                                         std::uint64_t seed, std::optional<double> tilt = std::nullopt,
                                         double fallback_tilt = 0.0, unsigned workers = 1) {
  if (c.empty()) throw ConfigError("tilted tail: no weights");
  for (double cj : c)
    if (!(cj > 0.0)) throw ConfigError("tilted tail: weights must be positive");
  if (n < 100) throw ConfigError("tilted tail: need at least 100 samples");
  double t = tilt ? *tilt : solve_tilt(c, threshold).value_or(fallback_tilt);
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("tilted tail: tilt must be finite and >= 0");
  double log_z = 0.0;
  for (double cj : c) log_z += rayleigh_log_mgf(t * cj);

  const auto weights = parallel_map(n, workers, [&](std::size_t i) {
    Stream rng(seed, i, StreamPurpose::tilted);
    double sum = 0.0;
    for (double cj : c) sum += cj * sample_tilted_rayleigh(t * cj, rng.uniform());
    return sum >= threshold ? std::exp(log_z - t * sum) : 0.0;
  });

  TailEstimate e;
  e.method = t > 0.0 ? "tilted" : "naive";
  e.tilt = t;
  e.n_samples = n;
  double s1 = 0.0, s2 = 0.0;
  for (double w : weights) {
    s1 += w;
    s2 += w * w;
    e.hits += w > 0.0;
  }
  e.p_hat = s1 / double(n);
  const double var = std::max(0.0, s2 / double(n) - e.p_hat * e.p_hat);
  e.std_error = std::sqrt(var / double(n));
  e.ess = s2 > 0.0 ? s1 * s1 / s2 : 0.0;
  e.ess_warning = e.ess < 0.01 * double(n);
  if (e.hits == 0) {
    e.ci_high = std::min(1.0, 3.0 / double(n) * std::exp(log_z - t * threshold));
    e.ci_low = 0.0;
  } else {
    e.ci_low = std::max(0.0, e.p_hat - 1.959963984540054 * e.std_error);
    e.ci_high = std::min(1.0, e.p_hat + 1.959963984540054 * e.std_error);
  }
  return e;
}

/// -log(p) / threshold^2, the finite-threshold Rayleigh-sum rate.
inline double extracted_rate(const TailEstimate& e, double threshold) { return -std::log(e.p_hat) / (threshold * threshold); }

// ---------------------------------------------------------------------------
// Rogue-wave tails

enum class EvolutionModel { linear, integrable, reference };

inline std::string to_string(EvolutionModel m) {
  switch (m) {
    case EvolutionModel::linear: return "linear";
    case EvolutionModel::integrable: return "integrable";
    case EvolutionModel::reference: return "reference";
  }
  return "?";
}

inline EvolutionModel evolution_model_from_string(const std::string& s) {
  if (s == "linear") return EvolutionModel::linear;
  if (s == "integrable") return EvolutionModel::integrable;
  if (s == "reference") return EvolutionModel::reference;
  throw ConfigError("unknown evolution model '" + s + "' (expected linear, integrable or reference)");
}

/// zeta_j e^{-i |j|^{1/2} t}
inline ComplexSpectrum linear_flow(const ComplexSpectrum& z0, double t) {
  ComplexSpectrum out = z0;
  for (int j = -z0.j_max(); j <= z0.j_max(); ++j)
    if (j != 0) out[j] *= std::polar(1.0, -std::sqrt(std::abs(j)) * t);
  return out;
}

struct RogueStudyConfig {
  std::vector<double> epsilons{0.05};
  double lambda0 = 0.4588;
  double t = 0.0;
  std::size_t n = 100000;
  EvolutionModel model = EvolutionModel::integrable;
  /// Reference model: only samples whose integrable-flow crest exceeds
  /// (1 - screen_margin) times the threshold are evolved with the solver.
  double screen_margin = 0.1;
  bool require_ball = true;  ///< intersect the event with the initial-data ball
  HosConfig hos;

  void validate() const {
    if (epsilons.empty()) throw ConfigError("rogue study: no epsilon values");
    for (double e : epsilons)
      if (!(e > 0.0)) throw ConfigError("rogue study: epsilon must be positive");
    if (!(lambda0 >= 0.0)) throw ConfigError("rogue study: lambda0 must be >= 0");
    if (!(t >= 0.0)) throw ConfigError("rogue study: t must be >= 0");
    if (n < 100) throw ConfigError("rogue study: need at least 100 samples");
    if (!(screen_margin > 0.0 && screen_margin < 1.0)) throw ConfigError("rogue study: screen_margin must lie in (0, 1)");
  }
};

struct RogueStudyRow {
  double epsilon = 0.0;
  double t = 0.0;
  double threshold = 0.0;  ///< lambda0 eps^{1-delta}
  TailEstimate estimate;
  double theory_rate = 0.0;      ///< -lambda0^2 / (2 sigma^2)
  double theory_exponent = 0.0;  ///< theory_rate eps^{-2 delta}
  std::size_t solver_runs = 0;   ///< reference model: samples passed to the solver
  double max_screen_gap = 0.0;   ///< max |sup eta_ref - sup eta_app| over solver runs
  bool screen_valid = true;      ///< max_screen_gap <= screen_margin threshold / 2
  std::size_t outside_ball = 0;
};

inline nlohmann::json to_json(const RogueStudyRow& r) {
  return {{"epsilon", r.epsilon},
          {"t", r.t},
          {"threshold", r.threshold},
          {"estimate", to_json(r.estimate)},
          {"theory_rate", r.theory_rate},
          {"theory_exponent", r.theory_exponent},
          {"solver_runs", r.solver_runs},
          {"max_screen_gap", r.max_screen_gap},
          {"screen_valid", r.screen_valid},
          {"outside_ball", r.outside_ball}};
}

/// P(sup_x eta(t, x) >= lambda0 eps^{1-delta}) by direct Monte Carlo, one row per epsilon.
inline std::vector<RogueStudyRow> rogue_rate_study(const SeaSpec& base, const RogueStudyConfig& cfg, std::uint64_t seed,
                                                   unsigned workers = 1) {
  cfg.validate();
  std::vector<RogueStudyRow> rows;
  for (double eps : cfg.epsilons) {
    SeaSpec spec = base;
    spec.epsilon = eps;
    spec.validate();
    if (cfg.model == EvolutionModel::reference) cfg.hos.validate(spec.j_max);
    const double level = cfg.lambda0 * std::pow(eps, 1.0 - spec.delta);
    const auto grid = TorusGrid::for_band(spec.j_max);

    struct Outcome {
      char hit = 0, solved = 0, outside = 0;
      double gap = 0.0;
    };
    const auto outcomes = parallel_map(cfg.n, workers, [&](std::size_t i) {
      Outcome o;
      const auto z0 = initial_zeta(spec, sample_sea(spec, seed, i));
      if (cfg.require_ball && !in_ball_B0(spec, from_complex_variable(z0)).inside) {
        o.outside = 1;
        return o;
      }
      switch (cfg.model) {
        case EvolutionModel::linear:
          o.hit = sup_eval(eta_from_complex(linear_flow(z0, cfg.t)), grid).value >= level;
          break;
        case EvolutionModel::integrable:
          o.hit = sup_eval(eta_app(cfg.t, z0), grid).value >= level;
          break;
        case EvolutionModel::reference: {
          const double approx = sup_eval(eta_app(cfg.t, z0), grid).value;
          if (approx < (1.0 - cfg.screen_margin) * level) break;
          HosConfig h = cfg.hos;
          h.snapshot_stride = INT_MAX;
          const auto tr = evolve(from_complex_variable(z0), cfg.t, h);
          const double exact = sup_eval(tr.final_state().eta, grid).value;
          o.solved = 1;
          o.gap = std::abs(exact - approx);
          o.hit = exact >= level;
          break;
        }
      }
      return o;
    });

    RogueStudyRow row;
    row.epsilon = eps;
    row.t = cfg.t;
    row.threshold = level;
    std::size_t hits = 0;
    for (const auto& o : outcomes) {
      hits += o.hit;
      row.solver_runs += o.solved;
      row.outside_ball += o.outside;
      row.max_screen_gap = std::max(row.max_screen_gap, o.gap);
    }
    row.screen_valid = row.max_screen_gap <= 0.5 * cfg.screen_margin * level;
    row.estimate = proportion_estimate(hits, cfg.n);
    if (hits > 0) row.estimate.log_rate = std::pow(eps, 2.0 * spec.delta) * row.estimate.log_p();
    row.theory_rate = rate_theory(spec, cfg.lambda0).rogue_rate;
    row.theory_exponent = row.theory_rate * std::pow(eps, -2.0 * spec.delta);
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Gaussian tail asymptotic (s / (z sqrt(2 pi))) e^{-z^2 / 2 s^2} with s = eps sigma.
inline double gaussian_tail_asymptotic(double z, double s) {
  return s / (z * std::sqrt(2.0 * kPi)) * std::exp(-z * z / (2.0 * s * s));
}

// ---------------------------------------------------------------------------
// Chernoff bound on leaving the initial-data ball

struct ChernoffReport {
  double exponent = 0.0;  ///< 1 - R^2 eps^{-2 delta} / (4 ||c||^2_{h^s})
  double bound = 0.0;     ///< min(1, e^exponent)
  TailEstimate outside;   ///< empirical P(outside the ball)
  bool violated = false;  ///< Wilson lower end above the bound
  /// KS tests of X_j / E X_j against Exp(1), X_j = |j|^{2s+1/2} eps^{-2} |zeta_0j|^2.
  std::vector<std::pair<int, stats::TestResult>> exponential_laws;
};

inline nlohmann::json to_json(const ChernoffReport& r) {
  nlohmann::json laws = nlohmann::json::array();
  for (const auto& [j, res] : r.exponential_laws)
    laws.push_back({{"j", j}, {"ks_statistic", res.statistic}, {"p_value", res.p_value}});
  return {{"exponent", r.exponent},
          {"bound", r.bound},
          {"outside", to_json(r.outside)},
          {"violated", r.violated},
          {"exponential_laws", laws}};
}

inline ChernoffReport chernoff_ball_bound(const SeaSpec& spec, std::size_t n, std::uint64_t seed,
                                          const std::vector<int>& law_modes = {1, -1, 2}, unsigned workers = 1) {
  spec.validate();
  if (n < 100) throw ConfigError("chernoff: need at least 100 samples");
  ChernoffReport r;
  r.exponent = rate_theory(spec, 0.0).chernoff_exponent;
  r.bound = std::min(1.0, std::exp(r.exponent));
  for (int j : law_modes)
    if (j == 0 || std::abs(j) > spec.j_max) throw ConfigError("chernoff: law mode outside the band");

  struct Draw {
    char outside = 0;
    std::vector<double> x;
  };
  const auto draws = parallel_map(n, workers, [&](std::size_t i) {
    const auto sample = sample_sea(spec, seed, i);
    const auto z0 = initial_zeta(spec, sample);
    Draw d;
    d.outside = !in_ball_B0(spec, from_complex_variable(z0)).inside;
    for (int j : law_modes) {
      const double aj = std::abs(j);
      const double x = std::pow(aj, 2.0 * spec.s + 0.5) * std::norm(z0[j]) / (spec.epsilon * spec.epsilon);
      d.x.push_back(x / (spec.c(j) * spec.c(j) * std::pow(aj, 2.0 * spec.s)));
    }
    return d;
  });
  std::size_t outside = 0;
  for (const auto& d : draws) outside += d.outside;
  r.outside = proportion_estimate(outside, n);
  r.violated = r.outside.hits > 0 && r.outside.ci_low > r.bound;
  for (std::size_t k = 0; k < law_modes.size(); ++k) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = draws[i].x[k];
    r.exponential_laws.emplace_back(law_modes[k], stats::ks_test(xs, [](double x) { return x <= 0 ? 0.0 : -std::expm1(-x); }));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Gaussianity of the rotated amplitudes w_j = zeta_0j e^{-i t L_j(I(zeta_0))}

struct ModeLawReport {
  int j = 0;
  stats::TestResult ks_re, ks_im, phase_uniform, modulus_phase;
  bool passed(double level = 0.01) const {
    return ks_re.passed(level) && ks_im.passed(level) && phase_uniform.passed(level) && modulus_phase.passed(level);
  }
};

struct CrossPhaseReport {
  int j = 0, k = 0;
  stats::TestResult result;
};

struct GaussianityReport {
  double t = 0.0;
  std::size_t n = 0;
  bool adversarial = false;
  std::vector<ModeLawReport> modes;
  std::vector<CrossPhaseReport> cross;

  bool passed(double level = 0.01) const {
    for (const auto& m : modes)
      if (!m.passed(level)) return false;
    for (const auto& c : cross)
      if (!c.result.passed(level)) return false;
    return true;
  }
  bool uniformity_passed(double level = 0.01) const {
    for (const auto& m : modes)
      if (!m.phase_uniform.passed(level)) return false;
    return true;
  }
};

inline nlohmann::json to_json(const GaussianityReport& r) {
  auto tr = [](const stats::TestResult& x) { return nlohmann::json{{"statistic", x.statistic}, {"p_value", x.p_value}}; };
  nlohmann::json modes = nlohmann::json::array(), cross = nlohmann::json::array();
  for (const auto& m : r.modes)
    modes.push_back({{"j", m.j},
                     {"ks_re", tr(m.ks_re)},
                     {"ks_im", tr(m.ks_im)},
                     {"phase_uniform", tr(m.phase_uniform)},
                     {"modulus_phase", tr(m.modulus_phase)}});
  for (const auto& c : r.cross) cross.push_back({{"j", c.j}, {"k", c.k}, {"test", tr(c.result)}});
  return {{"t", r.t}, {"n", r.n}, {"adversarial", r.adversarial}, {"modes", modes}, {"cross", cross}, {"passed", r.passed()}};
}

/// With `adversarial`, the rotation angle t L_j is replaced by arg(zeta_0j) / 2,
/// a phase-dependent rotation that must break uniformity.
inline GaussianityReport gaussianity_preservation_test(const SeaSpec& spec, double t, const std::vector<int>& modes,
                                                       std::size_t n, std::uint64_t seed, bool adversarial = false,
                                                       unsigned workers = 1) {
  spec.validate();
  if (n < 10000) throw ConfigError("gaussianity test: need at least 10^4 samples");
  if (modes.empty()) throw ConfigError("gaussianity test: no modes");
  for (int j : modes)
    if (j == 0 || std::abs(j) > spec.j_max) throw ConfigError("gaussianity test: mode outside the band");
  const auto w = parallel_map(n, workers, [&](std::size_t i) {
    const auto z0 = initial_zeta(spec, sample_sea(spec, seed, i));
    std::vector<cplx> out;
    if (adversarial) {
      for (int j : modes) out.push_back(z0[j] * std::polar(1.0, -0.5 * wrap_positive(std::arg(z0[j]))));
    } else {
      const auto u = integrable_flow(z0, t);
      for (int j : modes) out.push_back(u[j]);
    }
    return out;
  });

  GaussianityReport rep;
  rep.t = t;
  rep.n = n;
  rep.adversarial = adversarial;
  std::vector<std::vector<double>> phases(modes.size(), std::vector<double>(n));
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const int j = modes[m];
    const double sd = spec.epsilon * spec.c(j) * std::pow(std::abs(j), -0.25) / std::sqrt(2.0);
    boost::math::normal law(0.0, sd);
    auto cdf = [&](double x) { return boost::math::cdf(law, x); };
    std::vector<double> re(n), im(n), mod(n), cosp(n);
    for (std::size_t i = 0; i < n; ++i) {
      re[i] = w[i][m].real();
      im[i] = w[i][m].imag();
      mod[i] = std::abs(w[i][m]);
      phases[m][i] = wrap_positive(std::arg(w[i][m]));
      cosp[i] = std::cos(phases[m][i]);
    }
    ModeLawReport r;
    r.j = j;
    r.ks_re = stats::ks_test(re, cdf);
    r.ks_im = stats::ks_test(im, cdf);
    r.phase_uniform = stats::chi2_uniform(phases[m], 0.0, 2.0 * kPi);
    r.modulus_phase = stats::correlation_test(mod, phases[m]);
    rep.modes.push_back(r);
  }
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t b = a + 1; b < modes.size(); ++b)
      rep.cross.push_back({modes[a], modes[b], stats::correlation_test(phases[a], phases[b])});
  return rep;
}

// ---------------------------------------------------------------------------
// Joint rogue and phase-alignment events on synchronized ensembles

/// max_{1<=j<=M} |wrap(arg eta_j)|: distance of the first M Fourier phases of eta from 0.
inline double fourier_phase_misalignment(const RealSpectrum& eta, int M) {
  double m = 0.0;
  for (int j = 1; j <= M; ++j) m = std::max(m, std::abs(wrap(std::arg(eta.positive(j)))));
  return m;
}

struct FocusingEventConfig {
  double t = 20.0;
  double lambda0 = 0.4588;
  int M = 1;                ///< aligned Fourier modes 1..M of eta
  double tol_phase = 0.1;   ///< radians
  double alpha = 0.01;      ///< half-width of the phase neighbourhood around phi*
  bool synchronized = true; ///< false: keep the samples' own phases
  std::size_t n = 10000;
  EvolutionModel model = EvolutionModel::integrable;
  PhaseMapConfig sync;      ///< t_target is overwritten by t

  void validate(const SeaSpec& spec) const {
    if (!(t >= 0.0)) throw ConfigError("focusing: t must be >= 0");
    if (M < 1) throw ConfigError("focusing: M must be >= 1");
    if (M > sync.resolved_n(spec)) throw ConfigError("focusing: M must not exceed N");
    if (!(tol_phase > 0.0 && tol_phase <= kPi)) throw ConfigError("focusing: tol_phase must lie in (0, pi]");
    if (!(alpha > 0.0 && alpha < kPi)) throw ConfigError("focusing: alpha must lie in (0, pi)");
    if (n < 100) throw ConfigError("focusing: need at least 100 samples");
  }
};

struct FocusingEventResult {
  TailEstimate joint;      ///< rogue and aligned
  TailEstimate rogue;      ///< rogue only
  TailEstimate aligned;    ///< aligned only
  double threshold = 0.0;  ///< lambda0 eps^{1-delta}
  double theory_rate = 0.0;
};

inline nlohmann::json to_json(const FocusingEventResult& r) {
  return {{"joint", to_json(r.joint)},
          {"rogue", to_json(r.rogue)},
          {"aligned", to_json(r.aligned)},
          {"threshold", r.threshold},
          {"theory_rate", r.theory_rate}};
}

/// Synchronized ensemble: low-mode phases phi* + U(-alpha, alpha), phi* the
/// fixed point for each sample's moduli; moduli and high modes stay random.
inline FocusingEventResult dispersive_focusing_event_rate(const SeaSpec& spec, const FocusingEventConfig& cfg_in,
                                                          std::uint64_t seed, unsigned workers = 1) {
  spec.validate();
  FocusingEventConfig cfg = cfg_in;
  cfg.sync.t_target = cfg.t;
  cfg.validate(spec);
  cfg.sync.validate(spec);
  const double level = cfg.lambda0 * std::pow(spec.epsilon, 1.0 - spec.delta);
  const auto grid = TorusGrid::for_band(spec.j_max);

  struct Flags {
    char rogue = 0, aligned = 0;
  };
  const auto flags = parallel_map(cfg.n, workers, [&](std::size_t i) {
    const auto sample = sample_sea(spec, seed, i);
    std::optional<PhaseVector> phases;
    if (cfg.synchronized) {
      const auto sync = find_fixed_point(spec, sample, cfg.sync);
      if (!sync.converged) throw IntegrationFailure("focusing: fixed point did not converge for sample " + std::to_string(i), cfg.t);
      Stream rng(seed, i, StreamPurpose::phases);
      phases = sync.phi_star;
      for (auto& v : phases->values()) v = wrap_positive(v + cfg.alpha * (2.0 * rng.uniform() - 1.0));
    }
    const auto z0 = initial_zeta(spec, sample, phases ? &*phases : nullptr);
    RealSpectrum eta;
    switch (cfg.model) {
      case EvolutionModel::linear: eta = eta_from_complex(linear_flow(z0, cfg.t)); break;
      case EvolutionModel::integrable: eta = eta_app(cfg.t, z0); break;
      case EvolutionModel::reference: {
        HosConfig h = cfg.sync.hos;
        h.snapshot_stride = INT_MAX;
        eta = evolve(from_complex_variable(z0), cfg.t, h).final_state().eta;
        break;
      }
    }
    Flags f;
    f.rogue = sup_eval(eta, grid).value >= level;
    f.aligned = fourier_phase_misalignment(eta, cfg.M) < cfg.tol_phase;
    return f;
  });
  std::size_t joint = 0, rogue = 0, aligned = 0;
  for (const auto& f : flags) {
    joint += f.rogue && f.aligned;
    rogue += f.rogue;
    aligned += f.aligned;
  }
  FocusingEventResult r;
  r.joint = proportion_estimate(joint, cfg.n);
  r.rogue = proportion_estimate(rogue, cfg.n);
  r.aligned = proportion_estimate(aligned, cfg.n);
  r.threshold = level;
  r.theory_rate = rate_theory(spec, cfg.lambda0).rogue_rate;
  return r;
}

}  // namespace roguewave
