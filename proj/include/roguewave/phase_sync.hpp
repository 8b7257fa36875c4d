#pragma once

// Nonlinear phase map on the low-mode phases, its fixed point (focusing
// phases), quasi-synchronization events and synthesis of focusing data.

#include <climits>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roguewave/approx.hpp"
#include "roguewave/errors.hpp"
#include "roguewave/hos.hpp"
#include "roguewave/normal_form.hpp"
#include "roguewave/parallel.hpp"
#include "roguewave/random_init.hpp"
#include "roguewave/rng.hpp"
#include "roguewave/stats.hpp"

namespace roguewave {

/// Angle reduced to (-pi, pi].
inline double wrap(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

/// Angle reduced to [0, 2 pi).
inline double wrap_positive(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  return r >= 2.0 * kPi ? 0.0 : r;
}

/// max_j |wrap(a_j - b_j)|
inline double phase_distance(const PhaseVector& a, const PhaseVector& b) {
  if (a.j_max() != b.j_max()) throw ConfigError("phase distance: band mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(wrap(a.values()[i] - b.values()[i])));
  return m;
}

enum class PhaseBackend { integrable, reference };

inline std::string to_string(PhaseBackend b) { return b == PhaseBackend::integrable ? "integrable" : "reference"; }

inline PhaseBackend phase_backend_from_string(const std::string& s) {
  if (s == "integrable") return PhaseBackend::integrable;
  if (s == "reference") return PhaseBackend::reference;
  throw ConfigError("unknown phase backend '" + s + "' (expected integrable or reference)");
}

struct PhaseMapConfig {
  double t_target = 50.0;
  int n_sync = 0;      ///< synchronized pairs 0 < |j| <= N; 0 means floor(eps^-gamma) clamped to [1, J]
  double gamma = 0.5;  ///< exponent of the default N
  PhaseBackend backend = PhaseBackend::integrable;
  double tol = 1e-8;  ///< radians
  int max_iter = 50;
  double damping = 1.0;
  HosConfig hos;

  int resolved_n(const SeaSpec& spec) const {
    if (n_sync > 0) return n_sync;
    const double raw = spec.epsilon > 0.0 ? std::floor(std::pow(spec.epsilon, -gamma)) : double(spec.j_max);
    return static_cast<int>(std::clamp(raw, 1.0, double(spec.j_max)));
  }

  /// Default neighbourhood size for quasi-synchronization.
  double default_alpha() const { return 10.0 * tol; }

  void validate(const SeaSpec& spec) const {
    if (!(t_target >= 0.0) || !std::isfinite(t_target)) throw ConfigError("sync: t_target must be >= 0");
    if (n_sync < 0) throw ConfigError("sync: n_sync must be >= 0");
    if (resolved_n(spec) > spec.j_max) throw ConfigError("sync: n_sync exceeds j_max");
    if (!(gamma > 0.0)) throw ConfigError("sync: gamma must be positive");
    if (!(tol > 0.0)) throw ConfigError("sync: tol must be positive");
    if (max_iter < 1) throw ConfigError("sync: max_iter must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("sync: damping must lie in (0, 1]");
    if (backend == PhaseBackend::reference) hos.validate(spec.j_max);
  }
};

inline nlohmann::json to_json(const PhaseMapConfig& c) {
  return {{"t_target", c.t_target}, {"n_sync", c.n_sync},     {"gamma", c.gamma},
          {"backend", to_string(c.backend)}, {"tol", c.tol},   {"max_iter", c.max_iter},
          {"damping", c.damping},   {"hos", to_json(c.hos)}};
}

inline PhaseMapConfig phase_map_config_from_json(const nlohmann::json& j, PhaseMapConfig base = {}) {
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("t_target", base.t_target);
  read("n_sync", base.n_sync);
  read("gamma", base.gamma);
  if (j.contains("backend")) base.backend = phase_backend_from_string(j.at("backend").get<std::string>());
  read("tol", base.tol);
  read("max_iter", base.max_iter);
  read("damping", base.damping);
  if (j.contains("hos")) base.hos = hos_config_from_json(j.at("hos"), base.hos);
  return base;
}

/// Solver failure while evaluating the phase map; records the offending phases.
class PhaseMapFailure : public IntegrationFailure {
 public:
  PhaseMapFailure(const IntegrationFailure& cause, PhaseVector phi)
      : IntegrationFailure(std::string("phase map: ") + cause.what(), cause.time()), phi_(std::move(phi)) {}
  const PhaseVector& phi() const noexcept { return phi_; }

 private:
  PhaseVector phi_;
};

/// T(phi)_j = int_0^t L_j(I(zeta(tau))) dtau mod 2 pi, for data whose low-mode
/// phases are phi and whose moduli and high modes come from the sample.
/// Reference-backend evaluations are cached by phi.
class PhaseMap {
 public:
  PhaseMap(SeaSpec spec, SeaSample sample, PhaseMapConfig cfg)
      : spec_(std::move(spec)), sample_(std::move(sample)), cfg_(std::move(cfg)), n_(cfg_.resolved_n(spec_)) {
    cfg_.validate(spec_);
    if (sample_.j_max() != spec_.j_max) throw ConfigError("phase map: sample band differs from spec");
  }

  int n_sync() const noexcept { return n_; }
  const PhaseMapConfig& config() const noexcept { return cfg_; }
  std::size_t solves() const noexcept { return solves_; }

  PhaseVector operator()(const PhaseVector& phi) {
    if (phi.j_max() != n_) throw ConfigError("phase map: expected phases for 0 < |j| <= " + std::to_string(n_));
    if (cfg_.backend == PhaseBackend::integrable) return integrable();
    std::vector<double> key(phi.values().begin(), phi.values().end());
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    auto out = reference(phi);
    cache_.emplace(std::move(key), out);
    return out;
  }

 private:
  PhaseVector reduce(const ModeArray<double, PhaseIntegralTag>& theta, double scale) const {
    PhaseVector out(n_);
    for (int j = -n_; j <= n_; ++j)
      if (j != 0) out[j] = wrap_positive(scale * theta[j]);
    return out;
  }

  // Actions do not depend on phases, so the map is constant.
  PhaseVector integrable() const {
    const auto L = nonlinear_frequencies(actions(initial_zeta(spec_, sample_)));
    PhaseIntegrals theta(L.j_max(), std::vector<double>(L.values().begin(), L.values().end()));
    return reduce(theta, cfg_.t_target);
  }

  PhaseVector reference(const PhaseVector& phi) {
    HosConfig hos = cfg_.hos;
    hos.snapshot_stride = INT_MAX;
    PhaseAccumulator acc;
    try {
      evolve(build_initial_state(spec_, sample_, phi), cfg_.t_target, hos, std::ref(acc));
    } catch (const IntegrationFailure& e) {
      throw PhaseMapFailure(e, phi);
    }
    ++solves_;
    return reduce(acc.ledger().at(cfg_.t_target), 1.0);
  }

  SeaSpec spec_;
  SeaSample sample_;
  PhaseMapConfig cfg_;
  int n_;
  std::map<std::vector<double>, PhaseVector> cache_;
  std::size_t solves_ = 0;
};

inline PhaseVector phase_map(const SeaSpec& spec, const SeaSample& sample, const PhaseVector& phi,
                             const PhaseMapConfig& cfg) {
  return PhaseMap(spec, sample, cfg)(phi);
}

struct SyncResult {
  PhaseVector phi_star;
  int iterations = 0;
  double residual = 0.0;     ///< max_j |wrap(phi*_j - T_j(phi*))|
  double contraction = 0.0;  ///< largest ratio of successive residuals
  std::vector<double> history;
  bool converged = false;
};

inline nlohmann::json to_json(const SyncResult& r) {
  nlohmann::json phases = nlohmann::json::array();
  for (double v : r.phi_star.values()) phases.push_back(v);
  return {{"n_sync", r.phi_star.j_max()}, {"phi_star", phases},          {"iterations", r.iterations},
          {"residual", r.residual},       {"contraction", r.contraction}, {"history", r.history},
          {"converged", r.converged}};
}

/// Damped iteration phi <- phi + theta wrap(T(phi) - phi), started from the
/// linear focusing phases t |j|^{1/2}. The sample's own low-mode phases are never read.
inline SyncResult find_fixed_point(PhaseMap& map, const std::optional<PhaseVector>& start = std::nullopt) {
  const auto& cfg = map.config();
  const int N = map.n_sync();
  PhaseVector phi(N);
  if (start) {
    if (start->j_max() != N) throw ConfigError("fixed point: start phases have the wrong band");
    phi = *start;
  } else {
    for (int j = -N; j <= N; ++j)
      if (j != 0) phi[j] = wrap_positive(cfg.t_target * std::sqrt(std::abs(j)));
  }
  SyncResult res;
  for (int k = 0;; ++k) {
    const auto T = map(phi);
    const double r = phase_distance(phi, T);
    res.history.push_back(r);
    if (r < cfg.tol || k == cfg.max_iter) {
      res.iterations = k;
      res.residual = r;
      res.converged = r < cfg.tol;
      break;
    }
    for (std::size_t i = 0; i < phi.size(); ++i)
      phi.values()[i] = wrap_positive(phi.values()[i] + cfg.damping * wrap(T.values()[i] - phi.values()[i]));
  }
  res.phi_star = std::move(phi);
  for (std::size_t k = 0; k + 1 < res.history.size(); ++k)
    if (res.history[k] > 0.0 && res.history[k + 1] > 1e-14)
      res.contraction = std::max(res.contraction, res.history[k + 1] / res.history[k]);
  return res;
}

inline SyncResult find_fixed_point(const SeaSpec& spec, const SeaSample& sample, const PhaseMapConfig& cfg) {
  PhaseMap map(spec, sample, cfg);
  return find_fixed_point(map);
}

/// Initial state with the low-mode phases replaced by phi*.
inline SurfaceState synthesize_rogue_seed(const SeaSpec& spec, const SeaSample& sample, const SyncResult& sync) {
  if (!sync.converged) throw ConfigError("rogue seed: fixed-point iteration did not converge");
  return build_initial_state(spec, sample, sync.phi_star);
}

/// (eps / sqrt(pi)) sum_{0<|j|<=N} c_j R_j: crest height when the first N pairs align at x = 0.
inline double focused_bound(const SeaSpec& spec, const SeaSample& sample, int N) {
  double acc = 0.0;
  for (int j = -N; j <= N; ++j)
    if (j != 0) acc += spec.c(j) * sample.moduli[j];
  return spec.epsilon / std::sqrt(kPi) * acc;
}

/// True iff max_j |wrap(phi_j - phi*_j)| < alpha.
inline bool quasi_sync_event(const PhaseVector& phi, const PhaseVector& phi_star, double alpha) {
  if (!(alpha > 0.0 && alpha < kPi)) throw ConfigError("quasi-sync: alpha must lie in (0, pi)");
  return phase_distance(phi, phi_star) < alpha;
}

/// (alpha / pi)^{2N}
inline double quasi_sync_probability(double alpha, int N) { return std::pow(alpha / kPi, 2.0 * N); }

struct LipschitzReport {
  double constant = 0.0;     ///< max ||T(phi) - T(phi')|| / ||phi - phi'|| (sup norms, wrapped)
  double bound_shape = 0.0;  ///< N R^2 eps^{2(1-delta)}, the bound without its unknown constants
  int directions = 0;
};

/// Random pairs phi, phi' = phi + step u with u uniform in [-1, 1]^{2N}.
inline LipschitzReport lipschitz_probe(PhaseMap& map, const SeaSpec& spec, int n_directions, std::uint64_t seed,
                                       double step = 0.5) {
  if (n_directions < 1) throw ConfigError("lipschitz probe: need at least one direction");
  const int N = map.n_sync();
  Stream rng(seed, 0, StreamPurpose::probe);
  LipschitzReport rep;
  rep.directions = n_directions;
  rep.bound_shape = N * spec.ball_radius * spec.ball_radius * std::pow(spec.epsilon, 2.0 * (1.0 - spec.delta));
  for (int d = 0; d < n_directions; ++d) {
    PhaseVector a(N), b(N);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.values()[i] = rng.phase();
      b.values()[i] = wrap_positive(a.values()[i] + step * (2.0 * rng.uniform() - 1.0));
    }
    const double dphi = phase_distance(a, b);
    if (dphi == 0.0) continue;
    rep.constant = std::max(rep.constant, phase_distance(map(a), map(b)) / dphi);
  }
  return rep;
}

struct FactorizationResult {
  std::size_t n = 0;
  std::size_t hits_a = 0, hits_n = 0, hits_an = 0;
  double q = 0.0;          ///< (alpha / pi)^{2N}
  double residual = 0.0;   ///< |P(A and N) - P(A) q|
  double std_error = 0.0;  ///< standard error of the residual
  double p_value_n = 0.0;  ///< binomial test of P(N) = q

  double p_a() const { return double(hits_a) / double(n); }
  double p_n() const { return double(hits_n) / double(n); }
  double p_an() const { return double(hits_an) / double(n); }
};

inline nlohmann::json to_json(const FactorizationResult& r) {
  return {{"n", r.n},
          {"p_a", r.p_a()},
          {"p_n", r.p_n()},
          {"p_an", r.p_an()},
          {"q", r.q},
          {"residual", r.residual},
          {"std_error", r.std_error},
          {"p_value_n", r.p_value_n}};
}

/// A = {sum_{0<|j|<=J} c_j R_j >= threshold} depends on the moduli only; N(alpha)
/// compares the sample's low-mode phases with the fixed point for its moduli.
inline FactorizationResult factorization_check(const SeaSpec& spec, const PhaseMapConfig& cfg, double alpha,
                                               double threshold, std::size_t n, std::uint64_t seed,
                                               unsigned workers = 1) {
  if (!(alpha > 0.0 && alpha <= kPi)) throw ConfigError("factorization: alpha must lie in (0, pi]");
  if (n == 0) throw ConfigError("factorization: need at least one sample");
  cfg.validate(spec);
  const int N = cfg.resolved_n(spec);
  struct Flags {
    char a = 0, nn = 0;
  };
  const auto flags = parallel_map(n, workers, [&](std::size_t i) {
    const auto sample = sample_sea(spec, seed, i);
    double sum = 0.0;
    for (int j = -spec.j_max; j <= spec.j_max; ++j)
      if (j != 0) sum += spec.c(j) * sample.moduli[j];
    const auto sync = find_fixed_point(spec, sample, cfg);
    const bool in_n = alpha >= kPi || phase_distance(low_mode_phases(sample, N), sync.phi_star) < alpha;
    return Flags{char(sum >= threshold), char(in_n)};
  });
  FactorizationResult r;
  r.n = n;
  r.q = quasi_sync_probability(std::min(alpha, kPi), N);
  double s1 = 0.0, s2 = 0.0;
  for (const auto& f : flags) {
    r.hits_a += f.a;
    r.hits_n += f.nn;
    r.hits_an += f.a && f.nn;
    const double y = double(f.a && f.nn) - r.q * double(f.a);
    s1 += y;
    s2 += y * y;
  }
  const double mean = s1 / double(n);
  r.residual = std::abs(mean);
  r.std_error = n > 1 ? std::sqrt(std::max(0.0, (s2 - n * mean * mean) / double(n - 1)) / double(n)) : 0.0;
  r.p_value_n = r.q < 1.0 ? stats::binomial_test(r.hits_n, n, r.q).p_value : 1.0;
  return r;
}

/// (t, sup_x eta) at every stored snapshot.
inline std::vector<std::pair<double, double>> crest_history(const Trajectory& tr) {
  std::vector<std::pair<double, double>> out;
  const auto grid = TorusGrid::for_band(tr.j_max());
  for (std::size_t i = 0; i < tr.size(); ++i) out.emplace_back(tr.times[i], sup_eval(tr.states[i].eta, grid).value);
  return out;
}

}  // namespace roguewave
