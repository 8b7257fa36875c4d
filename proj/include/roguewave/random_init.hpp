#pragma once

// Random Gaussian seas: coefficient ladders, samplers in polar form, the
// partially randomized data with deterministic low-mode phases, and the
// initial-data ball.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "roguewave/errors.hpp"
#include "roguewave/rng.hpp"
#include "roguewave/spectral.hpp"

namespace roguewave {

struct ModulusTag {};
struct PhaseTag {};
using ModulusVector = ModeArray<double, ModulusTag>;
/// Phases indexed like a spectrum; j_max is the number of mode pairs covered.
using PhaseVector = ModeArray<double, PhaseTag>;

struct SeaSpec {
  double epsilon = 0.05;
  double delta = 0.2;
  double b = 1.0;  ///< decay rate of c_j = exp(-|j| b)
  int j_max = 16;
  /// Radius R of the initial-data ball, in units of epsilon^{1-delta}. Not
  /// fixed by the theory; 10 is a conservative default.
  double ball_radius = 10.0;
  double s = 1.0;  ///< Sobolev index of the ball
  /// Optional user ladder c_1..c_J (symmetric in j). Empty means exp(-|j| b).
  std::vector<double> custom_c;

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("sea: epsilon must be >= 0");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("sea: delta must lie in (0, 1)");
    if (!(b > 0.0)) throw ConfigError("sea: b must be positive");
    if (j_max < 1) throw ConfigError("sea: j_max must be positive");
    if (!(ball_radius > 0.0)) throw ConfigError("sea: ball_radius must be positive");
    if (!std::isfinite(s)) throw ConfigError("sea: s must be finite");
    if (!custom_c.empty() && custom_c.size() != static_cast<std::size_t>(j_max))
      throw ConfigError("sea: custom_c must list c_1..c_J");
  }

  double c(int j) const {
    const int a = std::abs(j);
    if (!custom_c.empty()) return custom_c.at(static_cast<std::size_t>(a - 1));
    return std::exp(-a * b);
  }
  /// d_n = n^{-1/2} c_n
  double d(int n) const { return c(n) / std::sqrt(static_cast<double>(std::abs(n))); }

  /// (1/pi) sum_{n=1}^{J} c_n^2
  double sigma_squared() const {
    double acc = 0.0;
    for (int n = 1; n <= j_max; ++n) acc += c(n) * c(n);
    return acc / kPi;
  }
  double sigma() const { return std::sqrt(sigma_squared()); }

  /// sum_{0<|j|<=J} |j|^{2s} c_j^2
  double c_hs_norm_squared() const {
    double acc = 0.0;
    for (int n = 1; n <= j_max; ++n) acc += 2.0 * std::pow(n, 2.0 * s) * c(n) * c(n);
    return acc;
  }

  /// sum_{0<|j|<=J} c_j^2
  double c_l2_squared() const { return kPi * sigma_squared() * 2.0; }
};

struct SigmaTheory {
  double infinite;   ///< J = infinity, closed-form geometric series
  double truncated;  ///< sum up to J
};

/// sigma for the exponential ladder; for a custom ladder both entries are the truncated sum.
inline SigmaTheory sigma_theoretical(const SeaSpec& spec) {
  if (!(spec.b > 0.0)) throw ConfigError("sigma_theoretical: b must be positive");
  const double truncated = spec.sigma();
  if (!spec.custom_c.empty()) return {truncated, truncated};
  const double q = std::exp(-2.0 * spec.b);
  return {std::sqrt(q / (1.0 - q) / kPi), truncated};
}

/// Moduli R_j ~ Rayleigh(1/sqrt 2) and phases phi_j ~ U[0, 2pi) for 0 < |j| <= J.
struct SeaSample {
  ModulusVector moduli;
  PhaseVector phases;
  std::uint64_t master_seed = 0;
  std::uint64_t index = 0;

  int j_max() const noexcept { return moduli.j_max(); }
  friend bool operator==(const SeaSample&, const SeaSample&) = default;
};

/// Draws are consumed j = 1, -1, 2, -2, ... so truncating J keeps the low modes unchanged.
inline SeaSample sample_sea(const SeaSpec& spec, std::uint64_t master_seed, std::uint64_t index) {
  spec.validate();
  Stream rng(master_seed, index, StreamPurpose::sea);
  SeaSample out{ModulusVector(spec.j_max), PhaseVector(spec.j_max), master_seed, index};
  for (int n = 1; n <= spec.j_max; ++n) {
    for (int j : {n, -n}) {
      out.moduli[j] = rng.rayleigh();
      out.phases[j] = rng.phase();
    }
  }
  return out;
}

/// zeta_{0j} = eps c_j |j|^{-1/4} R_j e^{i phi_j}; low modes take `phase_override` when given.
inline ComplexSpectrum initial_zeta(const SeaSpec& spec, const SeaSample& sample,
                                    const PhaseVector* phase_override = nullptr) {
  const int J = spec.j_max;
  if (sample.j_max() != J) throw ConfigError("initial data: sample band differs from spec");
  const int N = phase_override ? phase_override->j_max() : 0;
  if (N > J) throw ConfigError("initial data: phase override covers more than 2J modes");
  ComplexSpectrum zeta(J);
  for (int j = -J; j <= J; ++j) {
    if (j == 0) continue;
    const double phi = phase_override && std::abs(j) <= N ? (*phase_override)[j] : sample.phases[j];
    const double amp = spec.epsilon * spec.c(j) * std::pow(std::abs(j), -0.25) * sample.moduli[j];
    zeta[j] = std::polar(amp, phi);
  }
  return zeta;
}

/// Fully or partially randomized initial surface state.
inline SurfaceState build_initial_state(const SeaSpec& spec, const SeaSample& sample,
                                        const std::optional<PhaseVector>& phase_override = std::nullopt) {
  return from_complex_variable(initial_zeta(spec, sample, phase_override ? &*phase_override : nullptr));
}

/// The sample's own phases on 0 < |j| <= N.
inline PhaseVector low_mode_phases(const SeaSample& sample, int N) {
  PhaseVector p(N);
  for (int j = -N; j <= N; ++j)
    if (j != 0) p[j] = sample.phases[j];
  return p;
}

struct BallResult {
  bool inside;
  double norm;
  double radius;  ///< R eps^{1-delta}
};

/// Closed-ball membership: (||eta||^2_{H^s} + ||psi||^2_{H^{s+1/2}})^{1/2} <= R eps^{1-delta}.
inline BallResult in_ball_B0(const SeaSpec& spec, const SurfaceState& state) {
  const double norm = pair_norm(state, spec.s);
  const double radius = spec.ball_radius * std::pow(spec.epsilon, 1.0 - spec.delta);
  return {norm <= radius, norm, radius};
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const SeaSpec& s) {
  nlohmann::json j = {{"epsilon", s.epsilon}, {"delta", s.delta},         {"b", s.b},
                      {"j_max", s.j_max},     {"ball_radius", s.ball_radius}, {"s", s.s}};
  if (!s.custom_c.empty()) j["custom_c"] = s.custom_c;
  return j;
}

inline SeaSpec sea_spec_from_json(const nlohmann::json& j, SeaSpec base = {}) {
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("epsilon", base.epsilon);
  read("delta", base.delta);
  read("b", base.b);
  read("j_max", base.j_max);
  read("ball_radius", base.ball_radius);
  read("s", base.s);
  read("custom_c", base.custom_c);
  base.validate();
  return base;
}

inline nlohmann::json to_json(const SeaSample& s) {
  nlohmann::json moduli = nlohmann::json::array(), phases = nlohmann::json::array();
  for (double r : s.moduli.values()) moduli.push_back(r);
  for (double p : s.phases.values()) phases.push_back(p);
  return {{"master_seed", s.master_seed}, {"index", s.index}, {"j_max", s.j_max()},
          {"moduli", moduli},             {"phases", phases}};
}

inline SeaSample sea_sample_from_json(const nlohmann::json& j) {
  const int J = j.at("j_max").get<int>();
  return {ModulusVector(J, j.at("moduli").get<std::vector<double>>()),
          PhaseVector(J, j.at("phases").get<std::vector<double>>()), j.at("master_seed").get<std::uint64_t>(),
          j.at("index").get<std::uint64_t>()};
}

}  // namespace roguewave
