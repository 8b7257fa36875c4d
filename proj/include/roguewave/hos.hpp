#pragma once

// High-order spectral solver for deep-water gravity waves (g = 1):
//
//   eta_t = G(eta) psi
//   psi_t = -eta - psi_x^2 / 2 + (G(eta) psi + eta_x psi_x)^2 / (2 (1 + eta_x^2))
//
// G is expanded to total amplitude degree M through the vertical-velocity
// recursion. Every product is formed exactly on a grid of at least 2 M J + 1
// points, and both equations are cut at the same degree, so the truncated
// system is itself Hamiltonian with energy (1/2) int (psi G_M psi + eta^2).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roguewave/errors.hpp"
#include "roguewave/fft.hpp"
#include "roguewave/spectral.hpp"

namespace roguewave {

struct HosConfig {
  int order = 4;             ///< M, DNO expansion degree
  double dt = 1e-2;
  double dealias_pad = 0.0;  ///< fine grid = pad * n_points; 0 picks the exact value max(M, (M+2)/2)
  int snapshot_stride = 10;
  std::size_t n_points = 0;  ///< state collocation grid; 0 means 2 J + 2
  double cfl = 0.5;          ///< dt * sqrt(J) must not exceed this
  double blowup_factor = 10.0;

  double pad() const { return dealias_pad > 0.0 ? dealias_pad : std::max<double>(order, (order + 2) / 2.0); }
  std::size_t points(int j_max) const { return n_points ? n_points : 2 * static_cast<std::size_t>(j_max) + 2; }
  std::size_t fine_points(int j_max) const {
    return static_cast<std::size_t>(std::ceil(pad() * static_cast<double>(points(j_max))));
  }

  void validate(int j_max) const {
    if (order < 1) throw ConfigError("hos: order must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("hos: dt must be positive");
    if (dealias_pad != 0.0 && dealias_pad < (order + 2) / 2.0)
      throw ConfigError("hos: dealias_pad must be >= (order + 2) / 2");
    if (snapshot_stride < 1) throw ConfigError("hos: snapshot_stride must be >= 1");
    if (points(j_max) < 2 * static_cast<std::size_t>(j_max) + 2)
      throw ConfigError("hos: n_points must be at least 2 j_max + 2");
    if (dt * std::sqrt(double(j_max)) > cfl) throw ConfigError("hos: dt exceeds cfl / sqrt(j_max)");
    if (!(blowup_factor > 1.0)) throw ConfigError("hos: blowup_factor must exceed 1");
  }
};

inline nlohmann::json to_json(const HosConfig& c) {
  return {{"order", c.order},           {"dt", c.dt},
          {"dealias_pad", c.pad()},     {"snapshot_stride", c.snapshot_stride},
          {"n_points", c.n_points},     {"cfl", c.cfl},
          {"blowup_factor", c.blowup_factor}};
}

inline HosConfig hos_config_from_json(const nlohmann::json& j, HosConfig base = {}) {
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("order", base.order);
  read("dt", base.dt);
  read("dealias_pad", base.dealias_pad);
  read("snapshot_stride", base.snapshot_stride);
  read("n_points", base.n_points);
  read("cfl", base.cfl);
  read("blowup_factor", base.blowup_factor);
  return base;
}

namespace hos_detail {

using Grid = std::vector<double>;
using Half = std::vector<cplx>;  // unnormalised half spectrum: v_m = sum_q h_q e^{2 pi i q m / n} + c.c.

/// Buffers for one (J, M, n) combination; one per thread.
class Workspace {
 public:
  Workspace(int j_max, int order, std::size_t n)
      : J_(j_max), M_(order), n_(n), scratch_(n / 2 + 1), tmp_(n / 2 + 1) {
    if (n < 2 * static_cast<std::size_t>(j_max) + 1) throw ConfigError("hos: fine grid too coarse");
  }

  int j_max() const { return J_; }
  int order() const { return M_; }
  std::size_t n() const { return n_; }

  Half half_from(const RealSpectrum& f) const {
    Half h(n_ / 2 + 1, cplx{});
    for (int j = 1; j <= f.j_max(); ++j) h[static_cast<std::size_t>(j)] = f.positive(j) / kSqrt2Pi;
    return h;
  }
  /// h scaled by |q|^p (and by i q for the derivative) then back to the grid.
  Grid grid_from(const Half& h, int p = 0, bool derivative = false) {
    for (std::size_t q = 0; q < h.size(); ++q) {
      cplx v = h[q];
      if (p) v *= std::pow(static_cast<double>(q), p);
      if (derivative) v *= cplx(0.0, static_cast<double>(q));
      scratch_[q] = v;
    }
    Grid out(n_);
    fft::backward(scratch_, out);
    return out;
  }
  Half half_from(const Grid& g) {
    fft::forward(g, tmp_);
    Half h(tmp_.begin(), tmp_.end());
    for (auto& c : h) c /= static_cast<double>(n_);
    return h;
  }
  /// Band-J projection of grid values; the mean is returned separately.
  RealSpectrum band(const Grid& g, double* mean = nullptr) {
    fft::forward(g, tmp_);
    RealSpectrum f(J_);
    const double scale = kSqrt2Pi / static_cast<double>(n_);
    for (int j = 1; j <= J_; ++j) f.positive(j) = tmp_[static_cast<std::size_t>(j)] * scale;
    if (mean) *mean = tmp_[0].real() / static_cast<double>(n_);
    return f;
  }

 private:
  int J_, M_;
  std::size_t n_;
  Half scratch_, tmp_;
};

struct Fields {
  Grid eta, eta_x, psi_x;
  std::vector<Grid> W;  // W[n], n = 1..M: vertical velocity by amplitude degree
};

inline void axpy(Grid& y, double a, const Grid& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// Vertical velocity by degree via Phi^(1) = psi, Phi^(m) = -sum_k eta^k/k! |D|^k Phi^(m-k).
inline Fields vertical_velocity(Workspace& ws, const RealSpectrum& eta, const RealSpectrum& psi) {
  const int M = ws.order();
  const std::size_t n = ws.n();
  Fields f;
  const Half eh = ws.half_from(eta), ph = ws.half_from(psi);
  f.eta = ws.grid_from(eh);
  f.eta_x = ws.grid_from(eh, 0, true);
  f.psi_x = ws.grid_from(ph, 0, true);

  // eta^k / k!
  std::vector<Grid> epow(static_cast<std::size_t>(M), Grid(n, 1.0));
  for (int k = 1; k < M; ++k)
    for (std::size_t i = 0; i < n; ++i) epow[k][i] = epow[k - 1][i] * f.eta[i] / k;

  // D[m][p] = |D|^p Phi^(m) on the grid, p = 1..M-m+1
  std::vector<std::vector<Grid>> D(static_cast<std::size_t>(M) + 1);
  f.W.assign(static_cast<std::size_t>(M) + 1, Grid(n, 0.0));
  for (int m = 1; m <= M; ++m) {
    Half phi;
    if (m == 1) {
      phi = ph;
    } else {
      Grid g(n, 0.0);
      for (int k = 1; k <= m - 1; ++k) {
        const Grid& d = D[m - k][k];
        for (std::size_t i = 0; i < n; ++i) g[i] -= epow[k][i] * d[i];
      }
      phi = ws.half_from(g);
    }
    D[m].resize(static_cast<std::size_t>(M - m) + 2);
    for (int p = 1; p <= M - m + 1; ++p) D[m][p] = ws.grid_from(phi, p);
    for (int k = 0; k <= M - m; ++k) {
      Grid& w = f.W[m + k];
      const Grid& d = D[m][k + 1];
      for (std::size_t i = 0; i < n; ++i) w[i] += epow[k][i] * d[i];
    }
  }
  return f;
}

/// G(eta) psi on the grid, degrees 1..M: W[n] + W[n-2] eta_x^2 - [n = 2] eta_x psi_x.
inline Grid dno_grid(const Fields& f, int M, std::vector<Grid>* by_degree = nullptr) {
  const std::size_t n = f.eta.size();
  Grid g(n, 0.0);
  if (by_degree) by_degree->assign(static_cast<std::size_t>(M) + 1, Grid(n, 0.0));
  for (int d = 1; d <= M; ++d) {
    Grid part = f.W[d];
    if (d >= 3)
      for (std::size_t i = 0; i < n; ++i) part[i] += f.W[d - 2][i] * f.eta_x[i] * f.eta_x[i];
    if (d == 2)
      for (std::size_t i = 0; i < n; ++i) part[i] -= f.eta_x[i] * f.psi_x[i];
    axpy(g, 1.0, part);
    if (by_degree) (*by_degree)[d] = std::move(part);
  }
  return g;
}

/// Nonlinear part of psi_t, degrees 2..M of -psi_x^2/2 + (1 + eta_x^2) W^2 / 2.
inline Grid psi_nonlinear_grid(const Fields& f, int M) {
  const std::size_t n = f.eta.size();
  Grid out(n, 0.0);
  for (int d = 2; d <= M; ++d) {
    for (int a = 1; a < d; ++a)
      for (std::size_t i = 0; i < n; ++i) out[i] += 0.5 * f.W[a][i] * f.W[d - a][i];
    for (int a = 1; a < d - 2; ++a)
      for (std::size_t i = 0; i < n; ++i) out[i] += 0.5 * f.W[a][i] * f.W[d - 2 - a][i] * f.eta_x[i] * f.eta_x[i];
    if (d == 2)
      for (std::size_t i = 0; i < n; ++i) out[i] -= 0.5 * f.psi_x[i] * f.psi_x[i];
  }
  return out;
}

}  // namespace hos_detail

inline std::size_t exact_fine_points(int j_max, int order) {
  return HosConfig{.order = order}.fine_points(j_max);
}

struct DnoResult {
  RealSpectrum value;  ///< band-J part of G(eta) psi
  double mean = 0.0;   ///< spatial mean, zero up to round-off
};

/// Dirichlet-Neumann operator expanded to degree M in amplitude.
inline DnoResult dno_apply(const RealSpectrum& eta, const RealSpectrum& psi, int order) {
  if (order < 1) throw ConfigError("dno_apply: order must be >= 1");
  if (eta.j_max() != psi.j_max()) throw ConfigError("dno_apply: eta/psi band mismatch");
  hos_detail::Workspace ws(eta.j_max(), order, exact_fine_points(eta.j_max(), order));
  const auto f = hos_detail::vertical_velocity(ws, eta, psi);
  DnoResult r;
  r.value = ws.band(hos_detail::dno_grid(f, order), &r.mean);
  return r;
}

/// G(eta) psi split by amplitude degree: element n holds G_{n-1}(eta) psi, n = 1..M.
inline std::vector<RealSpectrum> dno_expansion(const RealSpectrum& eta, const RealSpectrum& psi, int order) {
  if (order < 1) throw ConfigError("dno_apply: order must be >= 1");
  hos_detail::Workspace ws(eta.j_max(), order, exact_fine_points(eta.j_max(), order));
  const auto f = hos_detail::vertical_velocity(ws, eta, psi);
  std::vector<hos_detail::Grid> parts;
  hos_detail::dno_grid(f, order, &parts);
  std::vector<RealSpectrum> out;
  for (int d = 1; d <= order; ++d) out.push_back(ws.band(parts[d]));
  return out;
}

struct VelocityComponents {
  RealSpectrum V, B;  ///< band-J parts
  double V_mean = 0.0, B_mean = 0.0;
  RealSpectrum W;  ///< the recursion's vertical velocity, for cross-checks
  double W_mean = 0.0;
};

/// B = (G psi + eta_x psi_x) / (1 + eta_x^2), V = psi_x - eta_x B.
inline VelocityComponents velocity_components(const RealSpectrum& eta, const RealSpectrum& psi, int order) {
  if (order < 1) throw ConfigError("velocity_components: order must be >= 1");
  hos_detail::Workspace ws(eta.j_max(), order, exact_fine_points(eta.j_max(), order));
  const auto f = hos_detail::vertical_velocity(ws, eta, psi);
  const auto g = hos_detail::dno_grid(f, order);
  const std::size_t n = ws.n();
  hos_detail::Grid B(n), V(n), W(n, 0.0);
  for (int d = 1; d <= order; ++d) hos_detail::axpy(W, 1.0, f.W[d]);
  for (std::size_t i = 0; i < n; ++i) {
    B[i] = (g[i] + f.eta_x[i] * f.psi_x[i]) / (1.0 + f.eta_x[i] * f.eta_x[i]);
    V[i] = f.psi_x[i] - f.eta_x[i] * B[i];
  }
  VelocityComponents out;
  out.B = ws.band(B, &out.B_mean);
  out.V = ws.band(V, &out.V_mean);
  out.W = ws.band(W, &out.W_mean);
  return out;
}

struct RhsResult {
  SurfaceState d;         ///< band-J time derivative of (eta, psi)
  double eta_mean = 0.0;  ///< mean of eta_t, dropped from d
};

inline RhsResult ww_rhs(hos_detail::Workspace& ws, const SurfaceState& s) {
  const int M = ws.order();
  const auto f = hos_detail::vertical_velocity(ws, s.eta, s.psi);
  RhsResult r;
  r.d.eta = ws.band(hos_detail::dno_grid(f, M), &r.eta_mean);
  r.d.psi = ws.band(hos_detail::psi_nonlinear_grid(f, M)) - s.eta;
  return r;
}

inline RhsResult ww_rhs(const SurfaceState& s, int order) {
  if (order < 1) throw ConfigError("ww_rhs: order must be >= 1");
  hos_detail::Workspace ws(s.j_max(), order, exact_fine_points(s.j_max(), order));
  return ww_rhs(ws, s);
}

/// (1/2) int (psi G psi + eta^2) dx with the same truncated G as the dynamics.
inline double hamiltonian(const SurfaceState& s, int order) {
  const auto g = dno_apply(s.eta, s.psi, order).value;
  double h = 0.0;
  for (int j = 1; j <= s.j_max(); ++j)
    h += (g.positive(j) * std::conj(s.psi.positive(j))).real() + std::norm(s.eta.positive(j));
  return h;
}

/// int eta_x psi dx
inline double momentum(const SurfaceState& s) {
  double p = 0.0;
  for (int j = 1; j <= s.j_max(); ++j) p += 2.0 * (cplx(0.0, j) * s.eta.positive(j) * std::conj(s.psi.positive(j))).real();
  return p;
}

struct ConservedRecord {
  double hamiltonian = 0.0;
  double momentum = 0.0;
  double eta_mean = 0.0;  ///< time integral of the mean of eta_t
};

struct Trajectory {
  HosConfig config;
  std::vector<double> times;
  std::vector<SurfaceState> states;
  std::vector<ConservedRecord> conserved;

  std::size_t size() const { return times.size(); }
  int j_max() const { return states.empty() ? 0 : states.front().j_max(); }
  ComplexSpectrum zeta(std::size_t i) const { return to_complex_variable(states.at(i)); }
  const SurfaceState& final_state() const { return states.back(); }

  /// Index of the snapshot stored at time t (within 1e-9 relative), or throws RangeError.
  std::size_t index_of(double t) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    const auto it = std::lower_bound(times.begin(), times.end(), t - tol);
    if (it == times.end() || std::abs(*it - t) > tol) throw RangeError("trajectory: no snapshot at t = " + std::to_string(t));
    return static_cast<std::size_t>(it - times.begin());
  }
};

/// Raised when the state leaves the small-amplitude regime; carries the snapshots stored so far.
class BlowUp : public IntegrationFailure {
 public:
  BlowUp(const std::string& what, double time, Trajectory partial)
      : IntegrationFailure(what, time), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// Called after every accepted step with (t, state).
using StepObserver = std::function<void(double, const SurfaceState&)>;

/// RK4 integration to t_final. Snapshots every `snapshot_stride` steps and at t_final.
inline Trajectory evolve(const SurfaceState& s0, double t_final, const HosConfig& cfg,
                         const StepObserver& observer = nullptr) {
  const int J = s0.j_max();
  cfg.validate(J);
  if (!(t_final >= 0.0)) throw ConfigError("evolve: t_final must be >= 0");
  hos_detail::Workspace ws(J, cfg.order, cfg.fine_points(J));
  const auto steps = static_cast<long>(std::ceil(t_final / cfg.dt - 1e-9));
  const double h = steps > 0 ? t_final / double(steps) : 0.0;

  Trajectory tr;
  tr.config = cfg;
  SurfaceState s = s0;
  double mean_acc = 0.0;
  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.states.push_back(s);
    tr.conserved.push_back({hamiltonian(s, cfg.order), momentum(s), mean_acc});
  };
  record(0.0);
  if (observer) observer(0.0, s);
  const double norm0 = pair_norm(s0, 4.0);

  for (long n = 1; n <= steps; ++n) {
    const auto k1 = ww_rhs(ws, s);
    const auto k2 = ww_rhs(ws, s + (h / 2) * k1.d);
    const auto k3 = ww_rhs(ws, s + (h / 2) * k2.d);
    const auto k4 = ww_rhs(ws, s + h * k3.d);
    s += (h / 6.0) * (k1.d + 2.0 * k2.d + 2.0 * k3.d + k4.d);
    mean_acc += h / 6.0 * (k1.eta_mean + 2 * k2.eta_mean + 2 * k3.eta_mean + k4.eta_mean);
    const double t = n == steps ? t_final : n * h;

    const double norm = pair_norm(s, 4.0);
    if (!std::isfinite(norm)) throw BlowUp("evolve: non-finite state", t, std::move(tr));
    if (norm > cfg.blowup_factor * norm0 && norm0 > 0.0) {
      std::ostringstream msg;
      msg << "evolve: H^4 norm grew from " << norm0 << " to " << norm;
      throw BlowUp(msg.str(), t, std::move(tr));
    }
    if (observer) observer(t, s);
    if (n % cfg.snapshot_stride == 0 || n == steps) record(t);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Symmetries

/// (eta(x), psi(x)) -> (eta(-x), -psi(-x))
inline SurfaceState reverse(const SurfaceState& s) { return {reflect(s.eta), -1.0 * reflect(s.psi)}; }

inline SurfaceState translate(const SurfaceState& s, double shift) {
  return {translate(s.eta, shift), translate(s.psi, shift)};
}

/// L^2 size of the pair, used for residuals.
inline double state_distance(const SurfaceState& a, const SurfaceState& b) {
  SurfaceState d = a;
  d.eta -= b.eta;
  d.psi -= b.psi;
  return pair_norm(d, 0.0);
}

struct ReversibilityReport {
  double residual = 0.0;          ///< || rho Psi^t rho Psi^t s0 - s0 ||
  double integrator_error = 0.0;  ///< || Psi^t_dt s0 - Psi^t_{dt/2} s0 ||
};

inline ReversibilityReport reversibility_check(const SurfaceState& s0, double t, const HosConfig& cfg) {
  if (t == 0.0) return {};
  const auto forward = evolve(s0, t, cfg).final_state();
  const auto back = evolve(reverse(forward), t, cfg).final_state();
  HosConfig fine = cfg;
  fine.dt = cfg.dt / 2;
  return {state_distance(reverse(back), s0), state_distance(forward, evolve(s0, t, fine).final_state())};
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_trajectory(const Trajectory& tr, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = {{"schema_version", 1}, {"j_max", tr.j_max()}, {"config", to_json(tr.config)}};
  nlohmann::json snaps = nlohmann::json::array();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    std::ostringstream name;
    name << "snapshot_" << std::setw(6) << std::setfill('0') << i << ".csv";
    snaps.push_back({{"t", tr.times[i]},
                     {"file", name.str()},
                     {"hamiltonian", tr.conserved[i].hamiltonian},
                     {"momentum", tr.conserved[i].momentum},
                     {"eta_mean", tr.conserved[i].eta_mean}});
    std::ofstream os(dir / name.str());
    os << std::setprecision(17) << "j,eta_re,eta_im,psi_re,psi_im\n";
    const auto& s = tr.states[i];
    for (int j = 1; j <= s.j_max(); ++j)
      os << j << ',' << s.eta.positive(j).real() << ',' << s.eta.positive(j).imag() << ','
         << s.psi.positive(j).real() << ',' << s.psi.positive(j).imag() << '\n';
  }
  manifest["snapshots"] = snaps;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

inline Trajectory load_trajectory(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("load_trajectory: missing manifest in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  Trajectory tr;
  tr.config = hos_config_from_json(manifest.at("config"));
  const int J = manifest.at("j_max").get<int>();
  for (const auto& snap : manifest.at("snapshots")) {
    tr.times.push_back(snap.at("t").get<double>());
    tr.conserved.push_back({snap.at("hamiltonian").get<double>(), snap.at("momentum").get<double>(),
                            snap.at("eta_mean").get<double>()});
    std::ifstream cs(dir / snap.at("file").get<std::string>());
    std::string line;
    std::getline(cs, line);
    SurfaceState s = SurfaceState::zero(J);
    for (int j = 1; j <= J; ++j) {
      std::getline(cs, line);
      std::istringstream ls(line);
      double v[5];
      char comma;
      ls >> v[0];
      for (int k = 1; k < 5; ++k) ls >> comma >> v[k];
      s.eta.positive(j) = {v[1], v[2]};
      s.psi.positive(j) = {v[3], v[4]};
    }
    tr.states.push_back(s);
  }
  return tr;
}

}  // namespace roguewave
