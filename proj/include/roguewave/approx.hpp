#pragma once

// Approximate surface profiles built by rotating the initial complex
// amplitudes with accumulated nonlinear frequencies, and their errors
// against a reference trajectory.

#include <cmath>
#include <vector>

#include "roguewave/errors.hpp"
#include "roguewave/hos.hpp"
#include "roguewave/normal_form.hpp"
#include "roguewave/spectral.hpp"

namespace roguewave {

/// Unwrapped phase integrals Theta_j(t) = int_0^t L_j(I(zeta(tau))) dtau on a time grid.
struct PhaseLedger {
  ComplexSpectrum zeta0;  ///< initial amplitudes; arg gives the initial phases
  std::vector<double> times;
  std::vector<PhaseIntegrals> theta;
  std::vector<FrequencyVector> rates;  ///< L_j at each time, used for partial intervals

  /// Trapezoidal quadrature over the snapshots of a trajectory.
  static PhaseLedger from_trajectory(const Trajectory& tr) {
    if (tr.size() == 0) throw RangeError("phase ledger: empty trajectory");
    PhaseLedger led;
    led.zeta0 = tr.zeta(0);
    for (std::size_t i = 0; i < tr.size(); ++i) led.push(tr.times[i], tr.zeta(i));
    return led;
  }

  /// Appends a sample; times must increase.
  void push(double t, const ComplexSpectrum& zeta) {
    auto L = nonlinear_frequencies(actions(zeta));
    if (times.empty()) {
      if (t != 0.0) throw RangeError("phase ledger: first sample must be at t = 0");
      if (zeta0.size() == 0) zeta0 = zeta;
      theta.emplace_back(zeta.j_max());
    } else {
      if (!(t > times.back())) throw RangeError("phase ledger: times must increase");
      const double h = t - times.back();
      PhaseIntegrals next = theta.back();
      for (std::size_t i = 0; i < next.size(); ++i) next.values()[i] += 0.5 * h * (rates.back().values()[i] + L.values()[i]);
      theta.push_back(std::move(next));
    }
    times.push_back(t);
    rates.push_back(std::move(L));
  }

  /// Theta(t), with linear interpolation of L inside the last partial interval.
  PhaseIntegrals at(double t) const {
    if (times.empty() || t < 0.0 || t > times.back() * (1 + 1e-12) + 1e-12)
      throw RangeError("phase ledger: t = " + std::to_string(t) + " outside the stored trajectory");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    const double h = t - times[i];
    if (h <= 0.0 || i + 1 >= times.size()) return theta[i];
    const double w = h / (times[i + 1] - times[i]);
    PhaseIntegrals out = theta[i];
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double a = rates[i].values()[k];
      const double b = rates[i + 1].values()[k];
      out.values()[k] += 0.5 * h * (a + (a + w * (b - a)));
    }
    return out;
  }
};

/// Integrates Theta at every solver step; pass as the observer of evolve().
class PhaseAccumulator {
 public:
  void operator()(double t, const SurfaceState& s) { ledger_.push(t, to_complex_variable(s)); }
  const PhaseLedger& ledger() const { return ledger_; }

 private:
  PhaseLedger ledger_;
};

/// u_app,j = e^{-i t L_j(I(zeta0))} zeta0_j
inline ComplexSpectrum u_app(double t, const ComplexSpectrum& zeta0) { return integrable_flow(zeta0, t); }

/// sqrt(2) Re |D|^{1/4} of u_app
inline RealSpectrum eta_app(double t, const ComplexSpectrum& zeta0) { return eta_from_complex(u_app(t, zeta0)); }

inline ComplexSpectrum u_app2(double t, const PhaseLedger& ledger) { return xi_apply(ledger.at(t), ledger.zeta0); }

inline RealSpectrum eta_app2(double t, const PhaseLedger& ledger) { return eta_from_complex(u_app2(t, ledger)); }

/// eta_app2 with phases integrated over the snapshots of `trajectory`.
inline RealSpectrum eta_app2(double t, const ComplexSpectrum& zeta0, const Trajectory& trajectory) {
  auto ledger = PhaseLedger::from_trajectory(trajectory);
  ledger.zeta0 = zeta0;
  return eta_app2(t, ledger);
}

enum class Approximation { app, app2 };

struct ApproximationError {
  double sup = 0.0;  ///< || eta_ref(t) - eta_approx(t) ||_{L^inf} on the oversampled grid
  double h1 = 0.0;   ///< || zeta_ref(t) - u_approx(t) ||_{H^1}
};

/// Error of an approximation at a snapshot time of the reference trajectory.
inline ApproximationError approximation_error(const Trajectory& tr, double t, Approximation which,
                                              const PhaseLedger* ledger = nullptr) {
  const std::size_t i = tr.index_of(t);
  const auto zeta0 = tr.zeta(0);
  ComplexSpectrum u;
  if (which == Approximation::app) {
    u = u_app(t, zeta0);
  } else {
    const auto own = ledger ? PhaseLedger{} : PhaseLedger::from_trajectory(tr);
    u = u_app2(t, ledger ? *ledger : own);
  }
  const auto zt = tr.zeta(i);
  ComplexSpectrum diff(zt.j_max());
  for (std::size_t k = 0; k < diff.size(); ++k) diff.values()[k] = zt.values()[k] - u.values()[k];
  const int J = tr.j_max();
  const auto grid = TorusGrid::for_band(J);
  return {sup_abs(tr.states[i].eta - eta_from_complex(u), grid), sobolev_norm(diff, 1.0)};
}

}  // namespace roguewave
