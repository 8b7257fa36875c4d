#pragma once

// Integrable quartic normal form of deep-water gravity waves: actions,
// amplitude-dependent frequencies, the quartic Hamiltonian, its exact flow
// and the unitary phase rotation built from accumulated frequencies.

#include <cmath>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "roguewave/errors.hpp"
#include "roguewave/spectral.hpp"

namespace roguewave {

struct ActionTag {};
struct FrequencyTag {};
struct PhaseIntegralTag {};
/// I_k = |z_k|^2
using ActionVector = ModeArray<double, ActionTag>;
/// L_k(I), rad per unit time
using FrequencyVector = ModeArray<double, FrequencyTag>;
/// Theta_j = int_0^t L_j dtau, stored unwrapped
using PhaseIntegrals = ModeArray<double, PhaseIntegralTag>;

inline ActionVector actions(const ComplexSpectrum& z) {
  ActionVector I(z.j_max());
  for (std::size_t k = 0; k < z.size(); ++k) I.values()[k] = std::norm(z.values()[k]);
  return I;
}

/// Nonlinear frequency of mode k. All sums run over the retained band.
///
///   L_k = |k|^{1/2}
///       + (|k|/pi) sum_{|m|<|k|} m^2 (I_{sm} - I_{-sm})            s = sign(k)
///       + (|k|^3 / 2pi) (I_k - 2 I_{-k})
///       - (k^2/pi) sum_{|m|>|k|} |m| (I_{-sm} - I_{sm})
inline double nonlinear_frequency(int k, const ActionVector& I) {
  if (!I.contains(k)) throw IndexError("nonlinear_frequency: mode " + std::to_string(k) + " outside band");
  const int J = I.j_max();
  const int s = k > 0 ? 1 : -1;
  const double m = std::abs(k);
  double low = 0.0;
  for (int n = 1; n < std::abs(k); ++n) low += double(n) * n * (I[s * n] - I[-s * n]);
  double high = 0.0;
  for (int n = std::abs(k) + 1; n <= J; ++n) high += double(n) * (I[-s * n] - I[s * n]);
  return std::sqrt(m) + m / kPi * low + m * m * m / (2.0 * kPi) * (I[k] - 2.0 * I[-k]) - m * m / kPi * high;
}

/// All L_k in O(J) using running sums.
inline FrequencyVector nonlinear_frequencies(const ActionVector& I) {
  const int J = I.j_max();
  FrequencyVector L(J);
  for (int s : {1, -1}) {
    // high[n] = sum_{m > n} m (I_{-sm} - I_{sm})
    std::vector<double> high(static_cast<std::size_t>(J) + 2, 0.0);
    for (int n = J - 1; n >= 1; --n)
      high[static_cast<std::size_t>(n)] =
          high[static_cast<std::size_t>(n) + 1] + double(n + 1) * (I[-s * (n + 1)] - I[s * (n + 1)]);
    double low = 0.0;  // sum_{m < n} m^2 (I_{sm} - I_{-sm})
    for (int n = 1; n <= J; ++n) {
      const double m = n;
      const int k = s * n;
      L[k] = std::sqrt(m) + m / kPi * low + m * m * m / (2.0 * kPi) * (I[k] - 2.0 * I[-k]) -
             m * m / kPi * high[static_cast<std::size_t>(n)];
      low += m * m * (I[s * n] - I[-s * n]);
    }
  }
  return L;
}

/// Quadratic part: (1/2) int | |D|^{1/4} z |^2 dx = (1/2) sum |k|^{1/2} |z_k|^2.
inline double hamiltonian_h2(const ComplexSpectrum& z) {
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) acc += std::sqrt(std::abs(z.mode(i))) * std::norm(z.values()[i]);
  return 0.5 * acc;
}

/// Quartic Zakharov-Dyachenko Hamiltonian.
inline double hamiltonian_h4(const ComplexSpectrum& z) {
  const int J = z.j_max();
  const auto I = actions(z);
  double diag = 0.0;
  for (int k = -J; k <= J; ++k) {
    if (k == 0) continue;
    const double a = std::abs(k);
    diag += a * a * a * (I[k] * I[k] - 2.0 * I[k] * I[-k]);
  }
  double cross = 0.0;
  for (int s : {1, -1})
    for (int n1 = 2; n1 <= J; ++n1)
      for (int n2 = 1; n2 < n1; ++n2)
        cross += double(n1) * n2 * n2 * (I[s * n1] - I[-s * n1]) * I[s * n2];
  return diag / (4.0 * kPi) + cross / kPi;
}

/// Wirtinger derivative d/d(conj z_k) = (d/dRe + i d/dIm)/2 of H4 by central differences.
inline cplx wirtinger_gradient_h4(const ComplexSpectrum& z, int k, double h) {
  auto shifted = [&](cplx dz) {
    ComplexSpectrum w = z;
    w[k] += dz;
    return hamiltonian_h4(w);
  };
  const double d_re = (shifted({h, 0.0}) - shifted({-h, 0.0})) / (2.0 * h);
  const double d_im = (shifted({0.0, h}) - shifted({0.0, -h})) / (2.0 * h);
  return 0.5 * cplx(d_re, d_im);
}

/// |FD d_{conj z_k} H4 - (L_k(I) - |k|^{1/2}) z_k|; the quadratic part supplies |k|^{1/2} z_k.
inline double gradient_consistency(const ComplexSpectrum& z, int k, double h) {
  if (!(h > 0.0)) throw ConfigError("gradient_consistency: step must be positive");
  const double L = nonlinear_frequency(k, actions(z));
  return std::abs(wirtinger_gradient_h4(z, k, h) - (L - std::sqrt(std::abs(k))) * z[k]);
}

/// Exact solution of dz_k/dt = -i L_k(I(z)) z_k; actions are conserved.
inline ComplexSpectrum integrable_flow(const ComplexSpectrum& z0, double t) {
  const auto L = nonlinear_frequencies(actions(z0));
  ComplexSpectrum z = z0;
  for (std::size_t i = 0; i < z.size(); ++i) z.values()[i] *= std::polar(1.0, -t * L.values()[i]);
  return z;
}

inline double default_rk4_step(int j_max) { return std::min(1e-2, 0.1 / std::sqrt(double(j_max))); }

/// Classical RK4 for dz_k/dt = -i L_k(I(z)) z_k. Independent cross-check of integrable_flow.
inline ComplexSpectrum rk4_flow(const ComplexSpectrum& z0, double t, double dt) {
  if (!(dt > 0.0)) throw ConfigError("rk4_flow: dt must be positive");
  auto rhs = [](const ComplexSpectrum& z) {
    const auto L = nonlinear_frequencies(actions(z));
    ComplexSpectrum d(z.j_max());
    for (std::size_t i = 0; i < z.size(); ++i) d.values()[i] = cplx(0.0, -L.values()[i]) * z.values()[i];
    return d;
  };
  auto axpy = [](const ComplexSpectrum& x, double a, const ComplexSpectrum& y) {
    ComplexSpectrum r = x;
    for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] += a * y.values()[i];
    return r;
  };
  ComplexSpectrum z = z0;
  const double sign = t < 0.0 ? -1.0 : 1.0;
  const auto steps = static_cast<long>(std::ceil(std::abs(t) / dt - 1e-12));
  const double h = steps > 0 ? sign * std::abs(t) / double(steps) : 0.0;
  for (long n = 0; n < steps; ++n) {
    const auto k1 = rhs(z);
    const auto k2 = rhs(axpy(z, h / 2, k1));
    const auto k3 = rhs(axpy(z, h / 2, k2));
    const auto k4 = rhs(axpy(z, h, k3));
    for (std::size_t i = 0; i < z.size(); ++i)
      z.values()[i] += h / 6.0 * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]);
    for (const auto& c : z.values())
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw IntegrationFailure("rk4_flow: non-finite state", (n + 1) * h);
  }
  return z;
}

/// v_j -> exp(-i Theta_j) v_j
inline ComplexSpectrum xi_apply(const PhaseIntegrals& theta, const ComplexSpectrum& v) {
  if (theta.j_max() != v.j_max()) throw ConfigError("xi_apply: phase integrals must cover every mode");
  ComplexSpectrum out = v;
  for (std::size_t i = 0; i < v.size(); ++i) out.values()[i] *= std::polar(1.0, -theta.values()[i]);
  return out;
}

/// |L_k(I) - L_k(J)| / (|k| ||I - J||_{FL^{2,1}}), zero when I == J.
inline double frequency_lipschitz_probe(const ActionVector& I, const ActionVector& Jv, int k) {
  ActionVector diff(I.j_max());
  for (std::size_t i = 0; i < diff.size(); ++i) diff.values()[i] = I.values()[i] - Jv.values()[i];
  const double denom = std::abs(k) * fl_norm(diff, 2.0, 1.0);
  if (denom == 0.0) return 0.0;
  return std::abs(nonlinear_frequency(k, I) - nonlinear_frequency(k, Jv)) / denom;
}

/// CSV with columns k,value.
template <class Tag>
void write_mode_csv(std::ostream& os, const ModeArray<double, Tag>& v) {
  os << "k,value\n";
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << v.mode(i) << ',' << v.values()[i] << '\n';
}

}  // namespace roguewave
