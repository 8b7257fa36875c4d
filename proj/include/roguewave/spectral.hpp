#pragma once

// Spectral representation of zero-mean fields on the torus [0, 2pi).
//
// Fourier convention used throughout the library:
//   f(x) = (2 pi)^{-1/2} sum_{j != 0} f_j e^{i j x},
//   f_j  = (2 pi)^{-1/2} int_0^{2pi} f(x) e^{-i j x} dx.
// The j = 0 mode is never stored.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "roguewave/errors.hpp"
#include "roguewave/fft.hpp"

namespace roguewave {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

struct TorusGrid {
  std::size_t n_points = 64;
  int j_max = 16;
  std::size_t oversample_factor = 8;

  void validate() const {
    if (j_max < 1) throw ConfigError("TorusGrid: j_max must be positive");
    if (n_points < 2 * static_cast<std::size_t>(j_max) + 2)
      throw ConfigError("TorusGrid: n_points must be at least 2*j_max + 2");
    if (oversample_factor < 1) throw ConfigError("TorusGrid: oversample_factor must be positive");
  }
  double node(std::size_t m) const { return 2.0 * kPi * static_cast<double>(m) / static_cast<double>(n_points); }

  /// Smallest grid satisfying the alias-free invariant for a band of j_max modes.
  static TorusGrid for_band(int j_max, std::size_t oversample = 8) {
    TorusGrid g;
    g.j_max = j_max;
    g.n_points = 2 * static_cast<std::size_t>(j_max) + 2;
    g.oversample_factor = oversample;
    return g;
  }
};

/// Values indexed by j in {-J..-1, 1..J}, stored in that order.
template <class T, class Tag>
class ModeArray {
 public:
  using value_type = T;

  ModeArray() = default;
  explicit ModeArray(int j_max) : j_max_(j_max), values_(2 * static_cast<std::size_t>(j_max), T{}) {
    if (j_max < 1) throw ConfigError("mode array: j_max must be positive");
  }
  ModeArray(int j_max, std::vector<T> values) : j_max_(j_max), values_(std::move(values)) {
    if (values_.size() != 2 * static_cast<std::size_t>(j_max))
      throw ConfigError("mode array: expected 2*j_max values");
  }

  int j_max() const noexcept { return j_max_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool contains(int j) const noexcept { return j != 0 && std::abs(j) <= j_max_; }

  std::size_t slot(int j) const {
    if (!contains(j)) throw IndexError("mode index " + std::to_string(j) + " outside 0 < |j| <= " + std::to_string(j_max_));
    return j < 0 ? static_cast<std::size_t>(j + j_max_) : static_cast<std::size_t>(j + j_max_ - 1);
  }
  /// Inverse of slot().
  int mode(std::size_t slot) const noexcept {
    const int s = static_cast<int>(slot);
    return s < j_max_ ? s - j_max_ : s - j_max_ + 1;
  }

  T& operator[](int j) { return values_[slot(j)]; }
  const T& operator[](int j) const { return values_[slot(j)]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  friend bool operator==(const ModeArray&, const ModeArray&) = default;

 private:
  int j_max_ = 0;
  std::vector<T> values_;
};

struct ComplexTag {};
/// Complex amplitudes of a complex field (no Hermitian symmetry).
using ComplexSpectrum = ModeArray<cplx, ComplexTag>;

/// Real zero-mean field stored by its positive-frequency coefficients f_1..f_J;
/// f_{-j} = conj(f_j).
class RealSpectrum {
 public:
  RealSpectrum() = default;
  explicit RealSpectrum(int j_max) : coeffs_(static_cast<std::size_t>(std::max(j_max, 0))) {
    if (j_max < 1) throw ConfigError("real spectrum: j_max must be positive");
  }
  explicit RealSpectrum(std::vector<cplx> positive) : coeffs_(std::move(positive)) {}

  int j_max() const noexcept { return static_cast<int>(coeffs_.size()); }

  cplx operator()(int j) const {
    if (j == 0 || std::abs(j) > j_max()) throw IndexError("mode index " + std::to_string(j) + " outside band");
    const cplx c = coeffs_[static_cast<std::size_t>(std::abs(j) - 1)];
    return j > 0 ? c : std::conj(c);
  }
  /// Coefficient of e^{ijx} for j >= 1.
  cplx& positive(int j) { return coeffs_.at(static_cast<std::size_t>(j - 1)); }
  const cplx& positive(int j) const { return coeffs_.at(static_cast<std::size_t>(j - 1)); }

  std::span<cplx> coeffs() noexcept { return coeffs_; }
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }

  RealSpectrum& operator+=(const RealSpectrum& o) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  RealSpectrum& operator-=(const RealSpectrum& o) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  RealSpectrum& operator*=(double a) {
    for (auto& c : coeffs_) c *= a;
    return *this;
  }
  friend RealSpectrum operator+(RealSpectrum a, const RealSpectrum& b) { return a += b; }
  friend RealSpectrum operator-(RealSpectrum a, const RealSpectrum& b) { return a -= b; }
  friend RealSpectrum operator*(double s, RealSpectrum a) { return a *= s; }
  friend bool operator==(const RealSpectrum&, const RealSpectrum&) = default;

 private:
  std::vector<cplx> coeffs_;
};

/// Surface elevation and velocity-potential trace; psi is the zero-mean representative.
struct SurfaceState {
  RealSpectrum eta;
  RealSpectrum psi;

  int j_max() const noexcept { return eta.j_max(); }
  static SurfaceState zero(int j_max) { return {RealSpectrum(j_max), RealSpectrum(j_max)}; }

  SurfaceState& operator+=(const SurfaceState& o) {
    eta += o.eta;
    psi += o.psi;
    return *this;
  }
  friend SurfaceState operator+(SurfaceState a, const SurfaceState& b) { return a += b; }
  friend SurfaceState operator*(double s, SurfaceState a) {
    a.eta *= s;
    a.psi *= s;
    return a;
  }
  friend bool operator==(const SurfaceState&, const SurfaceState&) = default;
};

// ---------------------------------------------------------------------------
// Linear complex variable

/// zeta = 2^{-1/2} |D|^{-1/4} eta + i 2^{-1/2} |D|^{1/4} psi, mode by mode.
inline ComplexSpectrum to_complex_variable(const SurfaceState& state) {
  const int J = state.j_max();
  if (state.psi.j_max() != J) throw ConfigError("to_complex_variable: eta/psi band mismatch");
  ComplexSpectrum zeta(J);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = -J; j <= J; ++j) {
    if (j == 0) continue;
    const double q = std::pow(std::abs(j), 0.25);
    zeta[j] = inv_sqrt2 * (state.eta(j) / q + cplx(0.0, 1.0) * q * state.psi(j));
  }
  return zeta;
}

/// eta = sqrt(2) Re |D|^{1/4} zeta.
inline RealSpectrum eta_from_complex(const ComplexSpectrum& zeta) {
  const int J = zeta.j_max();
  RealSpectrum eta(J);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 1; j <= J; ++j)
    eta.positive(j) = inv_sqrt2 * std::pow(j, 0.25) * (zeta[j] + std::conj(zeta[-j]));
  return eta;
}

/// psi = sqrt(2) Im |D|^{-1/4} zeta.
inline RealSpectrum psi_from_complex(const ComplexSpectrum& zeta) {
  const int J = zeta.j_max();
  RealSpectrum psi(J);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 1; j <= J; ++j)
    psi.positive(j) = inv_sqrt2 * std::pow(j, -0.25) * (zeta[j] - std::conj(zeta[-j])) / cplx(0.0, 1.0);
  return psi;
}

inline SurfaceState from_complex_variable(const ComplexSpectrum& zeta) {
  return {eta_from_complex(zeta), psi_from_complex(zeta)};
}

// ---------------------------------------------------------------------------
// Norms

/// (sum_{j != 0} |f_j|^2 |j|^{2s})^{1/2}
template <class T, class Tag>
double sobolev_norm(const ModeArray<T, Tag>& f, double s) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double j = std::abs(f.mode(k));
    acc += std::norm(cplx(f.values()[k])) * std::pow(j, 2.0 * s);
  }
  return std::sqrt(acc);
}

inline double sobolev_norm(const RealSpectrum& f, double s) {
  double acc = 0.0;
  for (int j = 1; j <= f.j_max(); ++j) acc += 2.0 * std::norm(f.positive(j)) * std::pow(j, 2.0 * s);
  return std::sqrt(acc);
}

/// (||eta||^2_{H^s} + ||psi||^2_{H^{s+1/2}})^{1/2}
inline double pair_norm(const SurfaceState& state, double s) {
  const double a = sobolev_norm(state.eta, s);
  const double b = sobolev_norm(state.psi, s + 0.5);
  return std::sqrt(a * a + b * b);
}

/// (sum_{j != 0} |f_j|^p |j|^{sp})^{1/p}
template <class T, class Tag>
double fl_norm(const ModeArray<T, Tag>& f, double s, double p) {
  if (p < 1.0) throw ConfigError("fl_norm: p must be >= 1");
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double j = std::abs(f.mode(k));
    acc += std::pow(std::abs(f.values()[k]), p) * std::pow(j, s * p);
  }
  return std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Frequency projectors

enum class Band { low, high };

/// Low side keeps 0 < |j| <= cutoff, high side keeps |j| > cutoff.
template <class T, class Tag>
ModeArray<T, Tag> project(const ModeArray<T, Tag>& f, int cutoff, Band side) {
  if (cutoff < 1 || cutoff > f.j_max()) throw ConfigError("project: cutoff must satisfy 1 <= N <= J");
  ModeArray<T, Tag> out(f.j_max());
  for (int j = -f.j_max(); j <= f.j_max(); ++j) {
    if (j == 0) continue;
    const bool low = std::abs(j) <= cutoff;
    if (low == (side == Band::low)) out[j] = f[j];
  }
  return out;
}

inline RealSpectrum project(const RealSpectrum& f, int cutoff, Band side) {
  if (cutoff < 1 || cutoff > f.j_max()) throw ConfigError("project: cutoff must satisfy 1 <= N <= J");
  RealSpectrum out(f.j_max());
  for (int j = 1; j <= f.j_max(); ++j)
    if ((j <= cutoff) == (side == Band::low)) out.positive(j) = f.positive(j);
  return out;
}

// ---------------------------------------------------------------------------
// Grid transforms

/// Values at x_m = 2 pi m / n. Requires n > 2 J.
inline std::vector<double> to_grid(const RealSpectrum& f, std::size_t n) {
  const auto J = static_cast<std::size_t>(f.j_max());
  if (n < 2 * J + 1) throw ConfigError("to_grid: grid too coarse for the band");
  std::vector<cplx> buf(n / 2 + 1, cplx{});
  for (std::size_t j = 1; j <= J; ++j) buf[j] = f.coeffs()[j - 1] / kSqrt2Pi;
  std::vector<double> out(n);
  fft::backward(buf, out);
  return out;
}

/// Projects grid values onto modes 1..j_max. The mean is written to `mean` when given.
inline RealSpectrum from_grid(std::span<const double> values, int j_max, double* mean = nullptr) {
  const std::size_t n = values.size();
  if (n < 2 * static_cast<std::size_t>(j_max) + 1) throw ConfigError("from_grid: grid too coarse for the band");
  std::vector<cplx> buf(n / 2 + 1);
  fft::forward(values, buf);
  const double scale = kSqrt2Pi / static_cast<double>(n);
  RealSpectrum f(j_max);
  for (int j = 1; j <= j_max; ++j) f.positive(j) = buf[static_cast<std::size_t>(j)] * scale;
  if (mean) *mean = buf[0].real() / static_cast<double>(n);
  return f;
}

/// Spectral x-derivative.
inline RealSpectrum derivative(const RealSpectrum& f) {
  RealSpectrum d(f.j_max());
  for (int j = 1; j <= f.j_max(); ++j) d.positive(j) = cplx(0.0, j) * f.positive(j);
  return d;
}

/// f(x) -> f(x + shift)
inline RealSpectrum translate(const RealSpectrum& f, double shift) {
  RealSpectrum out(f.j_max());
  for (int j = 1; j <= f.j_max(); ++j) out.positive(j) = f.positive(j) * std::polar(1.0, j * shift);
  return out;
}

/// f(x) -> f(-x)
inline RealSpectrum reflect(const RealSpectrum& f) {
  RealSpectrum out(f.j_max());
  for (int j = 1; j <= f.j_max(); ++j) out.positive(j) = std::conj(f.positive(j));
  return out;
}

struct SupResult {
  double value = 0.0;
  double location = 0.0;
};

/// Maximum over the zero-padded grid of n_points * oversample_factor nodes.
inline SupResult sup_eval(const RealSpectrum& f, const TorusGrid& grid) {
  const std::size_t n = grid.n_points * grid.oversample_factor;
  const auto values = to_grid(f, n);
  const auto it = std::max_element(values.begin(), values.end());
  const auto m = static_cast<std::size_t>(it - values.begin());
  return {*it, 2.0 * kPi * static_cast<double>(m) / static_cast<double>(n)};
}

/// max_x |f(x)| over the same oversampled grid.
inline double sup_abs(const RealSpectrum& f, const TorusGrid& grid) {
  const auto values = to_grid(f, grid.n_points * grid.oversample_factor);
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const ComplexSpectrum& z) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : z.values()) coeffs.push_back({c.real(), c.imag()});
  return {{"j_max", z.j_max()}, {"coeffs", coeffs}};
}

inline ComplexSpectrum complex_spectrum_from_json(const nlohmann::json& j) {
  const int J = j.at("j_max").get<int>();
  const auto& arr = j.at("coeffs");
  if (arr.size() != 2 * static_cast<std::size_t>(J)) throw ConfigError("spectrum JSON: expected 2*j_max coefficients");
  std::vector<cplx> v;
  v.reserve(arr.size());
  for (const auto& c : arr) v.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
  return ComplexSpectrum(J, std::move(v));
}

/// CSV with columns x,value on n uniform nodes.
inline void write_grid_csv(std::ostream& os, const RealSpectrum& f, std::size_t n) {
  const auto values = to_grid(f, n);
  os << "x,value\n";
  os.precision(17);
  for (std::size_t m = 0; m < n; ++m)
    os << 2.0 * kPi * static_cast<double>(m) / static_cast<double>(n) << ',' << values[m] << '\n';
}

}  // namespace roguewave
