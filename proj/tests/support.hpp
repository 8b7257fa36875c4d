#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "roguewave/rng.hpp"
#include "roguewave/spectral.hpp"

namespace testing_support {

using roguewave::cplx;
using roguewave::RealSpectrum;
using roguewave::SurfaceState;

/// Direct trigonometric sum, independent of the FFT path.
inline double eval_direct(const RealSpectrum& f, double x) {
  double acc = 0.0;
  for (int j = 1; j <= f.j_max(); ++j) acc += 2.0 * (f.positive(j) * std::polar(1.0, j * x)).real();
  return acc / std::sqrt(2.0 * M_PI);
}

/// Random state with coefficients ~ amp e^{-j/2} (Gaussian), eta and psi independent.
inline SurfaceState random_state(int J, std::uint64_t seed, double amp) {
  roguewave::Stream rng(seed, 77, roguewave::StreamPurpose::test);
  SurfaceState s = SurfaceState::zero(J);
  for (int j = 1; j <= J; ++j) {
    const double w = amp * std::exp(-0.5 * j);
    s.eta.positive(j) = w * cplx(rng.gaussian(), rng.gaussian());
    s.psi.positive(j) = w * cplx(rng.gaussian(), rng.gaussian());
  }
  return s;
}

/// Full coefficient list f_j for j = -K..K (index j + K), K >= band.
inline std::vector<cplx> full(const RealSpectrum& f, int K) {
  std::vector<cplx> v(2 * K + 1, cplx{});
  for (int j = 1; j <= f.j_max(); ++j) {
    v[K + j] = f.positive(j);
    v[K - j] = std::conj(f.positive(j));
  }
  return v;
}

/// Spectral product by direct convolution: (fg)_j = (2 pi)^{-1/2} sum_{a+b=j} f_a g_b.
inline std::vector<cplx> convolve(const std::vector<cplx>& f, const std::vector<cplx>& g) {
  const int K = (static_cast<int>(f.size()) - 1) / 2;
  std::vector<cplx> out(f.size(), cplx{});
  for (int j = -K; j <= K; ++j)
    for (int a = -K; a <= K; ++a) {
      const int b = j - a;
      if (b < -K || b > K) continue;
      out[j + K] += f[a + K] * g[b + K];
    }
  for (auto& c : out) c /= std::sqrt(2.0 * M_PI);
  return out;
}

inline double max_abs_diff(const RealSpectrum& a, const RealSpectrum& b) {
  double m = 0.0;
  for (int j = 1; j <= a.j_max(); ++j) m = std::max(m, std::abs(a.positive(j) - b.positive(j)));
  return m;
}

inline double max_abs(const RealSpectrum& a) { return max_abs_diff(a, RealSpectrum(a.j_max())); }

}  // namespace testing_support
