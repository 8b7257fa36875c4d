#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "roguewave/hos.hpp"
#include "roguewave/random_init.hpp"
#include "roguewave/stats.hpp"
#include "support.hpp"

using namespace roguewave;
using namespace testing_support;

namespace {

RealSpectrum abs_d(const RealSpectrum& f) {
  RealSpectrum out(f.j_max());
  for (int j = 1; j <= f.j_max(); ++j) out.positive(j) = double(j) * f.positive(j);
  return out;
}

// Band-J projection of a function sampled on a fine grid.
RealSpectrum project_function(const std::function<double(double)>& fn, int J, std::size_t n = 512) {
  std::vector<double> v(n);
  for (std::size_t m = 0; m < n; ++m) v[m] = fn(2 * M_PI * m / n);
  return from_grid(v, J);
}

// Random sea rescaled so that max |eta_x| equals the given steepness.
SurfaceState sea_with_steepness(int J, double steepness, std::uint64_t seed) {
  SeaSpec spec;
  spec.j_max = J;
  spec.epsilon = 1.0;
  auto s = build_initial_state(spec, sample_sea(spec, seed, 0));
  const double slope = sup_abs(derivative(s.eta), TorusGrid{2 * std::size_t(J) + 2, J, 8});
  return (steepness / slope) * s;
}

// zeta_k alone, eta amplitude a = steepness / k.
SurfaceState single_mode(int J, int k, double steepness) {
  ComplexSpectrum z(J);
  const double a = steepness / k;
  z[k] = std::sqrt(M_PI * a * a / std::sqrt(double(k)));
  return from_complex_variable(z);
}

}  // namespace

TEST(Dno, FlatSurfaceIsAbsD) {
  const auto s = random_state(12, 1, 1.0);
  const auto g = dno_apply(RealSpectrum(12), s.psi, 4);
  EXPECT_LE(max_abs_diff(g.value, abs_d(s.psi)), 1e-14);
  EXPECT_THROW(dno_apply(s.eta, s.psi, 0), ConfigError);
}

TEST(Dno, ExactHarmonicOracle) {
  // phi = e^{ky} cos(kx) is harmonic and decays downward, so for psi = phi(x, eta(x))
  // G(eta) psi = phi_y - eta_x phi_x = k e^{k eta} (cos kx + eta_x sin kx).
  const int J = 24, k = 2;
  RealSpectrum eta(J);
  eta.positive(1) = 0.04;
  eta.positive(3) = cplx(0.0, 0.02);
  const auto eta_x = derivative(eta);
  auto eta_f = [&](double x) { return eval_direct(eta, x); };
  const auto psi = project_function([&](double x) { return std::exp(k * eta_f(x)) * std::cos(k * x); }, J);
  const auto exact = project_function(
      [&](double x) {
        return k * std::exp(k * eta_f(x)) * (std::cos(k * x) + eval_direct(eta_x, x) * std::sin(k * x));
      },
      J);
  std::vector<double> errs;
  for (int M : {2, 4, 6, 8}) errs.push_back(max_abs_diff(dno_apply(eta, psi, M).value, exact));
  for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_LT(errs[i], 0.1 * errs[i - 1]);
  EXPECT_LT(errs.back(), 1e-10);
}

TEST(Dno, FirstOrderTermMatchesConvolution) {
  // G_1 psi = -d/dx(eta psi_x) - |D|(eta |D| psi), by direct spectral convolution
  const int J = 10, K = 2 * J;
  const auto s = random_state(J, 3, 0.3);
  const auto parts = dno_expansion(s.eta, s.psi, 3);
  const auto e = full(s.eta, K);
  const auto px = full(derivative(s.psi), K);
  const auto pd = full(abs_d(s.psi), K);
  const auto a = convolve(e, px);
  const auto b = convolve(e, pd);
  RealSpectrum g1(J);
  for (int j = 1; j <= J; ++j) g1.positive(j) = -cplx(0.0, j) * a[K + j] - double(j) * b[K + j];
  EXPECT_LE(max_abs_diff(parts[1], g1), 1e-14);
  EXPECT_LE(max_abs_diff(parts[0], abs_d(s.psi)), 1e-15);
}

TEST(Dno, QuadraticRemainder) {
  // || G psi - |D| psi - G_1 psi || = O(|eta|^2), with M = 8 as reference
  const auto base = random_state(12, 4, 1.0);
  std::vector<double> scales, errs;
  for (double a : {0.02, 0.04, 0.08}) {
    RealSpectrum eta = a * base.eta;
    const auto parts = dno_expansion(eta, base.psi, 8);
    const auto g = dno_apply(eta, base.psi, 8).value;
    scales.push_back(a);
    errs.push_back(max_abs(g - parts[0] - parts[1]));
  }
  EXPECT_NEAR(stats::loglog_slope(scales, errs), 2.0, 0.1);
}

TEST(Dno, ZeroMean) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = random_state(16, seed, 0.5);
    EXPECT_LE(std::abs(dno_apply(s.eta, s.psi, 4).mean), 1e-13);
    EXPECT_LE(std::abs(dno_apply(s.eta, s.psi, 8).mean), 1e-13);
  }
}

TEST(Velocity, FlatAndZeroCases) {
  const auto s = random_state(8, 5, 1.0);
  const auto flat = velocity_components(RealSpectrum(8), s.psi, 4);
  EXPECT_LE(max_abs_diff(flat.B, abs_d(s.psi)), 1e-14);
  EXPECT_LE(max_abs_diff(flat.V, derivative(s.psi)), 1e-14);
  const auto still = velocity_components(s.eta, RealSpectrum(8), 4);
  EXPECT_LE(max_abs(still.B), 0.0);
  EXPECT_LE(max_abs(still.V), 0.0);
}

TEST(Velocity, BMatchesRecursion) {
  // the two differ by O(amplitude^{M+1}) because G is cut at degree M
  const auto s = random_state(12, 6, 0.005);
  const auto vc = velocity_components(s.eta, s.psi, 4);
  EXPECT_LE(max_abs_diff(vc.B, vc.W), 1e-10);
  EXPECT_NEAR(vc.B_mean, vc.W_mean, 1e-10);
}

TEST(Rhs, ZeroState) {
  const auto r = ww_rhs(SurfaceState::zero(8), 4);
  EXPECT_EQ(r.d, SurfaceState::zero(8));
}

TEST(Rhs, Linearisation) {
  const auto base = random_state(12, 7, 1.0);
  std::vector<double> amps, errs;
  for (double a : {0.005, 0.01, 0.02}) {
    const auto s = a * base;
    const auto r = ww_rhs(s, 4);
    const double e = std::max(max_abs_diff(r.d.eta, abs_d(s.psi)), max_abs_diff(r.d.psi, -1.0 * s.eta));
    amps.push_back(a);
    errs.push_back(e);
  }
  EXPECT_NEAR(stats::loglog_slope(amps, errs), 2.0, 0.1);
}

TEST(Rhs, HamiltonianIsConstantAlongFlow) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto s = random_state(16, seed, 0.05);
    const auto d = ww_rhs(s, 4).d;
    const double h = 1e-4;
    const double dH = (hamiltonian(s + h * d, 4) - hamiltonian(s + (-h) * d, 4)) / (2 * h);
    EXPECT_LE(std::abs(dH), 1e-9);
  }
}

TEST(Config, Validation) {
  HosConfig c;
  EXPECT_NO_THROW(c.validate(32));
  c.order = 0;
  EXPECT_THROW(c.validate(32), ConfigError);
  c = HosConfig{};
  c.dealias_pad = 2.0;  // below (4 + 2) / 2
  EXPECT_THROW(c.validate(32), ConfigError);
  c = HosConfig{};
  c.dt = 0.2;
  EXPECT_THROW(c.validate(32), ConfigError);
  c = HosConfig{};
  c.n_points = 20;
  EXPECT_THROW(c.validate(16), ConfigError);
  EXPECT_EQ(HosConfig{}.fine_points(32), 4u * 66u);
  EXPECT_THROW(evolve(SurfaceState::zero(4), -1.0, HosConfig{}), ConfigError);
}

TEST(Evolve, LinearLimit) {
  // zeta_j(t) = e^{-i sqrt|j| t} zeta_j(0) up to O(eps^2 t)
  SeaSpec spec;
  spec.j_max = 16;
  const auto sample = sample_sea(spec, 8, 0);
  std::vector<double> eps, errs;
  for (double e : {0.01, 0.02, 0.04}) {
    spec.epsilon = e;
    const auto z0 = initial_zeta(spec, sample);
    const auto tr = evolve(from_complex_variable(z0), 5.0, HosConfig{});
    const auto zt = tr.zeta(tr.size() - 1);
    double err = 0.0;
    for (int j = -16; j <= 16; ++j) {
      if (j == 0) continue;
      err = std::max(err, std::abs(zt[j] - z0[j] * std::polar(1.0, -std::sqrt(std::abs(j)) * 5.0)));
    }
    eps.push_back(e);
    errs.push_back(err);
  }
  EXPECT_NEAR(stats::loglog_slope(eps, errs), 2.0, 0.3);
}

TEST(Evolve, ConservationOverTwentyUnits) {
  const auto s0 = sea_with_steepness(32, 0.05, 3);
  const auto tr = evolve(s0, 20.0, HosConfig{});
  const auto& c0 = tr.conserved.front();
  double dh = 0.0, dp = 0.0, dm = 0.0;
  for (const auto& c : tr.conserved) {
    dh = std::max(dh, std::abs(c.hamiltonian - c0.hamiltonian) / std::abs(c0.hamiltonian));
    dp = std::max(dp, std::abs(c.momentum - c0.momentum) / std::abs(c0.momentum));
    dm = std::max(dm, std::abs(c.eta_mean));
  }
  EXPECT_LE(dh, 1e-8);
  EXPECT_LE(dp, 1e-8);
  EXPECT_LE(dm, 1e-13);
  EXPECT_DOUBLE_EQ(tr.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(tr.times.back(), 20.0);
  EXPECT_EQ(tr.size(), 201u);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
}

TEST(Evolve, FourthOrderInTime) {
  const auto s0 = sea_with_steepness(32, 0.05, 4);
  auto run = [&](double dt) {
    HosConfig c;
    c.dt = dt;
    return evolve(s0, 5.0, c).final_state();
  };
  const auto ref = run(0.0025);
  std::vector<double> dts, errs;
  for (double dt : {0.04, 0.02, 0.01}) {
    dts.push_back(dt);
    errs.push_back(state_distance(run(dt), ref));
  }
  EXPECT_NEAR(stats::loglog_slope(dts, errs), 4.0, 0.3);
}

TEST(Evolve, Reversibility) {
  const auto s0 = sea_with_steepness(16, 0.05, 5);
  EXPECT_EQ(reversibility_check(s0, 0.0, HosConfig{}).residual, 0.0);
  HosConfig c;
  c.dt = 0.05;
  const auto rep = reversibility_check(s0, 5.0, c);
  EXPECT_GT(rep.integrator_error, 0.0);
  EXPECT_LE(rep.residual, 10.0 * rep.integrator_error);
}

TEST(Evolve, TranslationEquivariance) {
  const auto s0 = sea_with_steepness(32, 0.05, 6);
  const double shift = 0.731;
  const auto a = evolve(translate(s0, shift), 5.0, HosConfig{}).final_state();
  const auto b = translate(evolve(s0, 5.0, HosConfig{}).final_state(), shift);
  EXPECT_LE(state_distance(a, b), 1e-10);
}

TEST(Evolve, StokesRotationRate) {
  for (int k : {1, 2, 3}) {
    for (double ka : {0.01, 0.02}) {
      HosConfig c;
      c.snapshot_stride = 5;
      const auto tr = evolve(single_mode(32, k, ka), 30.0, c);
      std::vector<double> t, phase;
      double prev = 0.0, unwrapped = 0.0;
      for (std::size_t i = 0; i < tr.size(); ++i) {
        const double p = std::arg(tr.zeta(i)[k]);
        if (i) unwrapped += std::remainder(p - prev, 2 * M_PI);
        prev = p;
        t.push_back(tr.times[i]);
        phase.push_back(unwrapped);
      }
      const double rate = -stats::fit_slope(t, phase);
      const double stokes = std::sqrt(double(k)) * (1 + ka * ka / 2);
      EXPECT_NEAR(rate, stokes, 0.03 * stokes) << "k " << k << " ka " << ka;
    }
  }
}

TEST(Evolve, BlowUpGuard) {
  HosConfig c;
  c.blowup_factor = 1.0 + 1e-9;
  try {
    evolve(sea_with_steepness(16, 0.2, 7), 5.0, c);
    FAIL() << "expected BlowUp";
  } catch (const BlowUp& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_GE(e.partial().size(), 1u);
  }
}

TEST(Trajectory, PersistRoundTrip) {
  HosConfig c;
  c.snapshot_stride = 50;
  const auto tr = evolve(sea_with_steepness(8, 0.05, 9), 1.0, c);
  const auto dir = std::filesystem::temp_directory_path() / "roguewave_traj_test";
  std::filesystem::remove_all(dir);
  save_trajectory(tr, dir);
  const auto back = load_trajectory(dir);
  ASSERT_EQ(back.size(), tr.size());
  EXPECT_EQ(back.times, tr.times);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_EQ(back.states[i], tr.states[i]);
  EXPECT_EQ(back.config.snapshot_stride, 50);
  EXPECT_EQ(tr.index_of(1.0), tr.size() - 1);
  EXPECT_THROW(tr.index_of(0.3), RangeError);
  std::filesystem::remove_all(dir);
}
