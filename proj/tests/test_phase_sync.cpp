#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "roguewave/approx.hpp"
#include "roguewave/parallel.hpp"
#include "roguewave/phase_sync.hpp"
#include "roguewave/stats.hpp"

using namespace roguewave;

namespace {

PhaseMapConfig reference_config(double t, int N) {
  PhaseMapConfig c;
  c.t_target = t;
  c.n_sync = N;
  c.backend = PhaseBackend::reference;
  return c;
}

PhaseVector random_phases(int N, std::uint64_t seed) {
  Stream rng(seed, 0, StreamPurpose::test);
  PhaseVector p(N);
  for (auto& v : p.values()) v = rng.phase();
  return p;
}

}  // namespace

TEST(Wrap, Ranges) {
  EXPECT_DOUBLE_EQ(wrap(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap(-kPi), kPi);
  EXPECT_NEAR(wrap(3 * kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap(2 * kPi + 0.3), 0.3, 1e-15);
  EXPECT_NEAR(wrap_positive(-0.1), 2 * kPi - 0.1, 1e-15);
  EXPECT_GE(wrap_positive(-1e-18), 0.0);
  EXPECT_LT(wrap_positive(-1e-18), 2 * kPi);
}

TEST(PhaseMap, ZeroTimeGivesZeros) {
  SeaSpec spec;
  const auto sample = sample_sea(spec, 1, 0);
  for (auto backend : {PhaseBackend::integrable, PhaseBackend::reference}) {
    PhaseMapConfig c;
    c.t_target = 0.0;
    c.n_sync = 4;
    c.backend = backend;
    const auto T = phase_map(spec, sample, random_phases(4, 1), c);
    for (double v : T.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(PhaseMap, IntegrableIgnoresPhases) {
  SeaSpec spec;
  spec.epsilon = 0.2;
  const auto sample = sample_sea(spec, 2, 0);
  PhaseMapConfig c;
  c.t_target = 13.7;
  c.n_sync = 6;
  PhaseMap map(spec, sample, c);
  const auto ref = map(random_phases(6, 1));
  for (std::uint64_t s = 2; s < 6; ++s) EXPECT_EQ(map(random_phases(6, s)), ref);
}

TEST(PhaseMap, LinearLimit) {
  SeaSpec spec;
  spec.epsilon = 0.0;
  PhaseMapConfig c;
  c.t_target = 23.0;
  c.n_sync = 5;
  const auto T = phase_map(spec, sample_sea(spec, 3, 0), PhaseVector(5), c);
  for (int j = -5; j <= 5; ++j) {
    if (j == 0) continue;
    EXPECT_NEAR(wrap(T[j] - c.t_target * std::sqrt(std::abs(j))), 0.0, 1e-12);
  }
}

TEST(PhaseMap, ReferenceCachesByPhases) {
  SeaSpec spec;
  PhaseMap map(spec, sample_sea(spec, 4, 0), reference_config(1.0, 3));
  const auto phi = random_phases(3, 9);
  const auto a = map(phi);
  const auto b = map(phi);
  EXPECT_EQ(a, b);
  EXPECT_EQ(map.solves(), 1u);
  map(random_phases(3, 10));
  EXPECT_EQ(map.solves(), 2u);
}

TEST(PhaseMap, ReferenceApproachesIntegrableAtSmallAmplitude) {
  SeaSpec spec;
  spec.epsilon = 0.01;
  const auto sample = sample_sea(spec, 5, 0);
  auto c = reference_config(5.0, 4);
  const auto ref = phase_map(spec, sample, random_phases(4, 1), c);
  c.backend = PhaseBackend::integrable;
  const auto integ = phase_map(spec, sample, random_phases(4, 1), c);
  EXPECT_LE(phase_distance(ref, integ), 1e-5);
}

TEST(PhaseMap, SolverFailureRecordsPhases) {
  SeaSpec spec;
  spec.epsilon = 0.3;
  auto c = reference_config(5.0, 2);
  c.hos.blowup_factor = 1.0 + 1e-12;
  const auto phi = random_phases(2, 3);
  try {
    phase_map(spec, sample_sea(spec, 6, 0), phi, c);
    FAIL() << "expected a solver failure";
  } catch (const PhaseMapFailure& e) {
    EXPECT_EQ(e.phi(), phi);
  }
}

TEST(PhaseMapConfig, Validation) {
  SeaSpec spec;
  PhaseMapConfig c;
  c.n_sync = spec.j_max + 1;
  EXPECT_THROW(c.validate(spec), ConfigError);
  c = {};
  c.tol = 0.0;
  EXPECT_THROW(c.validate(spec), ConfigError);
  c = {};
  c.damping = 1.5;
  EXPECT_THROW(c.validate(spec), ConfigError);
  c = {};
  c.max_iter = 0;
  EXPECT_THROW(c.validate(spec), ConfigError);
  EXPECT_THROW(phase_backend_from_string("exact"), ConfigError);
  // Default N = floor(eps^-gamma), clamped to the band.
  spec.epsilon = 0.04;
  EXPECT_EQ(PhaseMapConfig{}.resolved_n(spec), 5);
  spec.epsilon = 1e-6;
  EXPECT_EQ(PhaseMapConfig{}.resolved_n(spec), spec.j_max);
  const auto back = phase_map_config_from_json(to_json(reference_config(7.0, 3)));
  EXPECT_EQ(back.backend, PhaseBackend::reference);
  EXPECT_EQ(back.n_sync, 3);
  EXPECT_EQ(back.t_target, 7.0);
}

TEST(FixedPoint, IntegrableConvergesInOneIteration) {
  SeaSpec spec;
  spec.epsilon = 0.1;
  const auto sample = sample_sea(spec, 7, 0);
  PhaseMapConfig c;
  c.t_target = 40.0;
  c.n_sync = 6;
  PhaseMap map(spec, sample, c);
  const auto r = find_fixed_point(map);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.residual, 0.0);
  const auto L = nonlinear_frequencies(actions(initial_zeta(spec, sample)));
  for (int j = -6; j <= 6; ++j) {
    if (j == 0) continue;
    EXPECT_NEAR(wrap(r.phi_star[j] - c.t_target * L[j]), 0.0, 1e-12);
  }
  const auto again = find_fixed_point(map, r.phi_star);
  EXPECT_EQ(again.iterations, 0);
  EXPECT_EQ(again.residual, 0.0);
  EXPECT_EQ(again.phi_star, r.phi_star);
}

TEST(FixedPoint, NonConvergenceIsReported) {
  SeaSpec spec;
  PhaseMapConfig c;
  c.n_sync = 3;
  c.damping = 0.5;
  c.max_iter = 2;
  const auto r = find_fixed_point(spec, sample_sea(spec, 8, 0), c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_NEAR(r.history[1] / r.history[0], 0.5, 1e-9);
  EXPECT_NEAR(r.contraction, 0.5, 1e-9);
  EXPECT_THROW(synthesize_rogue_seed(spec, sample_sea(spec, 8, 0), r), ConfigError);
}

TEST(FixedPoint, ReferenceResidualAndIndependenceOfLowPhases) {
  SeaSpec spec;
  spec.epsilon = 0.04;
  const int N = 6;
  const auto sample = sample_sea(spec, 9, 0);
  const auto c = reference_config(10.0, N);
  PhaseMap map(spec, sample, c);
  const auto r = find_fixed_point(map);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 5);
  EXPECT_LT(r.contraction, 1e-2);
  const auto T = map(r.phi_star);
  for (int j = -N; j <= N; ++j) {
    if (j == 0) continue;
    EXPECT_LT(std::abs(wrap(r.phi_star[j] - T[j])), c.tol);
  }
  // Same moduli and high modes, different low-mode phases: same fixed point.
  auto other = sample;
  for (int j = -N; j <= N; ++j)
    if (j != 0) other.phases[j] = wrap_positive(other.phases[j] + 1.0 + j);
  EXPECT_EQ(find_fixed_point(spec, other, c).phi_star, r.phi_star);
}

TEST(FixedPoint, ResidualInvariantUnderFullTurns) {
  SeaSpec spec;
  PhaseMap map(spec, sample_sea(spec, 10, 0), PhaseMapConfig{});
  const int N = map.n_sync();
  const auto phi = random_phases(N, 4);
  auto shifted = phi;
  for (auto& v : shifted.values()) v += 2 * kPi;
  EXPECT_NEAR(phase_distance(phi, map(phi)), phase_distance(shifted, map(shifted)), 1e-12);
}

TEST(Lipschitz, IntegrableBackendIsZero) {
  SeaSpec spec;
  PhaseMap map(spec, sample_sea(spec, 11, 0), PhaseMapConfig{});
  EXPECT_EQ(lipschitz_probe(map, spec, 5, 1).constant, 0.0);
}

TEST(Lipschitz, ScalesAsEpsilonCubed) {
  // The phase dependence of the integrated frequencies enters through the
  // non-integrable quartic terms, one order of epsilon beyond the frequency shift.
  std::vector<double> eps, lip;
  for (double e : {0.02, 0.04}) {
    SeaSpec spec;
    spec.epsilon = e;
    PhaseMap map(spec, sample_sea(spec, 7, 1), reference_config(10.0, 8));
    eps.push_back(e);
    lip.push_back(lipschitz_probe(map, spec, 3, 3).constant);
  }
  EXPECT_NEAR(stats::loglog_slope(eps, lip), 3.0, 0.4);
}

TEST(QuasiSync, Stability) {
  // Phases inside N(alpha) around phi* keep |phi - T(phi)| <= alpha (1 + Lip).
  SeaSpec spec;
  spec.epsilon = 0.04;
  const int N = 4;
  PhaseMap map(spec, sample_sea(spec, 12, 0), reference_config(10.0, N));
  const auto r = find_fixed_point(map);
  ASSERT_TRUE(r.converged);
  const double lip = lipschitz_probe(map, spec, 2, 5).constant;
  const double alpha = 0.05;
  Stream rng(13, 0, StreamPurpose::test);
  for (int trial = 0; trial < 3; ++trial) {
    auto phi = r.phi_star;
    for (auto& v : phi.values()) v += alpha * 0.999 * (2 * rng.uniform() - 1);
    ASSERT_TRUE(quasi_sync_event(phi, r.phi_star, alpha));
    EXPECT_LE(phase_distance(phi, map(phi)), alpha * (1 + lip) + r.residual);
  }
}

TEST(QuasiSync, EventBasics) {
  const auto phi = random_phases(3, 1);
  EXPECT_TRUE(quasi_sync_event(phi, phi, 1e-12));
  auto turned = phi;
  for (auto& v : turned.values()) v -= 4 * kPi;
  EXPECT_TRUE(quasi_sync_event(turned, phi, 1e-9));
  EXPECT_THROW(quasi_sync_event(phi, phi, kPi), ConfigError);
  EXPECT_THROW(quasi_sync_event(phi, phi, 0.0), ConfigError);
  EXPECT_THROW(quasi_sync_event(phi, random_phases(2, 1), 0.1), ConfigError);
}

TEST(QuasiSync, EventProbability) {
  SeaSpec spec;
  PhaseMapConfig c;
  for (int N : {1, 2}) {
    c.n_sync = N;
    const auto r = factorization_check(spec, c, kPi / 4, 0.0, 40000, 14, 2);
    EXPECT_EQ(r.hits_a, r.n);
    EXPECT_DOUBLE_EQ(r.q, std::pow(0.25, 2 * N));
    EXPECT_GE(r.p_value_n, 0.01) << "N = " << N << " P(N) = " << r.p_n();
  }
}

TEST(Factorization, ResidualWithinNoise) {
  SeaSpec spec;
  PhaseMapConfig c;
  c.n_sync = 1;
  // Threshold near the median of sum c_j R_j.
  const double threshold = 1.0;
  const auto r = factorization_check(spec, c, kPi / 4, threshold, 100000, 15, 2);
  EXPECT_GT(r.p_a(), 0.2);
  EXPECT_LT(r.p_a(), 0.8);
  EXPECT_LE(r.residual, 3.0 * r.std_error);
}

TEST(Factorization, FullNeighbourhoodHasZeroResidual) {
  SeaSpec spec;
  PhaseMapConfig c;
  c.n_sync = 2;
  const auto r = factorization_check(spec, c, kPi, 0.9, 2000, 16);
  EXPECT_EQ(r.hits_n, r.n);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(Factorization, DeterministicAcrossWorkers) {
  SeaSpec spec;
  PhaseMapConfig c;
  c.n_sync = 1;
  const auto a = factorization_check(spec, c, kPi / 3, 0.9, 3000, 17, 1);
  const auto b = factorization_check(spec, c, kPi / 3, 0.9, 3000, 17, 4);
  EXPECT_EQ(a.hits_a, b.hits_a);
  EXPECT_EQ(a.hits_an, b.hits_an);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(RogueSeed, SinglePairAlignsAtOrigin) {
  SeaSpec spec;
  spec.j_max = 1;
  spec.epsilon = 0.1;
  const auto sample = sample_sea(spec, 18, 0);
  PhaseMapConfig c;
  c.t_target = 9.0;
  c.n_sync = 1;
  const auto r = find_fixed_point(spec, sample, c);
  const auto seed = synthesize_rogue_seed(spec, sample, r);
  const auto eta = eta_app(c.t_target, to_complex_variable(seed));
  // Two-term cosine sum: (eps/sqrt(pi)) (c_1 R_1 + c_1 R_-1) cos x.
  const auto sup = sup_eval(eta, TorusGrid::for_band(1));
  EXPECT_NEAR(sup.value, focused_bound(spec, sample, 1), 1e-12);
  EXPECT_NEAR(wrap(sup.location), 0.0, 1e-12);
}

TEST(RogueSeed, ReferenceSeedFocuses) {
  SeaSpec spec;
  spec.epsilon = 0.04;
  const int N = 8;
  const double t = 20.0;
  const auto grid = TorusGrid::for_band(spec.j_max);
  for (std::uint64_t i = 0; i < 2; ++i) {
    const auto sample = sample_sea(spec, 19, i);
    const auto r = find_fixed_point(spec, sample, reference_config(t, N));
    ASSERT_TRUE(r.converged);
    const auto seed = synthesize_rogue_seed(spec, sample, r);
    HosConfig h;
    h.snapshot_stride = 250;
    const auto tr = evolve(seed, t, h);
    const double bound = focused_bound(spec, sample, N);
    EXPECT_GE(sup_eval(tr.final_state().eta, grid).value, 0.9 * bound);
    EXPECT_LT(sup_eval(tr.states[tr.index_of(t / 2)].eta, grid).value, bound);
    const auto hist = crest_history(tr);
    ASSERT_EQ(hist.size(), tr.size());
    EXPECT_EQ(hist.back().first, t);
  }
}

TEST(Parallel, OrderedAndDeterministic) {
  auto f = [](std::size_t i) { return static_cast<double>(i * i) + 0.5; };
  const auto a = parallel_map(1000, 1, f);
  const auto b = parallel_map(1000, 8, f);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(parallel_map(0, 4, f).empty());
  EXPECT_THROW(parallel_map(100, 3,
                            [](std::size_t i) -> int {
                              if (i == 57) throw RangeError("boom");
                              return 0;
                            }),
               RangeError);
}

TEST(Parallel, WorkerResolution) {
  EXPECT_EQ(resolve_workers(3), 3u);
  ::setenv("ROGUEWAVE_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(0), 5u);
  EXPECT_EQ(resolve_workers(2), 2u);
  ::setenv("ROGUEWAVE_WORKERS", "zero", 1);
  EXPECT_THROW(resolve_workers(0), ConfigError);
  ::unsetenv("ROGUEWAVE_WORKERS");
  EXPECT_EQ(resolve_workers(0), 1u);
}
