// roguewave <subcommand> [--config path] [--seed u64] [--workers n] [--out dir]
//
// Exit status: 0 ok, 2 configuration error, 3 numerical failure,
// 4 failed acceptance check (verify only).

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roguewave/acceptance.hpp"
#include "roguewave/experiment.hpp"

namespace rw = roguewave;
namespace ex = roguewave::experiment;

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;
constexpr int kAcceptanceFailure = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<int> snapshot_stride;
  std::optional<double> t_sync;
  std::optional<int> n_sync;
  std::optional<std::string> backend;
  bool print_config = false;
  std::vector<int> checks;
};

int run_experiment(const std::string& kind, const Options& o) {
  ex::ExperimentConfig cfg = o.config.empty() ? ex::default_config(kind) : ex::load_config(o.config, kind);
  try {
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out = *o.out;
    if (o.snapshot_stride) cfg.hos.snapshot_stride = *o.snapshot_stride;
    if (o.t_sync) cfg.sync.t_target = *o.t_sync;
    if (o.n_sync) cfg.sync.n_sync = *o.n_sync;
    if (o.backend) cfg.sync.backend = rw::phase_backend_from_string(*o.backend);
    cfg.sync.hos = cfg.hos;
    cfg.validate();
  } catch (const rw::ConfigError& e) {
    throw rw::ConfigError(std::string("command line: ") + e.what());
  }
  if (o.print_config) {
    std::cout << cfg.resolved().dump(2) << "\n";
    return 0;
  }
  const unsigned workers = rw::resolve_workers(static_cast<int>(o.workers ? *o.workers : cfg.workers));
  const auto res = ex::run(cfg, workers);
  std::cout << res.dir.string() << "\n" << res.summary.dump() << "\n";
  if (res.status != "ok") {
    std::cerr << "roguewave: " << res.error << "\n";
    return kNumericalFailure;
  }
  return 0;
}

int run_verify(const Options& o) {
  const unsigned workers = rw::resolve_workers(static_cast<int>(o.workers.value_or(0)));
  const auto results = rw::acceptance::run_acceptance(workers, o.checks);
  for (const auto& r : results)
    if (!r.passed) return kAcceptanceFailure;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random deep-water sea states: simulation, normal forms and rare-event statistics"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed (overrides the config)");
    sub->add_option("--workers", o.workers, "worker threads (default: config, then ROGUEWAVE_WORKERS, then 1)");
    sub->add_option("--out", o.out, "output root (overrides the config)");
    sub->add_option("--snapshot-stride", o.snapshot_stride, "solver steps between stored snapshots");
    sub->add_flag("--print-config", o.print_config, "print the resolved config and exit");
  };

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"sample", "draw random sea states and write spectra, grids and actions"},
      {"evolve", "integrate one sea state with the high-order spectral solver"},
      {"approx-error", "error of the frozen-action profiles against the solver"},
      {"stokes", "single-mode rotation rates against the Stokes correction"},
      {"sync", "solve the phase fixed point and evolve the synchronized seed"},
      {"mc-tail", "Monte Carlo tail of the maximal elevation"},
      {"rayleigh-ldp", "tilted estimates for sums of weighted Rayleigh variables"},
      {"gauss-test", "statistical tests of Gaussianity after nonlinear evolution"},
      {"chernoff", "initial-data ball escape probability against the Chernoff bound"},
      {"focus-rate", "rate of phase-aligned rogue events"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : kinds) {
    auto* sub = app.add_subcommand(name, help);
    common(sub);
    if (name == "sync") {
      sub->add_option("--t", o.t_sync, "target time");
      sub->add_option("--n-sync", o.n_sync, "number of synchronized modes");
      sub->add_option("--backend", o.backend, "integrable | reference")
          ->check(CLI::IsMember({"integrable", "reference"}));
    }
    subs.push_back(sub);
  }
  auto* verify = app.add_subcommand("verify", "run the built-in acceptance checks");
  verify->add_option("--workers", o.workers, "worker threads");
  verify->add_option("--checks", o.checks, "subset of check ids (default: all)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (verify->parsed()) return run_verify(o);
    for (auto* sub : subs)
      if (sub->parsed()) return run_experiment(sub->get_name(), o);
  } catch (const rw::ConfigError& e) {
    std::cerr << "roguewave: " << e.what() << "\n";
    return kConfigError;
  } catch (const rw::IntegrationFailure& e) {
    std::cerr << "roguewave: numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "roguewave: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
