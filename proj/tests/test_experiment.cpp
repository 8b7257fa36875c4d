#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "roguewave/experiment.hpp"

using namespace roguewave;
using namespace roguewave::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rw_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  ExperimentConfig config(const std::string& kind, const std::string& body) {
    auto c = parse_config(body, "test.json", kind);
    c.out = dir_ / "runs";
    return c;
  }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  // Exit status of the CLI; stdout and stderr go to files in the scratch dir.
  int cli(const std::string& args) {
    const std::string cmd = std::string(ROGUEWAVE_CLI) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  fs::path dir_;
};

// Expects a ConfigError whose message starts with "test.json:<line>:".
void expect_error_at(const std::string& text, const std::string& kind, int line, const std::string& fragment) {
  try {
    parse_config(text, "test.json", kind);
    ADD_FAILURE() << "no error for: " << text;
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_EQ(msg.rfind("test.json:" + std::to_string(line) + ":", 0), 0u) << msg;
    EXPECT_NE(msg.find(fragment), std::string::npos) << msg;
  }
}

}  // namespace

TEST(KeyLines, NestedPathsAndComments) {
  const std::string text =
      "{\n"
      "  // \"fake\": 1\n"
      "  \"sea\": {\"epsilon\": 0.1,\n"
      "    \"j_max\": 8},\n"
      "  /* \"also\": {\n"
      "  } */\n"
      "  \"params\": {\"modes\": [1, {\"x\": 2}], \"name\": \"a\\\"b,c\",\n"
      "    \"t\": 3}\n"
      "}\n";
  const auto lines = key_lines(text);
  EXPECT_EQ(lines.at("sea"), 3);
  EXPECT_EQ(lines.at("sea/epsilon"), 3);
  EXPECT_EQ(lines.at("sea/j_max"), 4);
  EXPECT_EQ(lines.at("params"), 7);
  EXPECT_EQ(lines.at("params/t"), 8);
  EXPECT_EQ(lines.count("fake"), 0u);
  EXPECT_EQ(lines.count("also"), 0u);
  EXPECT_EQ(lines.count("params/a\\\"b,c"), 0u);
}

TEST(ParseConfig, DefaultsAndOverrides) {
  const auto c = parse_config("{\"seed\": 9, \"sea\": {\"epsilon\": 0.03}, \"params\": {\"n\": 1e3}}", "x", "mc-tail");
  EXPECT_EQ(c.experiment, "mc-tail");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.sea.epsilon, 0.03);
  EXPECT_EQ(c.sea.j_max, SeaSpec{}.j_max);
  EXPECT_EQ(c.params.at("n").get<long>(), 1000);
  EXPECT_DOUBLE_EQ(c.params.at("lambda0").get<double>(), RogueStudyConfig{}.lambda0);
  EXPECT_EQ(c.sync.hos.dt, c.hos.dt);
  EXPECT_EQ(parse_config("{\"experiment\": \"stokes\"}", "x").experiment, "stokes");
}

TEST(ParseConfig, ErrorsAreLineAnchored) {
  expect_error_at("{\n  \"sea\": {\n    \"epsilon\": 0.05,\n    \"j_max\": -3\n  }\n}", "sample", 4, "j_max");
  expect_error_at("{\n  \"sea\": {\n    \"jmax\": 3\n  }\n}", "sample", 3, "unknown key 'jmax'");
  expect_error_at("{\n\n  \"hos\": {\"dt\": \"small\"}\n}", "evolve", 3, "hos.dt must be a number");
  expect_error_at("{\n  \"params\": {\n    \"n\": 2.5\n  }\n}", "sample", 3, "must be an integer");
  expect_error_at("{\n  \"sea\": {\n    \"epsilon\": 0.05,,\n  }\n}", "sample", 3, "syntax error");
  expect_error_at("{\n  \"experiment\": \"evolve\"\n}", "sample", 2, "subcommand");
  expect_error_at("{\n  \"colour\": 1\n}", "sample", 2, "unknown top-level key");
  expect_error_at("{\n  \"sync\": {\n    \"t_target\": 5,\n    \"backend\": \"fast\"\n  }\n}", "sync", 4, "fast");
  expect_error_at("{\n  \"params\": {\n    \"M\": 1,\n    \"alpha\": 4\n  }\n}", "focus-rate", 4, "alpha");
  expect_error_at("{\n  \"params\": {\"index\": 1,\n    \"times\": [0.15]}\n}", "approx-error", 3, "times");
  expect_error_at("[1, 2]", "sample", 1, "JSON object");
  EXPECT_THROW(parse_config("{}", "x"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json", "sample"), ConfigError);
}

TEST(ExperimentConfig, RunIdIsContentAddressed) {
  auto a = parse_config("{}", "x", "sample");
  auto b = parse_config("{\"workers\": 8, \"out\": \"elsewhere\"}", "x", "sample");
  EXPECT_EQ(a.run_id(), b.run_id());
  b.seed = 1;
  EXPECT_NE(a.run_id(), b.run_id());
  auto c = parse_config("{\"params\": {\"index\": 2}}", "x", "sample");
  EXPECT_NE(a.run_id(), c.run_id());
  EXPECT_EQ(a.run_id().rfind("sample-", 0), 0u);
}

TEST_F(Scratch, SampleIsByteIdenticalAcrossRuns) {
  auto c = config("sample", "{\"seed\": 4}");
  const auto first = run(c, 1);
  const auto json1 = slurp(first.dir / "samples.json");
  const auto spec1 = slurp(first.dir / "spectrum.json");
  const auto eta1 = slurp(first.dir / "eta.csv");
  fs::remove_all(first.dir);
  const auto second = run(c, 1);
  EXPECT_EQ(first.dir, second.dir);
  EXPECT_EQ(slurp(second.dir / "samples.json"), json1);
  EXPECT_EQ(slurp(second.dir / "spectrum.json"), spec1);
  EXPECT_EQ(slurp(second.dir / "eta.csv"), eta1);

  // The spectrum file holds zeta_0 for this seed.
  const auto z = complex_spectrum_from_json(nlohmann::json::parse(spec1));
  const auto expect = initial_zeta(c.sea, sample_sea(c.sea, 4, 0));
  ASSERT_EQ(z.j_max(), c.sea.j_max);
  for (int j = -z.j_max(); j <= z.j_max(); ++j)
    if (j) {
      EXPECT_EQ(z[j], expect[j]);
    }
  EXPECT_EQ(slurp(second.dir / "eta.csv").rfind("x,value\n", 0), 0u);
  EXPECT_EQ(slurp(second.dir / "actions.csv").rfind("k,value\n", 0), 0u);

  c.seed = 5;
  const auto other = run(c, 1);
  EXPECT_NE(other.dir, first.dir);
  EXPECT_NE(slurp(other.dir / "samples.json"), json1);
}

TEST_F(Scratch, ManifestRegeneratesTheRun) {
  const auto c = config("sample", "{\"seed\": 12, \"sea\": {\"j_max\": 6}, \"params\": {\"n\": 3}}");
  const auto res = run(c, 2);
  const auto m = nlohmann::json::parse(slurp(res.dir / "manifest.json"));
  EXPECT_EQ(m.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(m.at("status"), "ok");
  EXPECT_EQ(m.at("git_describe"), ROGUEWAVE_GIT_DESCRIBE);
  EXPECT_TRUE(m.contains("wall_time_seconds"));
  EXPECT_EQ(m.at("files").size(), 6u);
  EXPECT_EQ(m.at("config"), c.resolved());
  const auto again = parse_config(m.at("config").dump(), "manifest");
  EXPECT_EQ(again.run_id(), c.run_id());
  EXPECT_EQ(again.resolved(), c.resolved());
  const auto samples = nlohmann::json::parse(slurp(res.dir / "samples.json")).at("samples");
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[2].at("index"), 2);
  EXPECT_EQ(slurp(res.dir / "samples.csv").rfind("# schema_version=1\n", 0), 0u);
}

TEST_F(Scratch, WorkerCountDoesNotChangeResults) {
  for (const auto& [kind, body, file] :
       {std::tuple{"mc-tail", "{\"seed\": 3, \"sea\": {\"j_max\": 8}, \"params\": {\"n\": 3000, \"t\": 5, "
                              "\"lambda0\": 0.3}}", "mc_tail.csv"},
        std::tuple{"rayleigh-ldp", "{\"seed\": 3, \"params\": {\"n\": 2000, \"probabilities\": [1e-6]}}",
                   "rayleigh_ldp.csv"},
        std::tuple{"chernoff", "{\"seed\": 3, \"params\": {\"n\": 2000}}", "chernoff.csv"}}) {
    auto c = config(kind, body);
    c.out = dir_ / "w1";
    const auto a = slurp(run(c, 1).dir / file);
    c.out = dir_ / "w8";
    const auto b = slurp(run(c, 8).dir / file);
    EXPECT_EQ(a, b) << kind;
    EXPECT_EQ(a.rfind("# schema_version=1\n", 0), 0u);
  }
}

TEST_F(Scratch, StokesTableMatchesTheory) {
  const auto res = run(config("stokes", "{}"), 1);
  std::istringstream csv(slurp(res.dir / "stokes.csv"));
  std::string line;
  std::getline(csv, line);
  std::getline(csv, line);
  EXPECT_EQ(line, "k,ka,measured_rate,stokes_rate,normal_form_rate,rel_error");
  int rows = 0;
  while (std::getline(csv, line)) {
    double k, ka, measured, stokes, nf, rel;
    char sep;
    std::istringstream row(line);
    row >> k >> sep >> ka >> sep >> measured >> sep >> stokes >> sep >> nf >> sep >> rel;
    EXPECT_NEAR(stokes, std::sqrt(k) * (1 + ka * ka / 2), 1e-15);
    EXPECT_NEAR(nf, stokes, 1e-12);
    EXPECT_LE(rel, 0.03);
    ++rows;
  }
  EXPECT_EQ(rows, 6);
}

TEST_F(Scratch, EvolveWritesTrajectory) {
  auto c = config("evolve", "{\"sea\": {\"j_max\": 8}, \"params\": {\"t\": 1}}");
  c.hos.snapshot_stride = 25;
  const auto res = run(c, 1);
  const auto tr = load_trajectory(res.dir / "trajectory");
  ASSERT_EQ(tr.size(), 5u);
  EXPECT_DOUBLE_EQ(tr.times[1], 0.25);
  const auto s0 = build_initial_state(c.sea, sample_sea(c.sea, 0, 0));
  EXPECT_LE(state_distance(tr.states[0], s0), 1e-15);
}

TEST_F(Scratch, SolverFailureIsFlagged) {
  const auto c = config("evolve", "{\"sea\": {\"epsilon\": 3.0, \"j_max\": 8}, \"params\": {\"t\": 50}}");
  EXPECT_THROW(run(c, 1), IntegrationFailure);
  const auto m = nlohmann::json::parse(slurp(c.out / c.run_id() / "manifest.json"));
  EXPECT_EQ(m.at("status"), "failed");
  EXPECT_NE(m.at("error").get<std::string>().find("H^4"), std::string::npos);
  EXPECT_TRUE(fs::exists(c.out / c.run_id() / "trajectory" / "manifest.json"));
}

TEST_F(Scratch, SyncRecordsFixedPointAndCrest) {
  auto c = config("sync", "{\"seed\": 7, \"sea\": {\"epsilon\": 0.04}, \"sync\": {\"t_target\": 20, \"n_sync\": 4}}");
  const auto res = run(c, 1);
  const auto j = nlohmann::json::parse(slurp(res.dir / "sync.json"));
  EXPECT_TRUE(j.at("result").at("converged").get<bool>());
  EXPECT_EQ(j.at("summary").at("n_sync"), 4);
  // Integrable backend: the evolved seed reaches the focused bound within the O(eps^2) solver deviation.
  EXPECT_NEAR(j.at("summary").at("crest_over_bound").get<double>(), 1.0, 0.05);
  EXPECT_EQ(slurp(res.dir / "crest.csv").rfind("# schema_version=1\nt,sup_eta\n", 0), 0u);
}

TEST_F(Scratch, CliExitCodes) {
  EXPECT_EQ(cli("sample --seed 1 --out " + (dir_ / "runs").string()), 0);
  EXPECT_NE(slurp(dir_ / "stdout").find("sample-"), std::string::npos);

  const auto bad = write("bad.json", "{\n  \"sea\": {\n    \"delta\": 1.5\n  }\n}\n");
  EXPECT_EQ(cli("sample --config " + bad.string()), 2);
  EXPECT_NE(slurp(dir_ / "stderr").find("bad.json:3:"), std::string::npos) << slurp(dir_ / "stderr");

  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("sample --no-such-flag"), 2);
  EXPECT_EQ(cli("sync --n-sync 99 --out " + dir_.string()), 2);

  const auto blow = write("blow.json", "{\"sea\": {\"epsilon\": 3.0, \"j_max\": 8}, \"params\": {\"t\": 50}}");
  EXPECT_EQ(cli("evolve --config " + blow.string() + " --out " + (dir_ / "runs").string()), 3);

  EXPECT_EQ(cli("verify --checks 1,4"), 0);
  EXPECT_NE(slurp(dir_ / "stdout").find("[PASS]  4"), std::string::npos);
}

TEST_F(Scratch, CliSyncExampleAndWorkerEnv) {
  const auto out = (dir_ / "runs").string();
  ASSERT_EQ(cli("sync --t 50 --n-sync 8 --backend reference --seed 7 --out " + out), 0) << slurp(dir_ / "stderr");
  const auto path = slurp(dir_ / "stdout").substr(0, slurp(dir_ / "stdout").find('\n'));
  const auto j = nlohmann::json::parse(slurp(fs::path(path) / "sync.json"));
  EXPECT_TRUE(j.at("result").at("converged").get<bool>());
  EXPECT_EQ(j.at("summary").at("backend"), "reference");
  EXPECT_GE(j.at("summary").at("crest_over_bound").get<double>(), 0.9);

  const auto cfg = write("mc.json", "{\"sea\": {\"j_max\": 8}, \"params\": {\"n\": 2000, \"t\": 3, \"lambda0\": 0.3}}");
  ASSERT_EQ(cli("mc-tail --config " + cfg.string() + " --out " + (dir_ / "a").string()), 0);
  const std::string env_run = "ROGUEWAVE_WORKERS=4 " + std::string(ROGUEWAVE_CLI) + " mc-tail --config " +
                              cfg.string() + " --out " + (dir_ / "b").string() + " >/dev/null";
  ASSERT_EQ(std::system(env_run.c_str()), 0);
  const auto id = parse_config(slurp(cfg), "mc.json", "mc-tail").run_id();
  EXPECT_EQ(slurp(dir_ / "a" / id / "mc_tail.csv"), slurp(dir_ / "b" / id / "mc_tail.csv"));
  const auto m = nlohmann::json::parse(slurp(dir_ / "b" / id / "manifest.json"));
  EXPECT_EQ(m.at("workers"), 4);
}
