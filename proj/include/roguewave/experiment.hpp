#pragma once

// Config-driven experiment runner. A config is one JSON document (comments
// allowed):
//
//   { "experiment": "mc-tail", "seed": 11, "workers": 0, "out": "runs",
//     "sea": {...}, "hos": {...}, "sync": {...}, "params": {...} }
//
// Every section is optional; omitted keys take the documented defaults and the
// fully resolved config is written to the run manifest. Results land in
// <out>/<experiment>-<hash of resolved config>/.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "roguewave/approx.hpp"
#include "roguewave/errors.hpp"
#include "roguewave/hos.hpp"
#include "roguewave/normal_form.hpp"
#include "roguewave/parallel.hpp"
#include "roguewave/phase_sync.hpp"
#include "roguewave/random_init.hpp"
#include "roguewave/rare_event.hpp"
#include "roguewave/spectral.hpp"
#include "roguewave/stats.hpp"

#ifndef ROGUEWAVE_GIT_DESCRIBE
#define ROGUEWAVE_GIT_DESCRIBE "unknown"
#endif

namespace roguewave::experiment {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"sample",       "evolve",    "approx-error", "stokes",
                                                 "sync",         "mc-tail",   "rayleigh-ldp", "gauss-test",
                                                 "chernoff",     "focus-rate"};
  return kinds;
}

inline bool is_experiment_kind(const std::string& k) {
  const auto& ks = experiment_kinds();
  return std::find(ks.begin(), ks.end(), k) != ks.end();
}

/// Default `params` block for each experiment.
inline nlohmann::json default_params(const std::string& kind) {
  using nlohmann::json;
  if (kind == "sample") return {{"index", 0}, {"n", 1}, {"grid_points", 0}};
  if (kind == "evolve") return {{"index", 0}, {"t", 10.0}};
  if (kind == "approx-error")
    return {{"index", 0}, {"epsilons", {0.02, 0.04, 0.08}}, {"times", {10.0}}, {"app2", true}};
  if (kind == "stokes") return {{"modes", {1, 2, 3}}, {"steepness", {0.01, 0.02}}, {"t", 30.0}, {"j_max", 32}};
  if (kind == "sync") return {{"index", 0}, {"evolve", true}};
  if (kind == "mc-tail") {
    const RogueStudyConfig d;
    return {{"epsilons", d.epsilons}, {"lambda0", d.lambda0},         {"t", d.t},
            {"n", d.n},               {"model", to_string(d.model)},  {"screen_margin", d.screen_margin},
            {"require_ball", d.require_ball}};
  }
  if (kind == "rayleigh-ldp")
    return {{"weights", json::array()}, {"M", 8}, {"probabilities", {1e-4, 1e-7, 1e-10}}, {"n", 20000}, {"refine", 3}};
  if (kind == "gauss-test")
    return {{"t", 7.3}, {"modes", {1, -1, 3}}, {"n", 20000}, {"adversarial", false}, {"level", 0.01}};
  if (kind == "chernoff") return {{"radii", {1.0, 1.5, 2.0}}, {"n", 100000}, {"law_modes", {1, -1, 2}}};
  if (kind == "focus-rate") {
    const FocusingEventConfig d;
    return {{"t", d.t},         {"lambda0", d.lambda0},           {"M", d.M},
            {"tol_phase", d.tol_phase}, {"alpha", d.alpha},       {"synchronized", d.synchronized},
            {"n", d.n},         {"model", to_string(d.model)}};
  }
  throw ConfigError("unknown experiment '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Source positions

/// Line of every object key in a JSON text, keyed by slash-joined path
/// ("sea/epsilon"). Array elements share their array's path.
inline std::map<std::string, int> key_lines(std::string_view text) {
  std::map<std::string, int> out;
  std::vector<std::string> path;
  std::vector<char> open;
  std::string pending;
  bool expect_key = false;
  int line = 1;
  auto join = [&](const std::string& leaf) {
    std::string p;
    for (const auto& s : path)
      if (!s.empty()) p += s + "/";
    return p + leaf;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i + 1 < text.size() && text[i + 1] != '\n') ++i;
    } else if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      for (i += 2; i + 1 < text.size() && !(text[i] == '*' && text[i + 1] == '/'); ++i) line += text[i] == '\n';
      ++i;
    } else if (c == '"') {
      const int start_line = line;
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        line += text[i] == '\n';
        s += text[i];
      }
      if (!open.empty() && open.back() == '{' && expect_key) {
        out.emplace(join(s), start_line);
        pending = s;
        expect_key = false;
      }
    } else if (c == '{' || c == '[') {
      open.push_back(c);
      path.push_back(pending);
      pending.clear();
      expect_key = c == '{';
    } else if ((c == '}' || c == ']') && !open.empty()) {
      open.pop_back();
      path.pop_back();
      pending.clear();
    } else if (c == ',' && !open.empty() && open.back() == '{') {
      expect_key = true;
      pending.clear();
    }
  }
  return out;
}

class SourceText {
 public:
  SourceText(std::string origin, std::string_view text) : origin_(std::move(origin)), lines_(key_lines(text)) {}

  int line_of(const std::string& path) const {
    for (std::string p = path;;) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) return 1;
      p.resize(slash);
    }
  }

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_of(path)) + ": " + msg);
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, int> lines_;
};

namespace detail {

inline const char* kind_name(const nlohmann::json& v) {
  if (v.is_boolean()) return "a boolean";
  if (v.is_number_integer() || v.is_number_unsigned()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "an array";
  if (v.is_object()) return "an object";
  return "null";
}

// Coerces `v` to the JSON type of `ref`; integral floats are accepted for integer slots.
inline bool conform(nlohmann::json& v, const nlohmann::json& ref) {
  if (ref.is_boolean()) return v.is_boolean();
  if (ref.is_string()) return v.is_string();
  if (ref.is_object()) return v.is_object();
  if (ref.is_number_integer() || ref.is_number_unsigned()) {
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d != std::floor(d) || std::abs(d) > 9e15) return false;
      v = static_cast<std::int64_t>(d);
    }
    if (!(v.is_number_integer() || v.is_number_unsigned())) return false;
    return !(ref.is_number_unsigned() && v.get<std::int64_t>() < 0);
  }
  if (ref.is_number()) {
    if (!v.is_number()) return false;
    v = v.get<double>();
    return true;
  }
  if (ref.is_array()) {
    if (!v.is_array()) return false;
    if (ref.empty()) {
      for (auto& e : v)
        if (!e.is_number()) return false;
      return true;
    }
    for (auto& e : v)
      if (!conform(e, ref.front())) return false;
    return true;
  }
  return false;
}

/// Overlays `user` onto `defaults`, rejecting unknown keys and type mismatches.
inline nlohmann::json overlay(const nlohmann::json& defaults, const nlohmann::json& user, const std::string& section,
                              const SourceText& src) {
  if (!user.is_object()) src.fail(section, "'" + section + "' must be an object");
  nlohmann::json out = defaults;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = section + "/" + it.key();
    if (!defaults.contains(it.key())) {
      std::string known;
      for (auto d = defaults.begin(); d != defaults.end(); ++d) known += (known.empty() ? "" : ", ") + d.key();
      src.fail(path, "unknown key '" + it.key() + "' in " + section + " (known: " + known + ")");
    }
    nlohmann::json v = it.value();
    if (!conform(v, defaults.at(it.key())))
      src.fail(path, section + "." + it.key() + " must be " + kind_name(defaults.at(it.key())) + ", got " +
                         kind_name(it.value()));
    out[it.key()] = std::move(v);
  }
  return out;
}

// Runs `fn`; a ConfigError it raises is re-anchored at the first key of
// `section` named in the message, else at the section itself.
template <class Fn>
auto anchored(const SourceText& src, const std::string& section, const nlohmann::json& user, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    std::string path = section;
    if (user.is_object()) {
      for (auto it = user.begin(); it != user.end(); ++it) {
        const auto pos = msg.find(it.key());
        const auto word = [&](std::size_t p) { return p >= msg.size() || !(std::isalnum((unsigned char)msg[p]) || msg[p] == '_'); };
        if (pos != std::string::npos && (pos == 0 || word(pos - 1)) && word(pos + it.key().size())) {
          path = section + "/" + it.key();
          break;
        }
      }
    }
    src.fail(path, msg);
  }
}

inline bool on_snapshot_grid(double t, const HosConfig& h) {
  const double q = t / (h.dt * h.snapshot_stride);
  return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, q);
}

inline RogueStudyConfig rogue_study_config(const nlohmann::json& p, const HosConfig& hos) {
  RogueStudyConfig s;
  s.epsilons = p.at("epsilons").get<std::vector<double>>();
  s.lambda0 = p.at("lambda0").get<double>();
  s.t = p.at("t").get<double>();
  s.n = p.at("n").get<std::size_t>();
  s.model = evolution_model_from_string(p.at("model").get<std::string>());
  s.screen_margin = p.at("screen_margin").get<double>();
  s.require_ball = p.at("require_ball").get<bool>();
  s.hos = hos;
  return s;
}

inline FocusingEventConfig focusing_config(const nlohmann::json& p, const PhaseMapConfig& sync) {
  FocusingEventConfig f;
  f.t = p.at("t").get<double>();
  f.lambda0 = p.at("lambda0").get<double>();
  f.M = p.at("M").get<int>();
  f.tol_phase = p.at("tol_phase").get<double>();
  f.alpha = p.at("alpha").get<double>();
  f.synchronized = p.at("synchronized").get<bool>();
  f.n = p.at("n").get<std::size_t>();
  f.model = evolution_model_from_string(p.at("model").get<std::string>());
  f.sync = sync;
  f.sync.t_target = f.t;
  return f;
}

inline void check_band_modes(const std::vector<int>& modes, int J, const char* key) {
  for (int j : modes)
    if (j == 0 || std::abs(j) > J) throw ConfigError(std::string("params.") + key + " must be nonzero with |j| <= j_max");
}

/// Range checks on an experiment's params. Throws ConfigError naming the key.
inline void validate_params(const std::string& kind, const nlohmann::json& p, const SeaSpec& sea,
                            const HosConfig& hos, const PhaseMapConfig& sync) {
  auto positive = [&](const char* key) {
    if (!(p.at(key).get<double>() > 0.0)) throw ConfigError(std::string("params.") + key + " must be positive");
  };
  auto non_negative = [&](const char* key) {
    if (!(p.at(key).get<double>() >= 0.0)) throw ConfigError(std::string("params.") + key + " must be >= 0");
  };
  if (kind == "sample") {
    if (p.at("n").get<std::int64_t>() < 1) throw ConfigError("params.n must be >= 1");
  } else if (kind == "evolve") {
    non_negative("t");
  } else if (kind == "approx-error") {
    const auto eps = p.at("epsilons").get<std::vector<double>>();
    const auto times = p.at("times").get<std::vector<double>>();
    if (eps.empty()) throw ConfigError("params.epsilons must be non-empty");
    if (times.empty()) throw ConfigError("params.times must be non-empty");
    for (double e : eps)
      if (!(e > 0.0)) throw ConfigError("params.epsilons must be positive");
    for (double t : times)
      if (!(t >= 0.0) || !on_snapshot_grid(t, hos))
        throw ConfigError("params.times must be non-negative multiples of hos.dt * hos.snapshot_stride");
  } else if (kind == "stokes") {
    positive("t");
    const int J = p.at("j_max").get<int>();
    if (J < 1) throw ConfigError("params.j_max must be >= 1");
    for (int k : p.at("modes").get<std::vector<int>>())
      if (k < 1 || k > J) throw ConfigError("params.modes must lie in 1..j_max");
    for (double ka : p.at("steepness").get<std::vector<double>>())
      if (!(ka > 0.0)) throw ConfigError("params.steepness must be positive");
  } else if (kind == "mc-tail") {
    rogue_study_config(p, hos).validate();
  } else if (kind == "rayleigh-ldp") {
    const auto w = p.at("weights").get<std::vector<double>>();
    for (double c : w)
      if (!(c > 0.0)) throw ConfigError("params.weights must be positive");
    if (w.empty() && p.at("M").get<int>() < 1) throw ConfigError("params.M must be >= 1");
    if (w.empty() && p.at("M").get<int>() > sea.j_max) throw ConfigError("params.M must not exceed sea.j_max");
    const auto probs = p.at("probabilities").get<std::vector<double>>();
    if (probs.empty()) throw ConfigError("params.probabilities must be non-empty");
    for (double q : probs)
      if (!(q > 0.0 && q < 1.0)) throw ConfigError("params.probabilities must lie in (0, 1)");
    if (p.at("n").get<std::int64_t>() < 100) throw ConfigError("params.n must be >= 100");
    if (p.at("refine").get<int>() < 0) throw ConfigError("params.refine must be >= 0");
  } else if (kind == "gauss-test") {
    non_negative("t");
    const double level = p.at("level").get<double>();
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("params.level must lie in (0, 1)");
    if (p.at("n").get<std::int64_t>() < 10000) throw ConfigError("params.n must be >= 10000");
    check_band_modes(p.at("modes").get<std::vector<int>>(), sea.j_max, "modes");
  } else if (kind == "chernoff") {
    for (double R : p.at("radii").get<std::vector<double>>())
      if (!(R > 0.0)) throw ConfigError("params.radii must be positive");
    if (p.at("n").get<std::int64_t>() < 100) throw ConfigError("params.n must be >= 100");
    check_band_modes(p.at("law_modes").get<std::vector<int>>(), sea.j_max, "law_modes");
  } else if (kind == "focus-rate") {
    const auto f = focusing_config(p, sync);
    f.validate(sea);
    if (!(f.lambda0 >= 0.0)) throw ConfigError("params.lambda0 must be >= 0");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  unsigned workers = 0;  ///< 0: ROGUEWAVE_WORKERS or 1
  std::filesystem::path out = "runs";
  SeaSpec sea;
  HosConfig hos;
  PhaseMapConfig sync;  ///< sync.hos mirrors hos
  nlohmann::json params;

  /// Checks cross-section constraints. Throws ConfigError.
  void validate() const {
    if (!is_experiment_kind(experiment)) throw ConfigError("unknown experiment '" + experiment + "'");
    sea.validate();
    hos.validate(experiment == "stokes" ? params.at("j_max").get<int>() : sea.j_max);
    PhaseMapConfig s = sync;
    s.hos = hos;
    s.validate(sea);
    detail::validate_params(experiment, params, sea, hos, s);
  }

  /// Everything that determines the results (not workers or out), with defaults filled in.
  nlohmann::json resolved() const {
    auto s = to_json(sync);
    s.erase("hos");
    return {{"experiment", experiment}, {"seed", seed}, {"sea", to_json(sea)},
            {"hos", to_json(hos)},      {"sync", s},    {"params", params}};
  }

  /// Content address: experiment name plus FNV-1a of the canonical resolved config.
  std::string run_id() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : resolved().dump()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return experiment + "-" + buf;
  }
};

inline ExperimentConfig default_config(const std::string& kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.params = default_params(kind);
  return c;
}

/// Parses a config document. `kind`, when given, is the subcommand; a
/// conflicting "experiment" key is an error. Errors carry origin:line.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin,
                                     const std::optional<std::string>& kind = std::nullopt) {
  const SourceText src(origin, text);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ConfigError(origin + ":" + std::to_string(line) + ": syntax error: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(origin + ":1: config must be a JSON object");

  const nlohmann::json top_defaults = {{"experiment", ""}, {"seed", std::uint64_t(0)}, {"workers", 0},
                                       {"out", "runs"},    {"sea", nlohmann::json::object()},
                                       {"hos", nlohmann::json::object()}, {"sync", nlohmann::json::object()},
                                       {"params", nlohmann::json::object()}};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!top_defaults.contains(it.key())) src.fail(it.key(), "unknown top-level key '" + it.key() + "'");
    nlohmann::json v = it.value();
    if (!detail::conform(v, top_defaults.at(it.key())))
      src.fail(it.key(), "'" + it.key() + "' must be " + detail::kind_name(top_defaults.at(it.key())));
    doc[it.key()] = v;
  }

  ExperimentConfig c;
  c.experiment = doc.value("experiment", std::string());
  if (kind) {
    if (!c.experiment.empty() && c.experiment != *kind)
      src.fail("experiment", "config is for '" + c.experiment + "' but the subcommand is '" + *kind + "'");
    c.experiment = *kind;
  }
  if (c.experiment.empty()) throw ConfigError(origin + ":1: no experiment given");
  if (!is_experiment_kind(c.experiment)) src.fail("experiment", "unknown experiment '" + c.experiment + "'");
  c.seed = doc.value("seed", std::uint64_t(0));
  const auto workers = doc.value("workers", std::int64_t(0));
  if (workers < 0) src.fail("workers", "workers must be >= 0");
  c.workers = static_cast<unsigned>(workers);
  c.out = doc.value("out", std::string("runs"));

  const auto empty = nlohmann::json::object();
  const auto& sea = doc.contains("sea") ? doc.at("sea") : empty;
  auto sea_defaults = to_json(SeaSpec{});
  sea_defaults["custom_c"] = nlohmann::json::array();
  const auto sea_merged = detail::overlay(sea_defaults, sea, "sea", src);
  c.sea = detail::anchored(src, "sea", sea, [&] { return sea_spec_from_json(sea_merged); });

  const auto& hos = doc.contains("hos") ? doc.at("hos") : empty;
  auto hos_defaults = to_json(HosConfig{});
  hos_defaults["dealias_pad"] = 0.0;
  hos_defaults["n_points"] = 0;
  c.hos = hos_config_from_json(detail::overlay(hos_defaults, hos, "hos", src));

  const auto& sync = doc.contains("sync") ? doc.at("sync") : empty;
  auto sync_defaults = to_json(PhaseMapConfig{});
  sync_defaults.erase("hos");
  const auto sync_merged = detail::overlay(sync_defaults, sync, "sync", src);
  c.sync = detail::anchored(src, "sync", sync, [&] { return phase_map_config_from_json(sync_merged); });
  c.sync.hos = c.hos;

  const auto& params = doc.contains("params") ? doc.at("params") : empty;
  c.params = detail::overlay(default_params(c.experiment), params, "params", src);

  detail::anchored(src, "hos", hos, [&] {
    c.hos.validate(c.experiment == "stokes" ? c.params.at("j_max").get<int>() : c.sea.j_max);
    return 0;
  });
  detail::anchored(src, "sync", sync, [&] {
    c.sync.validate(c.sea);
    return 0;
  });
  detail::anchored(src, "params", params, [&] {
    detail::validate_params(c.experiment, c.params, c.sea, c.hos, c.sync);
    return 0;
  });
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const std::optional<std::string>& kind = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), kind);
}

// ---------------------------------------------------------------------------
// Output

/// CSV with a leading "# schema_version=N" line; numbers at full precision.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  using Cell = std::variant<double, long long, std::string>;

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw std::logic_error("csv: row width mismatch");
    rows_.push_back(std::move(row));
  }

  void write(std::ostream& os) const {
    os << "# schema_version=" << kSchemaVersion << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    os.precision(17);
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ",";
        std::visit([&](const auto& v) { os << v; }, row[i]);
      }
      os << "\n";
    }
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(os);
    files_.push_back(name);
  }
  void write_json(const std::string& name, const nlohmann::json& j) {
    write(name, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  }
  void write_csv(const std::string& name, const CsvTable& t) {
    write(name, [&](std::ostream& os) { t.write(os); });
  }
  void note(const std::string& name) { files_.push_back(name); }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

struct RunResult {
  std::filesystem::path dir;
  std::string status = "ok";  ///< ok | failed | not_converged
  std::string error;
  nlohmann::json summary = nlohmann::json::object();
};

namespace detail {

using nlohmann::json;

template <class T>
T param(const ExperimentConfig& c, const char* key) {
  return c.params.at(key).get<T>();
}

inline void run_sample(const ExperimentConfig& c, RunDirectory& out, RunResult& res) {
  const auto index = param<std::uint64_t>(c, "index");
  const auto n = param<std::uint64_t>(c, "n");
  auto grid_points = param<std::size_t>(c, "grid_points");
  const auto grid = TorusGrid::for_band(c.sea.j_max);
  if (grid_points == 0) grid_points = grid.n_points * grid.oversample_factor;

  const auto first = sample_sea(c.sea, c.seed, index);
  const auto z0 = initial_zeta(c.sea, first);
  const auto I = actions(z0);
  out.write_json("spectrum.json", to_json(z0));
  out.write("eta.csv", [&](std::ostream& os) { write_grid_csv(os, eta_from_complex(z0), grid_points); });
  out.write("actions.csv", [&](std::ostream& os) { write_mode_csv(os, I); });
  out.write("frequencies.csv", [&](std::ostream& os) { write_mode_csv(os, nonlinear_frequencies(I)); });

  json samples = json::array();
  CsvTable table({"index", "sup_eta", "sup_location", "pair_norm", "in_ball"});
  for (std::uint64_t i = index; i < index + n; ++i) {
    const auto s = i == index ? first : sample_sea(c.sea, c.seed, i);
    const auto state = build_initial_state(c.sea, s);
    const auto sup = sup_eval(state.eta, grid);
    const auto ball = in_ball_B0(c.sea, state);
    samples.push_back(to_json(s));
    table.add({static_cast<long long>(i), sup.value, sup.location, ball.norm, static_cast<long long>(ball.inside)});
  }
  out.write_json("samples.json", {{"schema_version", kSchemaVersion}, {"samples", samples}});
  out.write_csv("samples.csv", table);
  res.summary = {{"sigma", c.sea.sigma()}, {"sup_eta", sup_eval(eta_from_complex(z0), grid).value}};
}

inline void save_evolution(const Trajectory& tr, RunDirectory& out) {
  save_trajectory(tr, out.path() / "trajectory");
  out.note("trajectory/manifest.json");
  CsvTable table({"t", "hamiltonian", "momentum", "eta_mean", "sup_eta"});
  const auto grid = TorusGrid::for_band(tr.j_max());
  for (std::size_t i = 0; i < tr.size(); ++i)
    table.add({tr.times[i], tr.conserved[i].hamiltonian, tr.conserved[i].momentum, tr.conserved[i].eta_mean,
               sup_eval(tr.states[i].eta, grid).value});
  out.write_csv("conserved.csv", table);
}

inline void run_evolve(const ExperimentConfig& c, RunDirectory& out, RunResult& res) {
  const auto s0 = build_initial_state(c.sea, sample_sea(c.sea, c.seed, param<std::uint64_t>(c, "index")));
  const double t = param<double>(c, "t");
  try {
    const auto tr = evolve(s0, t, c.hos);
    save_evolution(tr, out);
    const auto& a = tr.conserved.front();
    const auto& b = tr.conserved.back();
    res.summary = {{"snapshots", tr.size()},
                   {"hamiltonian_drift", std::abs(b.hamiltonian - a.hamiltonian) / std::abs(a.hamiltonian)},
                   {"momentum_drift", std::abs(b.momentum - a.momentum) / std::abs(a.momentum)}};
  } catch (const BlowUp& e) {
    save_evolution(e.partial(), out);
    throw;
  }
}

inline void run_approx_error(const ExperimentConfig& c, RunDirectory& out, RunResult& res) {
  const auto eps = param<std::vector<double>>(c, "epsilons");
  const auto times = param<std::vector<double>>(c, "times");
  const bool with_app2 = param<bool>(c, "app2");
  const double t_max = *std::max_element(times.begin(), times.end());
  const auto sample = sample_sea(c.sea, c.seed, param<std::uint64_t>(c, "index"));

  CsvTable table({"epsilon", "t", "t_eps2", "err_app", "err_app2", "h1_app", "h1_app2"});
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_time;
  for (double e : eps) {
    SeaSpec spec = c.sea;
    spec.epsilon = e;
    PhaseAccumulator acc;
    const auto tr = evolve(from_complex_variable(initial_zeta(spec, sample)), t_max, c.hos,
                           with_app2 ? StepObserver(std::ref(acc)) : StepObserver());
    for (double t : times) {
      const auto a = approximation_error(tr, t, Approximation::app);
      ApproximationError a2{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
      if (with_app2) a2 = approximation_error(tr, t, Approximation::app2, &acc.ledger());
      table.add({e, t, t * e * e, a.sup, a2.sup, a.h1, a2.h1});
      by_time[t].first.push_back(e);
      by_time[t].second.push_back(a.sup);
    }
  }
  out.write_csv("approx_error.csv", table);
  json fits = json::array();
  for (const auto& [t, xy] : by_time) {
    json f = {{"t", t}, {"points", xy.first.size()}};
    bool positive = true;
    for (double v : xy.second) positive = positive && v > 0.0;
    f["slope"] = xy.first.size() >= 2 && positive ? json(stats::loglog_slope(xy.first, xy.second)) : json(nullptr);
    fits.push_back(f);
  }
  out.write_json("slope_fit.json", {{"schema_version", kSchemaVersion}, {"fits", fits}});
  res.summary = {{"fits", fits}};
}

inline void run_stokes(const ExperimentConfig& c, RunDirectory& out, RunResult& res) {
  const auto modes = param<std::vector<int>>(c, "modes");
  const auto steep = param<std::vector<double>>(c, "steepness");
  const double t = param<double>(c, "t");
  const int J = param<int>(c, "j_max");
  CsvTable table({"k", "ka", "measured_rate", "stokes_rate", "normal_form_rate", "rel_error"});
  double worst = 0.0;
  for (int k : modes) {
    for (double ka : steep) {
      const double a = ka / k;
      ComplexSpectrum z(J);
      z[k] = std::sqrt(kPi * a * a / std::sqrt(double(k)));
      const auto tr = evolve(from_complex_variable(z), t, c.hos);
      std::vector<double> ts, phase;
      double prev = 0.0, unwrapped = 0.0;
      for (std::size_t i = 0; i < tr.size(); ++i) {
        const double p = std::arg(tr.zeta(i)[k]);
        if (i) unwrapped += wrap(p - prev);
        prev = p;
        ts.push_back(tr.times[i]);
        phase.push_back(unwrapped);
      }
      const double rate = -stats::fit_slope(ts, phase);
      const double stokes = std::sqrt(double(k)) * (1.0 + ka * ka / 2.0);
      const double rel = std::abs(rate - stokes) / stokes;
      worst = std::max(worst, rel);
      table.add({static_cast<long long>(k), ka, rate, stokes, nonlinear_frequency(k, actions(z)), rel});
    }
  }
  out.write_csv("stokes.csv", table);
  res.summary = {{"max_rel_error", worst}};
}

inline void run_sync(const ExperimentConfig& c, RunDirectory& out, RunResult& res) {
  const auto sample = sample_sea(c.sea, c.seed, param<std::uint64_t>(c, "index"));
  PhaseMap map(c.sea, sample, c.sync);
  const auto sync = find_fixed_point(map);
  const int N = c.sync.resolved_n(c.sea);
  const double bound = focused_bound(c.sea, sample, N);
  json summary = {{"n_sync", N},         {"backend", to_string(c.sync.backend)}, {"converged", sync.converged},
                  {"iterations", sync.iterations}, {"residual", sync.residual},   {"solver_runs", map.solves()},
                  {"focused_bound", bound}};
  out.write("phi_star.csv", [&](std::ostream& os) { write_mode_csv(os, sync.phi_star); });
  if (sync.converged && param<bool>(c, "evolve")) {
    const auto tr = evolve(synthesize_rogue_seed(c.sea, sample, sync), c.sync.t_target, c.hos);
    CsvTable crest({"t", "sup_eta"});
    for (const auto& [t, v] : crest_history(tr)) crest.add({t, v});
    out.write_csv("crest.csv", crest);
    const double final_crest = crest_history(tr).back().second;
    summary["final_crest"] = final_crest;
    summary["crest_over_bound"] = final_crest / bound;
  }
  out.write_json("sync.json", {{"schema_version", kSchemaVersion}, {"result", to_json(sync)}, {"summary", summary}});
  res.summary = summary;
  if (!sync.converged) {
    res.status = "not_converged";
    res.error = "fixed-point iteration did not converge";
  }
}

inline void run_mc_tail(const ExperimentConfig& c, RunDirectory& out, RunResult& res, unsigned workers) {
  const auto rows = rogue_rate_study(c.sea, rogue_study_config(c.params, c.hos), c.seed, workers);
  CsvTable table({"epsilon", "t", "threshold", "n", "hits", "p_hat", "ci_low", "ci_high", "std_error", "log_p",
                  "theory_rate", "theory_exponent", "solver_runs", "max_screen_gap", "screen_valid", "outside_ball"});
  json js = json::array();
  bool valid = true;
  for (const auto& r : rows) {
    table.add({r.epsilon, r.t, r.threshold, static_cast<long long>(r.estimate.n_samples),
               static_cast<long long>(r.estimate.hits), r.estimate.p_hat, r.estimate.ci_low, r.estimate.ci_high,
               r.estimate.std_error, r.estimate.log_p(), r.theory_rate, r.theory_exponent,
               static_cast<long long>(r.solver_runs), r.max_screen_gap, static_cast<long long>(r.screen_valid),
               static_cast<long long>(r.outside_ball)});
    js.push_back(to_json(r));
    valid = valid && r.screen_valid;
  }
  out.write_csv("mc_tail.csv", table);
  out.write_json("mc_tail.json", {{"schema_version", kSchemaVersion}, {"rows", js}});
  res.summary = {{"rows", rows.size()}, {"screen_valid", valid}};
}

inline void run_rayleigh_ldp(const ExperimentConfig& c, RunDirectory& out, RunResult& res, unsigned workers) {
  auto weights = param<std::vector<double>>(c, "weights");
  if (weights.empty()) {
    const int M = param<int>(c, "M");
    for (int j = 1; j <= M; ++j) weights.push_back(c.sea.c(j));
  }
  const auto probs = param<std::vector<double>>(c, "probabilities");
  const auto n = param<std::size_t>(c, "n");
  const int refine = param<int>(c, "refine");
  double s2 = 0.0;
  for (double w : weights) s2 += w * w;
  CsvTable table({"target_p", "threshold", "tilt", "p_hat", "ci_low", "ci_high", "std_error", "ess", "ess_warning",
                  "exact_p", "extracted_rate", "theory_rate", "rel_error"});
  std::uint64_t stream = 0;
  for (double p : probs) {
    // Rate-function guess for the threshold, corrected by the estimate.
    double x = std::sqrt(-std::log(p) * s2);
    TailEstimate e;
    for (int it = 0; it <= refine; ++it) {
      e = tilted_rayleigh_tail(weights, x, n, c.seed + stream++, std::nullopt, 0.0, workers);
      if (it < refine && e.hits > 0) x *= std::sqrt(std::log(p) / e.log_p());
    }
    const double exact = weights.size() == 1 ? std::exp(-x * x / s2) : std::numeric_limits<double>::quiet_NaN();
    const double rate = extracted_rate(e, x);
    table.add({p, x, e.tilt, e.p_hat, e.ci_low, e.ci_high, e.std_error, e.ess, static_cast<long long>(e.ess_warning),
               exact, rate, 1.0 / s2, std::abs(rate * s2 - 1.0)});
  }
  out.write_csv("rayleigh_ldp.csv", table);
  res.summary = {{"weights", weights.size()}, {"theory_rate", 1.0 / s2}};
}

inline void run_gauss_test(const ExperimentConfig& c, RunDirectory& out, RunResult& res, unsigned workers) {
  const double level = param<double>(c, "level");
  const auto rep = gaussianity_preservation_test(c.sea, param<double>(c, "t"), param<std::vector<int>>(c, "modes"),
                                                 param<std::size_t>(c, "n"), c.seed, param<bool>(c, "adversarial"),
                                                 workers);
  CsvTable table({"test", "j", "k", "statistic", "p_value", "passed"});
  auto add = [&](const char* name, int j, int k, const stats::TestResult& r) {
    table.add({std::string(name), static_cast<long long>(j), static_cast<long long>(k), r.statistic, r.p_value,
               static_cast<long long>(r.passed(level))});
  };
  for (const auto& m : rep.modes) {
    add("ks_re", m.j, 0, m.ks_re);
    add("ks_im", m.j, 0, m.ks_im);
    add("phase_uniform", m.j, 0, m.phase_uniform);
    add("modulus_phase", m.j, 0, m.modulus_phase);
  }
  for (const auto& x : rep.cross) add("cross_phase", x.j, x.k, x.result);
  out.write_csv("gauss_test.csv", table);
  out.write_json("gauss_test.json", {{"schema_version", kSchemaVersion}, {"report", to_json(rep)}});
  res.summary = {{"passed", rep.passed(level)}};
}

inline void run_chernoff(const ExperimentConfig& c, RunDirectory& out, RunResult& res, unsigned workers) {
  const auto radii = param<std::vector<double>>(c, "radii");
  const auto n = param<std::size_t>(c, "n");
  const auto law_modes = param<std::vector<int>>(c, "law_modes");
  CsvTable table({"radius", "exponent", "bound", "p_hat", "ci_low", "ci_high", "violated"});
  CsvTable laws({"radius", "j", "ks_statistic", "p_value"});
  bool violated = false;
  for (double R : radii) {
    SeaSpec spec = c.sea;
    spec.ball_radius = R;
    const auto r = chernoff_ball_bound(spec, n, c.seed, law_modes, workers);
    table.add({R, r.exponent, r.bound, r.outside.p_hat, r.outside.ci_low, r.outside.ci_high,
               static_cast<long long>(r.violated)});
    for (const auto& [j, t] : r.exponential_laws) laws.add({R, static_cast<long long>(j), t.statistic, t.p_value});
    violated = violated || r.violated;
  }
  out.write_csv("chernoff.csv", table);
  out.write_csv("chernoff_laws.csv", laws);
  res.summary = {{"violated", violated}};
}

inline void run_focus_rate(const ExperimentConfig& c, RunDirectory& out, RunResult& res, unsigned workers) {
  const auto r = dispersive_focusing_event_rate(c.sea, focusing_config(c.params, c.sync), c.seed, workers);
  CsvTable table({"event", "n", "hits", "p_hat", "ci_low", "ci_high", "std_error"});
  for (const auto& [name, e] : {std::pair{"joint", &r.joint}, {"rogue", &r.rogue}, {"aligned", &r.aligned}})
    table.add({std::string(name), static_cast<long long>(e->n_samples), static_cast<long long>(e->hits), e->p_hat,
               e->ci_low, e->ci_high, e->std_error});
  out.write_csv("focus_rate.csv", table);
  out.write_json("focus_rate.json", {{"schema_version", kSchemaVersion}, {"result", to_json(r)}});
  res.summary = {{"threshold", r.threshold}, {"joint", r.joint.p_hat}, {"rogue", r.rogue.p_hat}};
}

}  // namespace detail

/// Runs an experiment into <out>/<run_id>/ and writes manifest.json last.
/// Config errors propagate before anything is written; solver failures are
/// recorded in the manifest (status "failed") and rethrown.
inline RunResult run(const ExperimentConfig& config, unsigned workers) {
  ExperimentConfig cfg = config;
  cfg.sync.hos = cfg.hos;
  cfg.validate();
  RunResult res;
  res.dir = cfg.out / cfg.run_id();
  RunDirectory out(res.dir);
  const auto t0 = std::chrono::steady_clock::now();
  auto write_manifest = [&] {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : out.files()) files.push_back({{"name", f}, {"schema_version", kSchemaVersion}});
    nlohmann::json m = {{"schema_version", kSchemaVersion},
                        {"run_id", cfg.run_id()},
                        {"experiment", cfg.experiment},
                        {"seed", cfg.seed},
                        {"config", cfg.resolved()},
                        {"workers", workers},
                        {"git_describe", ROGUEWAVE_GIT_DESCRIBE},
                        {"wall_time_seconds",
                         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                        {"status", res.status},
                        {"summary", res.summary},
                        {"files", files}};
    if (!res.error.empty()) m["error"] = res.error;
    std::ofstream(res.dir / "manifest.json") << m.dump(2) << "\n";
  };
  try {
    const auto& k = cfg.experiment;
    if (k == "sample") detail::run_sample(cfg, out, res);
    else if (k == "evolve") detail::run_evolve(cfg, out, res);
    else if (k == "approx-error") detail::run_approx_error(cfg, out, res);
    else if (k == "stokes") detail::run_stokes(cfg, out, res);
    else if (k == "sync") detail::run_sync(cfg, out, res);
    else if (k == "mc-tail") detail::run_mc_tail(cfg, out, res, workers);
    else if (k == "rayleigh-ldp") detail::run_rayleigh_ldp(cfg, out, res, workers);
    else if (k == "gauss-test") detail::run_gauss_test(cfg, out, res, workers);
    else if (k == "chernoff") detail::run_chernoff(cfg, out, res, workers);
    else if (k == "focus-rate") detail::run_focus_rate(cfg, out, res, workers);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    res.status = "failed";
    res.error = e.what();
    write_manifest();
    throw;
  }
  write_manifest();
  return res;
}

}  // namespace roguewave::experiment
