#pragma once

// Flat key = value experiment configuration shared by every CLI subcommand.
// Files hold one `key = value` per line ('#' starts a comment); command-line
// flags of the same names override file values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/online.hpp"
#include "glopt/optimizers.hpp"
#include "glopt/oracle.hpp"
#include "glopt/schedule.hpp"
#include "glopt/suite.hpp"

namespace glopt {

// Splits at `sep` outside of braces; items are trimmed, empty items dropped.
inline std::vector<std::string> split_top_level(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    const char c = i < s.size() ? s[i] : sep;
    if (c == '{') ++depth;
    if (c == '}') --depth;
    if (depth < 0) throw ConfigError(fmt::format("unbalanced '}}' in '{}'", s));
    if (c == sep && depth == 0) {
      auto item = trim(s.substr(start, i - start));
      if (!item.empty()) out.push_back(std::move(item));
      start = i + 1;
    }
  }
  if (depth != 0) throw ConfigError(fmt::format("unbalanced '{{' in '{}'", s));
  return out;
}

inline double parse_real(const std::string& s) { return parse_double(s, "value"); }

inline std::uint64_t parse_count(const std::string& s) {
  const double v = parse_real(s);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0)
    throw ConfigError(fmt::format("'{}' is not a non-negative integer", s));
  return static_cast<std::uint64_t>(v);
}

inline bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", s));
}

// "0..4" (inclusive range) or "3,7,11".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_top_level(s)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_count(item));
      continue;
    }
    const auto a = parse_count(trim(item.substr(0, dots))), b = parse_count(trim(item.substr(dots + 2)));
    if (b < a) throw ConfigError(fmt::format("seed range '{}' is empty", item));
    if (b - a > 1000000) throw ConfigError(fmt::format("seed range '{}' is too long", item));
    for (auto v = a; v <= b; ++v) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

// "1e2:1e5:20" (log-spaced, rounded, deduplicated) or an explicit list.
inline std::vector<std::uint64_t> parse_K_list(const std::string& s) {
  if (s.find(':') == std::string::npos) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_top_level(s)) out.push_back(parse_count(item));
    return out;
  }
  const auto parts = split_top_level(s, ':');
  if (parts.size() != 3) throw ConfigError(fmt::format("'{}': expected lo:hi:count", s));
  const double lo = parse_real(parts[0]), hi = parse_real(parts[1]);
  const auto n = parse_count(parts[2]);
  if (!(lo >= 1.0 && hi >= lo && n >= 2)) throw ConfigError(fmt::format("'{}': need 1 <= lo <= hi and count >= 2", s));
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    const auto K = static_cast<std::uint64_t>(std::llround(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))));
    if (out.empty() || out.back() != K) out.push_back(K);
  }
  return out;
}

inline std::vector<double> parse_real_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_top_level(s)) out.push_back(parse_real(item));
  return out;
}

// One entry of the `methods` list, e.g. `sgd_const{eta=0.01}`,
// `adamw_exp{schedule=two_stage}`, `conversion{learner=solo_diag,schedule=exp_const}`,
// `quasar{gamma=0.5}`.
struct MethodSpec {
  enum class Family { optimizer, conversion, quasar };
  std::string label;
  Family family = Family::optimizer;
  OptimizerKind optimizer = OptimizerKind::adamw_exp;
  LearnerKind learner = LearnerKind::solo_scalar;
  std::map<std::string, std::string> overrides;
};

inline MethodSpec parse_method(const std::string& text) {
  MethodSpec m;
  m.label = trim(text);
  const auto brace = m.label.find('{');
  const std::string name = trim(m.label.substr(0, brace));
  if (brace != std::string::npos) {
    if (m.label.back() != '}') throw ConfigError(fmt::format("method '{}': missing closing brace", m.label));
    for (const auto& item : split_top_level(m.label.substr(brace + 1, m.label.size() - brace - 2))) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError(fmt::format("method '{}': expected key=value, got '{}'", m.label, item));
      m.overrides[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
  }
  static const std::vector<std::string> allowed = {"eta", "K", "schedule", "C_hat", "eps", "delta",
                                                   "rows", "gamma", "zeta", "R", "learner"};
  for (const auto& [k, v] : m.overrides)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(fmt::format("method '{}': unknown key '{}'", m.label, k));
  if (name == "conversion" || name == "quasar") {
    m.family = name == "conversion" ? MethodSpec::Family::conversion : MethodSpec::Family::quasar;
    if (auto it = m.overrides.find("learner"); it != m.overrides.end()) m.learner = parse_learner_kind(it->second);
  } else {
    m.optimizer = parse_optimizer_kind(name);
    if (m.overrides.count("learner")) throw ConfigError(fmt::format("method '{}': 'learner' applies to conversions only", m.label));
  }
  return m;
}

struct ExperimentConfig {
  std::string problem = "exp_inf{d=1}";
  NoiseModel noise = NoiseModel::deterministic;
  double noise_scale = 0.0;
  std::vector<MethodSpec> methods = {parse_method("adamw_exp")};
  std::optional<ScheduleKind> schedule;
  double C_hat = 1.0;
  double eps = 1e-2;
  std::optional<std::uint64_t> K;
  std::optional<double> eta;
  double delta = -1.0;
  std::size_t rows = 0;
  std::optional<double> gamma;
  std::optional<double> zeta;
  std::vector<std::uint64_t> seeds = {0};
  std::optional<double> target;
  bool stop_at_target = false;
  std::uint64_t stride = 0;
  unsigned log_rows = 50;
  bool timing = false;
  std::string out = "glopt_out";
  unsigned parallel = 1;

  std::vector<std::uint64_t> sweep_K;
  std::vector<double> eta_grid;
  std::vector<double> ada_eta_grid;
  double K_max_factor = 10.0;
  std::optional<std::uint64_t> K_max;

  std::vector<std::string> checks = {"m01", "tech", "tech2", "regret", "quasar", "h"};
  std::string verify_problems = "suite";
  std::uint64_t pairs = 10000;
  std::uint64_t trials = 1000;
  std::uint64_t streams = 100;
  double h_constant = 8.0;

  // Raw text of every explicitly set field, keyed by field name.
  std::map<std::string, std::string> raw;

  void set(const std::string& key, const std::string& value, const std::string& where);

  // All fields, in declaration order, as given (or the rendered default).
  KeyValues echo() const;

  // Fields that can change run output; `out` and `parallel` are excluded.
  KeyValues result_fields() const;
};

namespace detail {

struct ConfigField {
  const char* name;
  const char* help;
  const char* default_text;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline const std::vector<ConfigField>& config_fields() {
  using C = ExperimentConfig;
  static const std::vector<ConfigField> fields = {
      {"problem", "problem id, e.g. exp_inf{d=2} or lower:sgd_I{R=1,G0=1,G1=64}", "exp_inf{d=1}",
       [](C& c, const std::string& v) {
         (void)make_problem(v);
         c.problem = v;
       }},
      {"noise", "deterministic | v_bernoulli | u_additive", "deterministic",
       [](C& c, const std::string& v) { c.noise = parse_noise_model(v); }},
      {"noise_scale", "u_additive amplitude", "0", [](C& c, const std::string& v) { c.noise_scale = parse_real(v); }},
      {"methods", "comma-separated method list", "adamw_exp",
       [](C& c, const std::string& v) {
         c.methods.clear();
         for (const auto& item : split_top_level(v)) c.methods.push_back(parse_method(item));
         if (c.methods.empty()) throw ConfigError("method list is empty");
       }},
      {"schedule", "avg | exp_const | two_stage | universal | quasar_two_stage (empty: method default)", "",
       [](C& c, const std::string& v) {
         if (v.empty()) c.schedule.reset();
         else c.schedule = parse_schedule_kind(v);
       }},
      {"C_hat", "schedule constant in T = ceil(C_hat (R G1)^2)", "1", [](C& c, const std::string& v) { c.C_hat = parse_real(v); }},
      {"eps", "target accuracy used to derive K and schedules", "0.01", [](C& c, const std::string& v) { c.eps = parse_real(v); }},
      {"K", "iteration count override (empty: derived)", "",
       [](C& c, const std::string& v) {
         if (v.empty()) c.K.reset();
         else c.K = parse_count(v);
       }},
      {"eta", "stepsize for sgd_const/gd_const, numerator for adagrad_norm (empty: derived)", "",
       [](C& c, const std::string& v) {
         if (v.empty()) c.eta.reset();
         else c.eta = parse_real(v);
       }},
      {"delta", "initial second moment of diagonal/matrix methods (negative: default)", "-1",
       [](C& c, const std::string& v) { c.delta = parse_real(v); }},
      {"rows", "leonw_matrix row count (0: d)", "0", [](C& c, const std::string& v) { c.rows = parse_count(v); }},
      {"gamma", "quasar constant (empty: the problem's declared gamma)", "",
       [](C& c, const std::string& v) {
         if (v.empty()) c.gamma.reset();
         else c.gamma = parse_real(v);
       }},
      {"zeta", "fixed segment position for quasar runs (empty: uniform draw)", "",
       [](C& c, const std::string& v) {
         if (v.empty()) c.zeta.reset();
         else c.zeta = parse_real(v);
       }},
      {"seeds", "seed list: 0..4 or 1,5,9", "0", [](C& c, const std::string& v) { c.seeds = parse_seed_list(v); }},
      {"target", "gap target for first-hit bookkeeping (empty: eps)", "",
       [](C& c, const std::string& v) {
         if (v.empty()) c.target.reset();
         else c.target = parse_real(v);
       }},
      {"stop_at_target", "end each run at its first hit", "false",
       [](C& c, const std::string& v) { c.stop_at_target = parse_bool(v); }},
      {"stride", "keep every stride-th row (0: log-spaced rows)", "0", [](C& c, const std::string& v) { c.stride = parse_count(v); }},
      {"log_rows", "rows per decade of k when stride = 0", "50",
       [](C& c, const std::string& v) {
         const auto n = parse_count(v);
         if (n == 0 || n > 100000) throw ConfigError("log_rows must lie in [1, 100000]");
         c.log_rows = static_cast<unsigned>(n);
       }},
      {"timing", "fill wall_ns (outputs are then no longer byte-reproducible)", "false",
       [](C& c, const std::string& v) { c.timing = parse_bool(v); }},
      {"out", "output directory (GLOPT_OUT_DIR overrides)", "glopt_out", [](C& c, const std::string& v) { c.out = v; }},
      {"parallel", "number of worker threads", "1",
       [](C& c, const std::string& v) {
         const auto n = parse_count(v);
         if (n == 0 || n > 1024) throw ConfigError("parallel must lie in [1, 1024]");
         c.parallel = static_cast<unsigned>(n);
       }},
      {"sweep_K", "sweep: K values, lo:hi:count (log-spaced) or a list", "",
       [](C& c, const std::string& v) { c.sweep_K = v.empty() ? std::vector<std::uint64_t>{} : parse_K_list(v); }},
      {"eta_grid", "lower-bound: SGD stepsizes (empty: 10 points around the case threshold)", "",
       [](C& c, const std::string& v) { c.eta_grid = parse_real_list(v); }},
      {"ada_eta_grid", "lower-bound: AdaGrad-Norm numerators (empty: 10 points around R)", "",
       [](C& c, const std::string& v) { c.ada_eta_grid = parse_real_list(v); }},
      {"K_max_factor", "lower-bound: budget of the baselines in multiples of the AdamW K", "10",
       [](C& c, const std::string& v) { c.K_max_factor = parse_real(v); }},
      {"K_max", "lower-bound: absolute baseline budget (empty: K_max_factor * K)", "",
       [](C& c, const std::string& v) {
         if (v.empty()) c.K_max.reset();
         else c.K_max = parse_count(v);
       }},
      {"checks", "verify: m01, tech, tech2, regret, quasar, h", "m01,tech,tech2,regret,quasar,h",
       [](C& c, const std::string& v) { c.checks = split_top_level(v); }},
      {"verify_problems", "verify: 'suite' or a ';'-separated list of problem ids", "suite",
       [](C& c, const std::string& v) { c.verify_problems = v; }},
      {"pairs", "verify: point pairs per problem", "10000", [](C& c, const std::string& v) { c.pairs = parse_count(v); }},
      {"trials", "verify: lemma trials per variant", "1000", [](C& c, const std::string& v) { c.trials = parse_count(v); }},
      {"streams", "verify: random gradient streams per learner", "100",
       [](C& c, const std::string& v) { c.streams = parse_count(v); }},
      {"h_constant", "verify: constant of the Hoelder gap-gradient bound", "8",
       [](C& c, const std::string& v) { c.h_constant = parse_real(v); }},
  };
  return fields;
}

}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value, const std::string& where) {
  for (const auto& f : detail::config_fields()) {
    if (key != f.name) continue;
    try {
      f.set(*this, value);
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}: field '{}': {}", where, key, e.what()));
    }
    raw[key] = value;
    return;
  }
  throw ConfigError(fmt::format("{}: unknown field '{}'", where, key));
}

inline KeyValues ExperimentConfig::echo() const {
  KeyValues kv;
  for (const auto& f : detail::config_fields()) {
    auto it = raw.find(f.name);
    kv.emplace_back(f.name, it != raw.end() ? it->second : std::string(f.default_text));
  }
  return kv;
}

inline KeyValues ExperimentConfig::result_fields() const {
  KeyValues kv;
  for (auto& [k, v] : echo())
    if (k != "out" && k != "parallel") kv.emplace_back(k, v);
  return kv;
}

inline std::vector<std::pair<std::string, std::string>> config_field_help() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : detail::config_fields())
    out.emplace_back(f.name, *f.default_text ? fmt::format("{} [default: {}]", f.help, f.default_text) : f.help);
  return out;
}

// Applies `key = value` lines; errors carry "<path>:<line>".
inline void load_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& path) {
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = fmt::format("{}:{}", path, line_no);
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}: expected 'key = value'", where));
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
  }
}

inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("{}: cannot open config file", path));
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  load_config_text(cfg, text, path);
}

// Per-method settings after applying the method's own overrides to the config defaults.
struct MethodSettings {
  std::optional<double> eta;
  std::optional<std::uint64_t> K;
  std::optional<ScheduleKind> schedule;
  double C_hat = 1.0;
  double eps = 1e-2;
  double delta = -1.0;
  std::size_t rows = 0;
  std::optional<double> gamma;
  std::optional<double> zeta;
  double R = 0.0;
};

inline MethodSettings resolve_settings(const ExperimentConfig& cfg, const MethodSpec& m) {
  MethodSettings s;
  s.eta = cfg.eta;
  s.K = cfg.K;
  s.schedule = cfg.schedule;
  s.C_hat = cfg.C_hat;
  s.eps = cfg.eps;
  s.delta = cfg.delta;
  s.rows = cfg.rows;
  s.gamma = cfg.gamma;
  s.zeta = cfg.zeta;
  for (const auto& [k, v] : m.overrides) {
    try {
      if (k == "eta") s.eta = parse_real(v);
      else if (k == "K") s.K = parse_count(v);
      else if (k == "schedule") s.schedule = parse_schedule_kind(v);
      else if (k == "C_hat") s.C_hat = parse_real(v);
      else if (k == "eps") s.eps = parse_real(v);
      else if (k == "delta") s.delta = parse_real(v);
      else if (k == "rows") s.rows = parse_count(v);
      else if (k == "gamma") s.gamma = parse_real(v);
      else if (k == "zeta") s.zeta = parse_real(v);
      else if (k == "R") s.R = parse_real(v);
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("method '{}': key '{}': {}", m.label, k, e.what()));
    }
  }
  return s;
}

}  // namespace glopt
