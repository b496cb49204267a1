#pragma once

// CSV and manifest emission. Files are written to a temporary name and renamed into place.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "glopt/errors.hpp"
#include "glopt/record.hpp"
#include "glopt/schedule.hpp"

namespace glopt {

inline constexpr const char* kCsvColumns =
    "run_id,seed,k,f_gap,f_gap_avg_iterate,step_norm,effective_stepsize,regret_running,wall_ns";

// GLOPT_OUT_DIR, when set and non-empty, replaces the configured directory.
inline std::string effective_out_dir(const std::string& configured) {
  const char* env = std::getenv("GLOPT_OUT_DIR");
  return env != nullptr && *env != '\0' ? std::string(env) : configured;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RunError(fmt::format("cannot open '{}' for writing", tmp.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw RunError(fmt::format("write to '{}' failed", tmp.string()));
  }
  fs::rename(tmp, path);
}

// Keeps [A-Za-z0-9._=-]; everything else becomes '_'.
inline std::string sanitize_label(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '-' || c == '_' || c == '=';
    out.push_back(ok ? c : '_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

inline void append_header(std::string& out, const std::string& prefix, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out += fmt::format("# {}{}={}\n", prefix, k, v);
}

// One run as CSV: '#' header lines (configuration, cell identity, derived
// parameters, rescale events), the column row, then one line per kept step.
inline std::string run_csv(const KeyValues& config, const std::string& label, const RunRecord& rec) {
  std::string out;
  append_header(out, "config.", config);
  out += fmt::format("# label={}\n# method={}\n# problem_id={}\n# seed={}\n# run_id={}\n", label, rec.method,
                     rec.problem_id, rec.seed, rec.run_id);
  append_header(out, "param.", rec.params);
  out += fmt::format("# steps={}\n# rescales={}\n", rec.steps, rec.rescales.size());
  for (const auto& e : rec.rescales) out += fmt::format("# rescale=k:{},lambda:{:.17g}\n", e.k, e.lambda);
  out += kCsvColumns;
  out += '\n';
  for (const auto& r : rec.rows)
    out += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", rec.run_id, rec.seed, r.k, r.f_gap,
                       r.f_gap_avg_iterate, r.step_norm, r.effective_stepsize, r.regret_running, r.wall_ns);
  return out;
}

// JSON cannot hold inf/nan; those become strings.
inline nlohmann::ordered_json json_real(double v) {
  if (std::isfinite(v)) return v;
  return fmt::format("{}", v);
}

inline nlohmann::ordered_json kv_json(const KeyValues& kv) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

inline nlohmann::ordered_json run_summary_json(const std::string& label, const std::string& file, const RunRecord& rec,
                                               bool timing) {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["file"] = file;
  j["method"] = rec.method;
  j["problem_id"] = rec.problem_id;
  j["seed"] = rec.seed;
  j["run_id"] = rec.run_id;
  j["params"] = kv_json(rec.params);
  j["steps"] = rec.steps;
  j["gap0"] = json_real(rec.gap0);
  j["final_gap"] = json_real(rec.final_gap);
  j["final_gap_avg_iterate"] = json_real(rec.final_gap_avg);
  j["min_gap"] = json_real(rec.min_gap);
  j["min_gap_k"] = rec.min_gap_k;
  j["first_hit"] = rec.first_hit;
  j["first_hit_avg_iterate"] = rec.first_hit_avg;
  j["regret"] = json_real(rec.regret);
  j["log_offset"] = json_real(rec.log_offset);
  j["log_pi_final"] = json_real(rec.log_pi_final);
  auto resc = nlohmann::ordered_json::array();
  for (const auto& e : rec.rescales) resc.push_back({{"k", e.k}, {"lambda", json_real(e.lambda)}});
  j["rescales"] = resc;
  if (timing) j["wall_ns"] = rec.wall_ns;
  return j;
}

}  // namespace glopt
