#pragma once

// Problem registry addressed by string ids such as
//   exp_inf{d=1}   holder{nu=0.5,L1=2}   lower:sgd_I{R=1,G0=1,G1=8,eps=0.1}

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/numerics.hpp"
#include "glopt/problems.hpp"
#include "glopt/rng.hpp"

namespace glopt {

struct ParsedId {
  std::string name;
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

inline double parse_double(std::string_view s, std::string_view context) {
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size())
    throw ConfigError(fmt::format("{}: '{}' is not a number", context, s));
  return v;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline ParsedId parse_id(std::string_view id) {
  ParsedId out;
  const auto brace = id.find('{');
  out.name = trim(id.substr(0, brace));
  if (out.name.empty()) throw ConfigError(fmt::format("problem id '{}': empty name", id));
  if (brace == std::string_view::npos) return out;
  if (id.back() != '}') throw ConfigError(fmt::format("problem id '{}': missing closing brace", id));
  std::string_view body = id.substr(brace + 1, id.size() - brace - 2);
  while (!body.empty()) {
    const auto comma = body.find(',');
    const std::string_view item = body.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("problem id '{}': expected key=value, got '{}'", id, item));
    const std::string key = trim(item.substr(0, eq));
    out.params[key] = parse_double(trim(item.substr(eq + 1)), fmt::format("problem id '{}', key '{}'", id, key));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return out;
}

namespace detail {

// Point with entries +-scale/sqrt(d), alternating in sign; norm = scale.
inline Vec alternating_point(std::size_t d, double scale) {
  Vec x(d);
  const double v = scale / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i) x[i] = (i % 2 == 0) ? v : -v;
  return x;
}

struct LinearData {
  Matrix A;
  Vec b;
  Vec xstar;
};

// d = 1 gives A = [a], x* = 0, b = 0. Otherwise a seeded random A and x*, b = A x*.
inline LinearData make_linear_data(const ParsedId& p, std::size_t d, double R) {
  const double a = p.get("a", 1.0);
  const auto m = static_cast<std::size_t>(p.get("m", static_cast<double>(d)));
  if (d == 1 && m == 1) return {Matrix::from_rows({{a}}), Vec{0.0}, Vec{0.0}};
  PhiloxEngine eng(static_cast<std::uint64_t>(p.get("seed", 0.0)), 0, Substream::aux);
  Matrix A(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) A(i, j) = a * (2.0 * eng.uniform01() - 1.0);
  Vec xstar(d);
  for (auto& v : xstar) v = 2.0 * eng.uniform01() - 1.0;
  const double n = norm(xstar);
  if (n > 0) scale(xstar, 0.5 * R * eng.uniform01() / n);
  Vec b = matvec(A, xstar);
  return {std::move(A), std::move(b), std::move(xstar)};
}

inline std::size_t get_dim(const ParsedId& p, double fallback) {
  const double d = p.get("d", fallback);
  if (!(d >= 1.0) || d != std::floor(d)) throw ConfigError(fmt::format("{}: d must be a positive integer", p.name));
  return static_cast<std::size_t>(d);
}

}  // namespace detail

inline std::vector<std::string> suite_names() {
  return {"exp_inf", "power_inf", "lipschitz_inf", "holder", "sqrt_dist", "abs_power",
          "lower:sgd_I", "lower:sgd_II", "lower:ada_I", "lower:ada_II", "lower:ada_III"};
}

// One instance per family and parameter regime; used by the verification sweeps.
inline std::vector<std::string> reference_suite() {
  return {"exp_inf{d=1}",        "exp_inf{d=3,seed=2}", "power_inf{d=2}",       "power_inf{d=1,p=3}",
          "lipschitz_inf{d=3}",  "holder{nu=0.5}",      "holder{nu=1,d=2}",     "holder{nu=0}",
          "sqrt_dist{a=1}",      "abs_power{q=1}",      "abs_power{q=2}",       "abs_power{q=0.5}",
          "lower:sgd_I",         "lower:sgd_II{eps=0.25}", "lower:ada_I{G1=32,eps=0.03125}",
          "lower:ada_II{G1=32,eps=0.04}", "lower:ada_III{G1=32,eps=0.04}"};
}

inline ProblemPtr make_problem(std::string_view id) {
  const ParsedId p = parse_id(id);
  const double R = p.get("R", 1.0);
  if (!(R > 0.0)) throw ConfigError(fmt::format("{}: R must be > 0", p.name));

  if (p.name.rfind("lower:", 0) == 0) {
    const LowerBoundKind kind = parse_lower_bound_kind(p.name.substr(6));
    return std::make_shared<LowerBoundInstance>(kind, R, p.get("G0", 1.0), p.get("G1", 8.0), p.get("eps", 0.1));
  }
  if (p.name == "exp_inf") {
    auto data = detail::make_linear_data(p, detail::get_dim(p, 1), R);
    return std::make_shared<ExpInf>(std::move(data.A), std::move(data.b), std::move(data.xstar), R);
  }
  if (p.name == "power_inf") {
    auto data = detail::make_linear_data(p, detail::get_dim(p, 1), R);
    return std::make_shared<PowerInf>(std::move(data.A), std::move(data.b), p.get("p", 2.0), p.get("M1", 1.0),
                                      std::move(data.xstar), R);
  }
  if (p.name == "lipschitz_inf") {
    const std::size_t d = detail::get_dim(p, 2);
    return std::make_shared<LipschitzInf>(detail::alternating_point(d, p.get("xs", 0.5) * R), R);
  }
  if (p.name == "holder") {
    const std::size_t d = detail::get_dim(p, 1);
    return std::make_shared<Holder>(p.get("nu", 0.5), p.get("L", 1.0), detail::alternating_point(d, p.get("xs", 0.5) * R),
                                    R, p.get("L1", 1.0 / R));
  }
  if (p.name == "sqrt_dist") {
    const std::size_t d = detail::get_dim(p, 1);
    return std::make_shared<SqrtDist>(p.get("a", 1.0), detail::alternating_point(d, p.get("xs", 0.5) * R), R,
                                      p.get("G1", 1.0 / R));
  }
  if (p.name == "abs_power") return std::make_shared<AbsPower>(p.get("q", 1.0), R);
  throw ConfigError(fmt::format("unknown problem '{}'", p.name));
}

}  // namespace glopt
