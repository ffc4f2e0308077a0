#pragma once

// Flat key = value configuration with dotted keys, '#' comments and optional
// [section] headers that prefix the keys below them.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmc/coupling.hpp"
#include "cmc/error.hpp"
#include "cmc/model.hpp"
#include "cmc/poisson.hpp"

namespace cmc {

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& origin = "<string>") {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  /// Applies an override of the form key=value.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: " + assignment);
    const std::string key = trim(assignment.substr(0, eq));
    if (key.empty()) throw ConfigError("override has an empty key: " + assignment);
    values_[key] = trim(assignment.substr(eq + 1));
  }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_double(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::uint64_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError("key '" + key + "' expects a nonnegative integer, got '" + s + "'");
    return v;
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(key, fallback));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto& s = it->second;
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + s + "'");
  }

  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& s : get_list(key, {})) out.push_back(to_double(key, s));
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Canonical text (sorted key = value lines), the input to the config hash.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return b < e ? std::string(b, e) : std::string();
  }

  static double to_double(const std::string& key, const std::string& s) {
    std::string t = s;
    // Accept pi-multiples such as "pi/4" for coupling strengths.
    if (t == "pi/4") return std::numbers::pi / 4.0;
    if (t == "pi/8") return std::numbers::pi / 8.0;
    if (t == "pi/16") return std::numbers::pi / 16.0;
    try {
      std::size_t pos = 0;
      const double v = std::stod(t, &pos);
      if (pos != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Factories

inline TargetModel1D make_model_1d(const Config& c) {
  const std::string kind = c.get_string("model.kind", "gaussian");
  if (kind == "gaussian")
    return build_gaussian_model(c.get_double("model.sigma", 1.0),
                                c.get_double("model.domain_halfwidth", 8.0),
                                c.get_size("model.grid_size", 2001));
  if (kind == "double_well")
    return build_double_well_model(c.get_double("model.a", 1.0), c.get_double("model.b", 2.0),
                                   c.get_double("model.domain_halfwidth", 3.0),
                                   c.get_size("model.grid_size", 2001));
  if (kind == "cauchy")
    return build_cauchy_model(c.get_double("model.domain_halfwidth", 200.0),
                              c.get_size("model.grid_size", 20001));
  throw ConfigError("unknown model.kind '" + kind + "'");
}

inline Observable1D make_observable_1d(const Config& c, const TargetModel1D& m) {
  const std::string kind = c.get_string("observable.kind", "linear");
  if (kind == "linear") return linear_observable(m);
  if (kind == "quadratic") return quadratic_observable(m);
  if (kind == "mixed")
    return mixed_observable(m, c.get_double("observable.c1", 1.0), c.get_double("observable.c2", -1.0));
  if (kind == "constant") return constant_observable(m, c.get_double("observable.c", 1.0));
  if (kind == "polynomial")
    return polynomial_observable(m, "polynomial", c.get_double("observable.c1", 0.0),
                                 c.get_double("observable.c2", 0.0),
                                 c.get_double("observable.c0", 0.0));
  throw ConfigError("unknown observable.kind '" + kind + "'");
}

inline TargetModelND make_model_nd(const Config& c) {
  const std::string kind = c.get_string("model.kind", "gaussian");
  if (kind != "gaussian") throw ConfigError("d-dimensional runs support model.kind = gaussian only");
  return build_gaussian_model_nd(c.get_size("model.dim", 10), c.get_double("model.sigma", 1.0));
}

inline ObservableND make_observable_nd(const Config& c, const TargetModelND& m) {
  const std::string kind = c.get_string("observable.kind", "norm_sq");
  if (kind == "norm_sq") return norm_sq_observable(m, c.get_double("observable.c", 0.5));
  if (kind == "norm_sq_plus_linear")
    return norm_sq_plus_linear_observable(m, c.get_double("observable.c", 5.0),
                                          c.get_double("observable.l", 1.0));
  throw ConfigError("unknown d-dimensional observable.kind '" + kind + "'");
}

/// Scalar coupling of the given kind; the Poisson solution is shared.
inline ScalarCoupling1D make_scalar_coupling(ScalarKind kind, double beta, const Observable1D& f,
                                             std::shared_ptr<const PoissonSolution> ps) {
  ScalarCoupling1D sc(kind, beta);
  if (kind == ScalarKind::poisson) sc.poisson = std::move(ps);
  if (kind == ScalarKind::observable_grad) sc.observable_gradient = f.gradient;
  return sc;
}

}  // namespace cmc
