#pragma once

// JSON run configuration. Every accessor reports problems as ConfigError with
// the JSON path of the offending field, e.g. "system.sigma[1][0]".

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "invlab/errors.hpp"
#include "invlab/invariance.hpp"
#include "invlab/sde_core.hpp"

namespace invlab {

class Field {
 public:
  Field(const nlohmann::json* value, std::string path) : value_(value), path_(std::move(path)) {}

  Field operator[](const std::string& key) const;
  Field operator[](std::size_t index) const;

  bool present() const { return value_ != nullptr && !value_->is_null(); }
  const std::string& path() const { return path_; }
  const nlohmann::json& json() const;
  std::size_t size() const;  // array length; fails for non-arrays

  double number() const;
  double number_or(double fallback) const;
  double positive_or(double fallback) const;
  std::int64_t integer() const;
  std::size_t count_or(std::size_t fallback, std::size_t min = 0) const;
  std::uint64_t seed() const;
  bool boolean_or(bool fallback) const;
  std::string string() const;
  std::vector<double> numbers() const;
  Vec vec(std::optional<int> expected_size = std::nullopt) const;

  [[noreturn]] void fail(const std::string& message) const;

 private:
  const nlohmann::json* value_;
  std::string path_;
};

struct Model {
  ControlSystem system;
  ClosedSet set;
  // Strong solution X_T(x0, u, W_T) when the catalog knows one.
  std::function<Vec(const Vec&, const Vec&, const Vec&)> exact_solution;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> system;
  std::optional<std::string> set;
};

struct Config {
  nlohmann::json doc;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;  // empty: no files written
  Model model;
  bool has_model = false;
  Tolerances tol;

  Field root() const { return Field(&doc, ""); }
  Field section(const std::string& name) const { return root()[name]; }
};

/// Reads and parses a JSON file; throws ConfigError("config", ...) on failure.
nlohmann::json read_config_file(const std::string& path);

/// Builds the model and common settings. The seed is mandatory; the system is
/// mandatory unless require_model is false.
Config load_config(nlohmann::json doc, const Overrides& overrides, bool require_model = true);

/// System from a catalog name or an {n, d, b, sigma, controls} object.
Model load_model(const Field& system, const Field& set);

}  // namespace invlab
