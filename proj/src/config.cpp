#include "invlab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "invlab/catalog.hpp"
#include "invlab/expr_models.hpp"

namespace invlab {

namespace {
const nlohmann::json kNull = nullptr;
}

Field Field::operator[](const std::string& key) const {
  const std::string child = path_.empty() ? key : path_ + "." + key;
  if (!present()) return Field(nullptr, child);
  if (!value_->is_object()) fail("expected an object");
  const auto it = value_->find(key);
  return Field(it == value_->end() ? nullptr : &*it, child);
}

Field Field::operator[](std::size_t index) const {
  const std::string child = path_ + "[" + std::to_string(index) + "]";
  if (!present() || !value_->is_array() || index >= value_->size()) return Field(nullptr, child);
  return Field(&(*value_)[index], child);
}

const nlohmann::json& Field::json() const { return present() ? *value_ : kNull; }

std::size_t Field::size() const {
  if (!present() || !value_->is_array()) fail("expected an array");
  return value_->size();
}

void Field::fail(const std::string& message) const { throw ConfigError(path_, message); }

double Field::number() const {
  if (!present()) fail("missing required number");
  if (!value_->is_number()) fail("expected a number");
  const double v = value_->get<double>();
  if (!std::isfinite(v)) fail("must be finite");
  return v;
}

double Field::number_or(double fallback) const { return present() ? number() : fallback; }

double Field::positive_or(double fallback) const {
  const double v = number_or(fallback);
  if (!(v > 0.0)) fail("must be positive");
  return v;
}

std::int64_t Field::integer() const {
  if (!present()) fail("missing required integer");
  if (!value_->is_number_integer()) fail("expected an integer");
  if (value_->is_number_unsigned() &&
      value_->get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    fail("integer out of range");
  }
  return value_->get<std::int64_t>();
}

std::size_t Field::count_or(std::size_t fallback, std::size_t min) const {
  if (!present()) return fallback;
  const std::int64_t v = integer();
  if (v < static_cast<std::int64_t>(min)) fail("must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::uint64_t Field::seed() const {
  if (!present()) fail("missing required field (runs are seeded explicitly)");
  if (!value_->is_number_integer()) fail("expected a non-negative integer");
  if (value_->is_number_unsigned()) return value_->get<std::uint64_t>();
  const auto v = value_->get<std::int64_t>();
  if (v < 0) fail("expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

bool Field::boolean_or(bool fallback) const {
  if (!present()) return fallback;
  if (!value_->is_boolean()) fail("expected true or false");
  return value_->get<bool>();
}

std::string Field::string() const {
  if (!present()) fail("missing required string");
  if (!value_->is_string()) fail("expected a string");
  return value_->get<std::string>();
}

std::vector<double> Field::numbers() const {
  const std::size_t n = size();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back((*this)[i].number());
  return out;
}

Vec Field::vec(std::optional<int> expected_size) const {
  const std::vector<double> xs = numbers();
  if (expected_size && static_cast<int>(xs.size()) != *expected_size) {
    fail("expected " + std::to_string(*expected_size) + " entries, got " + std::to_string(xs.size()));
  }
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", "'" + path + "' is not valid JSON: " + e.what());
  }
}

namespace {

std::string expression(const Field& f, expr::Dims dims) {
  const std::string src = f.string();
  try {
    expr::parse(src, dims);
  } catch (const expr::ParseError& e) {
    f.fail(e.what());
  }
  return src;
}

int dimension(const Field& f) {
  const std::int64_t v = f.integer();
  if (v < 1 || v > 64) f.fail("must be between 1 and 64");
  return static_cast<int>(v);
}

ControlSystem expression_model(const Field& f) {
  SystemSource src;
  src.name = f["name"].present() ? f["name"].string() : "expression";
  src.n = dimension(f["n"]);
  src.d = dimension(f["d"]);
  const Field controls = f["controls"];
  if (controls.present()) {
    if (controls.size() == 0) controls.fail("must list at least one control point");
    src.k = static_cast<int>(controls[0].size());
    if (f["k"].present() && f["k"].integer() != src.k) {
      f["k"].fail("does not match the length of the control points");
    }
    for (std::size_t i = 0; i < controls.size(); ++i) src.controls.push_back(controls[i].vec(src.k));
  } else {
    src.k = f["k"].present() ? static_cast<int>(f["k"].integer()) : 0;
    if (src.k < 0) f["k"].fail("must be >= 0");
  }
  const expr::Dims dims{src.n, src.k};
  const Field b = f["b"];
  if (b.size() != static_cast<std::size_t>(src.n)) {
    b.fail("expected n = " + std::to_string(src.n) + " entries, got " + std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < b.size(); ++i) src.drift.push_back(expression(b[i], dims));
  const Field sigma = f["sigma"];
  if (sigma.size() != static_cast<std::size_t>(src.n)) {
    sigma.fail("expected n = " + std::to_string(src.n) + " rows, got " + std::to_string(sigma.size()));
  }
  for (std::size_t r = 0; r < sigma.size(); ++r) {
    const Field row = sigma[r];
    if (row.size() != static_cast<std::size_t>(src.d)) {
      row.fail("expected d = " + std::to_string(src.d) + " entries, got " + std::to_string(row.size()));
    }
    std::vector<std::string> entries;
    for (std::size_t c = 0; c < row.size(); ++c) {
      entries.push_back(expression(row[c], dims));
      if (expr::parse(entries.back(), dims).uses(expr::Op::kAbs)) {
        row[c].fail("abs is not allowed in the diffusion (its derivative is required)");
      }
    }
    src.diffusion.push_back(std::move(entries));
  }
  try {
    return expression_system(src);
  } catch (const Error& e) {
    f.fail(e.what());
  }
}

}  // namespace

Model load_model(const Field& system, const Field& set) {
  Model m;
  if (!system.present()) system.fail("missing required field");
  std::string default_set;
  if (system.json().is_string()) {
    try {
      catalog::Entry e = catalog::system(system.string());
      m.system = std::move(e.system);
      m.exact_solution = std::move(e.exact_solution);
      default_set = e.default_set;
    } catch (const InvalidArgument& e) {
      system.fail(e.what());
    }
  } else if (system.json().is_object()) {
    m.system = expression_model(system);
  } else {
    system.fail("expected a catalog name or an object with n, d, b, sigma");
  }

  if (!set.present()) {
    if (default_set.empty()) set.fail("missing required field for expression systems");
    m.set = catalog::set(default_set, m.system.n);
  } else if (set.json().is_string()) {
    try {
      m.set = catalog::set(set.string(), m.system.n);
    } catch (const InvalidArgument& e) {
      set.fail(e.what());
    }
  } else if (set.json().is_object()) {
    const std::string g = expression(set["g"], expr::Dims{m.system.n, 0});
    try {
      m.set = expression_set(set["name"].present() ? set["name"].string() : "expression", m.system.n,
                             g, set["sample_radius"].positive_or(2.0));
    } catch (const InvalidArgument& e) {
      set["g"].fail(e.what());
    }
  } else {
    set.fail("expected a catalog name or an object with g");
  }
  return m;
}

Config load_config(nlohmann::json doc, const Overrides& ov, bool require_model) {
  if (doc.is_null()) doc = nlohmann::json::object();
  if (!doc.is_object()) throw ConfigError("config", "top level must be a JSON object");
  if (ov.system) doc["system"] = *ov.system;
  if (ov.set) doc["set"] = *ov.set;
  if (ov.seed) doc["seed"] = *ov.seed;

  Config cfg;
  cfg.doc = std::move(doc);
  const Field root = cfg.root();
  cfg.seed = root["seed"].seed();
  cfg.threads = ov.threads ? *ov.threads : static_cast<int>(root["threads"].count_or(1, 1));
  if (cfg.threads < 1) throw ConfigError("threads", "must be >= 1");
  cfg.out_dir = ov.out_dir ? *ov.out_dir
                           : (root["out"].present() ? root["out"].string() : std::string());
  if (require_model || root["system"].present()) {
    cfg.model = load_model(root["system"], root["set"]);
    cfg.has_model = true;
  }
  try {
    cfg.tol = default_tolerances();
  } catch (const InvalidArgument& e) {
    throw ConfigError("INVLAB_TOL", e.what());
  }
  if (root["tolerance"].present()) {
    cfg.tol.tol = cfg.tol.tol_sym = root["tolerance"].positive_or(cfg.tol.tol);
  }
  return cfg;
}

}  // namespace invlab
