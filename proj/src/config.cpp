#include "grdr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "grdr/matrix_io.hpp"

namespace grdr {
namespace {

std::string trimmed(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  long v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError(key, "expected an unsigned integer, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + value + "'");
}

std::vector<int> parse_dims(const std::string& key, const std::string& value) {
  std::vector<int> dims;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (item.empty()) continue;
    dims.push_back(static_cast<int>(parse_long(key, item)));
  }
  if (dims.empty()) throw ConfigError(key, "expected a list of dimensions");
  return dims;
}

bool is_enum(const std::string& value, std::initializer_list<const char*> set) {
  return std::any_of(set.begin(), set.end(),
                     [&value](const char* s) { return value == s; });
}

void require_readable(const std::string& key, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(key, "file not found or unreadable: " + path);
}

using Setter =
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"cov.family", [](auto& c, auto& k, auto& v) { (void)k; c.cov_family = v; }},
      {"cov.gamma", [](auto& c, auto& k, auto& v) { c.cov_gamma = parse_double(k, v); }},
      {"cov.lambda1", [](auto& c, auto& k, auto& v) { c.cov_lambda1 = parse_double(k, v); }},
      {"cov.orient", [](auto& c, auto& k, auto& v) { (void)k; c.cov_orient = v; }},
      {"cov.rotation_seed", [](auto& c, auto& k, auto& v) { c.cov_rotation_seed = parse_u64(k, v); }},
      {"cov.rho", [](auto& c, auto& k, auto& v) { c.cov_rho = parse_double(k, v); }},
      {"cov.file", [](auto& c, auto& k, auto& v) { (void)k; c.cov_file = v; }},
      {"payoff.kind", [](auto& c, auto& k, auto& v) { (void)k; c.payoff_kind = v; }},
      {"payoff.constant", [](auto& c, auto& k, auto& v) { c.payoff_constant = parse_double(k, v); }},
      {"payoff.linear", [](auto& c, auto& k, auto& v) { (void)k; c.payoff_linear = v; }},
      {"payoff.sigma", [](auto& c, auto& k, auto& v) { (void)k; c.payoff_sigma = v; }},
      {"payoff.rate", [](auto& c, auto& k, auto& v) { c.payoff_rate = parse_double(k, v); }},
      {"payoff.maturity", [](auto& c, auto& k, auto& v) { c.payoff_maturity = parse_double(k, v); }},
      {"payoff.strike", [](auto& c, auto& k, auto& v) { c.payoff_strike = parse_double(k, v); }},
      {"factor", [](auto& c, auto& k, auto& v) { (void)k; c.factor_kind = v; }},
      {"q", [](auto& c, auto& k, auto& v) { (void)k; c.q_kind = v; }},
      {"n_override", [](auto& c, auto& k, auto& v) { c.n_override = parse_long(k, v); }},
      {"replications", [](auto& c, auto& k, auto& v) { c.replications = parse_long(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_u64(k, v); }},
      {"dims", [](auto& c, auto& k, auto& v) { c.dims = parse_dims(k, v); }},
      {"debug_verify", [](auto& c, auto& k, auto& v) { c.debug_verify = parse_bool(k, v); }},
      {"threads", [](auto& c, auto& k, auto& v) { c.threads = static_cast<int>(parse_long(k, v)); }},
      {"equal_samples", [](auto& c, auto& k, auto& v) { c.equal_samples = parse_bool(k, v); }},
      {"mc_samples", [](auto& c, auto& k, auto& v) { c.mc_samples = parse_long(k, v); }},
      {"kappa", [](auto& c, auto& k, auto& v) { (void)k; c.kappa = v; }},
      {"curve_pairs", [](auto& c, auto& k, auto& v) { c.curve_pairs = parse_long(k, v); }},
      {"probe_samples", [](auto& c, auto& k, auto& v) { c.probe_samples = parse_long(k, v); }},
      {"out_dir", [](auto& c, auto& k, auto& v) { (void)k; c.out_dir = v; }},
      {"out_prefix", [](auto& c, auto& k, auto& v) { (void)k; c.out_prefix = v; }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, setter] : setters()) out.push_back(name);
    return out;
  }();
  return names;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, setter] : setters()) {
    if (name == key) {
      setter(*this, key, trimmed(value));
      return;
    }
  }
  throw ConfigError(key, "unknown configuration key");
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string content = trimmed(line);
    if (content.empty() || content[0] == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no),
                        "expected 'key = value', got '" + content + "'");
    cfg.set(trimmed(content.substr(0, eq)), trimmed(content.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (!is_enum(cov_family, {"eigendecay", "equicorrelation", "file"}))
    throw ConfigError("cov.family", "must be eigendecay|equicorrelation|file, "
                                    "got '" + cov_family + "'");
  if (!is_enum(cov_orient, {"diagonal", "rotation"}))
    throw ConfigError("cov.orient",
                      "must be diagonal|rotation, got '" + cov_orient + "'");
  if (cov_family == "eigendecay" && !(cov_lambda1 > 0.0))
    throw ConfigError("cov.lambda1", "must be positive");
  if (cov_family == "file") {
    if (cov_file.empty()) throw ConfigError("cov.file", "required when cov.family = file");
    require_readable("cov.file", cov_file);
    read_matrix_file(cov_file);  // parse now, before any computation
    if (dims.size() != 1)
      throw ConfigError("dims", "a matrix file fixes d; the sweep must have "
                                "exactly one entry");
  }

  if (!is_enum(payoff_kind, {"constant", "linear", "basket"}))
    throw ConfigError("payoff.kind",
                      "must be constant|linear|basket, got '" + payoff_kind + "'");
  if (payoff_kind == "linear" &&
      !is_enum(payoff_linear, {"ones", "scaled_ones", "e1"})) {
    require_readable("payoff.linear", payoff_linear);
    read_vector_file(payoff_linear);
  }
  if (payoff_kind == "basket") {
    if (payoff_maturity < 0.0) throw ConfigError("payoff.maturity", "must be >= 0");
    try {
      (void)parse_double("payoff.sigma", payoff_sigma);
    } catch (const ConfigError&) {
      require_readable("payoff.sigma", payoff_sigma);
      read_vector_file(payoff_sigma);
    }
  }

  if (!is_enum(factor_kind, {"cholesky", "pca", "pca-permute-check"}))
    throw ConfigError("factor", "must be cholesky|pca|pca-permute-check, got '" +
                                    factor_kind + "'");
  if (!is_enum(q_kind, {"harmonic", "factor"})) {
    require_readable("q", q_kind);
    read_vector_file(q_kind);
  }

  if (n_override < 0) throw ConfigError("n_override", "must be >= 0");
  if (replications < 2) throw ConfigError("replications", "must be >= 2");
  if (dims.empty()) throw ConfigError("dims", "must be nonempty");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 1) throw ConfigError("dims", "entries must be >= 1");
    if (i > 0 && dims[i] <= dims[i - 1])
      throw ConfigError("dims", "sweep entries must be strictly increasing");
  }
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  if (mc_samples < 0) throw ConfigError("mc_samples", "must be >= 0");

  if (!is_enum(kappa, {"auto", "probe"})) {
    const double k = parse_double("kappa", kappa);
    if (!(k > 0.0)) throw ConfigError("kappa", "must be positive");
  }
  if (curve_pairs < 2) throw ConfigError("curve_pairs", "must be >= 2");
  if (probe_samples < 1) throw ConfigError("probe_samples", "must be >= 1");
}

}  // namespace grdr
