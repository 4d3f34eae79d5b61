#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rshe::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double plain_number(const std::string& field, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(field, "not a number: '" + text + "'");
  }
  if (used != text.size()) throw ConfigError(field, "not a number: '" + text + "'");
  return v;
}

}  // namespace

double parse_number(const std::string& field, const std::string& text) {
  const auto caret = text.find('^');
  if (caret == std::string::npos) return plain_number(field, trim(text));
  const double base = plain_number(field, trim(text.substr(0, caret)));
  const double exponent = plain_number(field, trim(text.substr(caret + 1)));
  return std::pow(base, exponent);
}

const std::vector<std::pair<std::string, std::string>>& Config::defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"M", "256"},
      {"N", "128"},
      {"lambda", "0.75"},
      {"multiplier", "1"},
      {"seed", "1"},
      {"T", "0.25"},
      {"h", "2^-6"},
      {"h_list", "2^-6,2^-7,2^-8,2^-9"},
      {"paths", "200"},
      {"phi", "linear_sin_a1"},
      {"unbounded", "false"},
      {"x0", "cosine:0.5,0.3"},
      {"quadrature", "left"},
      {"substeps", "32"},
      {"eta_quadrature", "left"},
      {"eps_list", "0.1,0.03,0.01"},
      {"p_list", "1,2"},
      {"delta", "2^-6"},
      {"count", "1000"},
      {"stream", "0"},
      {"threads", "1"},
      {"format", "json"},
      {"output", ""},
  };
  return d;
}

bool Config::known(const std::string& key) {
  for (const auto& [k, v] : defaults()) {
    if (k == key) return true;
  }
  return false;
}

Config::Config() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config", path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError(key, "unknown key");
  values_[key] = value;
}

const std::string& Config::str(const std::string& key) const { return values_.at(key); }

double Config::num(const std::string& key) const {
  const double v = parse_number(key, str(key));
  if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
  return v;
}

std::size_t Config::count(const std::string& key) const {
  const double v = num(key);
  if (v < 0.0 || v != std::floor(v) || v > 1e15) throw ConfigError(key, "must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::uint64_t Config::u64(const std::string& key) const {
  const auto& s = str(key);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key, "must be a non-negative integer");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError(key, "out of range");
  }
}

bool Config::flag(const std::string& key) const {
  const auto& s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key, "expected true or false");
}

std::vector<double> Config::nums(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(str(key), ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw ConfigError(key, "must not be empty");
  return out;
}

std::vector<std::string> Config::strs(const std::string& key) const {
  auto out = split(str(key), ',');
  if (out.empty()) throw ConfigError(key, "must not be empty");
  return out;
}

Meta Config::meta(const std::string& command) const {
  Meta m{{"command", command}, {"version", kVersion}};
  for (const auto& [k, v] : defaults()) m.emplace_back(k, values_.at(k));
  return m;
}

NoiseSpec Config::noise() const {
  NoiseSpec s;
  s.lambda_exponent = num("lambda");
  s.N = count("N");
  s.seed = u64("seed");
  s.multiplier = num("multiplier");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const std::string field = what.find("lambda") != std::string::npos ? "lambda"
                              : what.find("multiplier") != std::string::npos ? "multiplier"
                                                                              : "N";
    throw ConfigError(field, what);
  }
  return s;
}

CanonicalField Config::x0() const {
  const std::size_t M = count("M");
  if (M < 4 || M % 2 != 0) throw ConfigError("M", "must be even and >= 4");
  const auto& spec = str("x0");
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    for (const auto& a : split(spec.substr(colon + 1), ',')) args.push_back(parse_number("x0", a));
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n) throw ConfigError("x0", "'" + kind + "' takes " + std::to_string(n) + " argument(s)");
  };
  if (kind == "cosine") {
    need(2);
    if (args[1] < 0.0) throw ConfigError("x0", "cosine amplitude must be >= 0");
    return cosine_profile(M, args[0], args[1]);
  }
  if (kind == "constant") {
    need(1);
    return constant_field(M, args[0]);
  }
  if (kind == "step") {
    need(1);
    return step_profile(M, args[0]);
  }
  if (kind == "mollified_step") {
    need(2);
    if (!(args[1] > 0.0)) throw ConfigError("x0", "mollifier time must be > 0");
    return mollify(step_profile(M, args[0]), args[1]);
  }
  throw ConfigError("x0", "unknown profile '" + kind + "' (cosine, constant, step, mollified_step)");
}

std::vector<MeanFieldFunction> Config::phis() const {
  const bool unbounded = flag("unbounded");
  std::vector<MeanFieldFunction> out;
  for (const auto& name : strs("phi")) {
    if (name == "all") {
      for (const auto& n : catalog_names()) out.push_back(catalog_lookup(n));
      continue;
    }
    try {
      out.push_back(catalog_lookup(name, unbounded));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("phi", e.what());
    }
  }
  return out;
}

StudyConfig Config::study() const {
  StudyConfig s;
  s.M = count("M");
  s.N = count("N");
  if (s.N < 1 || s.N > s.M / 2) throw ConfigError("N", "must satisfy 1 <= N <= M/2");
  s.noise = noise();
  s.T = num("T");
  if (!(s.T > 0.0)) throw ConfigError("T", "must be > 0");
  s.x0 = x0();
  s.n_paths = count("paths");
  if (s.n_paths < 2) throw ConfigError("paths", "must be >= 2");
  s.threads = count("threads");
  if (s.threads < 1) throw ConfigError("threads", "must be >= 1");
  const auto& q = str("quadrature");
  if (q == "left") {
    s.accumulate.quadrature = TermQuadrature::LeftPoint;
  } else if (q == "mid") {
    s.accumulate.quadrature = TermQuadrature::MidStep;
  } else if (q == "trapezoid") {
    s.accumulate.quadrature = TermQuadrature::MidStepTrapezoid;
  } else {
    throw ConfigError("quadrature", "expected left, mid or trapezoid");
  }
  s.accumulate.substeps = count("substeps");
  if (s.accumulate.substeps < 1) throw ConfigError("substeps", "must be >= 1");
  const auto& e = str("eta_quadrature");
  if (e == "left") {
    s.eta_quadrature = EtaQuadrature::LeftPoint;
  } else if (e == "exponential") {
    s.eta_quadrature = EtaQuadrature::Exponential;
  } else {
    throw ConfigError("eta_quadrature", "expected left or exponential");
  }
  return s;
}

}  // namespace rshe::cli
