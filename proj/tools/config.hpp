#pragma once

// Flat key=value experiment configuration: built-in defaults, then an optional
// file, then command-line overrides.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rshe/ito.hpp"
#include "rshe/report.hpp"

namespace rshe::cli {

/// A bad configuration value. field() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class Config {
 public:
  Config();

  static const std::vector<std::pair<std::string, std::string>>& defaults();
  static bool known(const std::string& key);

  /// Lines "key = value"; '#' starts a comment. Unknown keys are rejected.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  /// Comma-separated numbers; "2^-6" style powers are accepted.
  std::vector<double> nums(const std::string& key) const;
  std::vector<std::string> strs(const std::string& key) const;

  /// Keys in default order with resolved values, plus the command and version.
  Meta meta(const std::string& command) const;

  NoiseSpec noise() const;
  CanonicalField x0() const;
  std::vector<MeanFieldFunction> phis() const;
  StudyConfig study() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Parses one number, accepting "a^b" for powers. Throws ConfigError for `field`.
double parse_number(const std::string& field, const std::string& text);

}  // namespace rshe::cli
