#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace idon::cfg {

/// Sectioned key=value configuration text:
///
///   config_version = 1
///   [train]
///   iterations = 10000
///
/// '#' starts a comment; section names may nest with dots. Lookups are
/// schema-checked by the caller via validate(): any key or section not in the
/// schema is an error, so typos in sweep configs fail loudly instead of
/// silently using defaults.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  std::string require_str(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  /// schema: section -> allowed keys. Throws ConfigError on any unknown
  /// section or key, and when config_version is missing or unsupported.
  void validate(const std::map<std::string, std::set<std::string>>& schema) const;

  /// FNV-1a of the raw text; recorded in emitted artifacts.
  std::string hash() const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;  // "" = top level
  std::string raw_;
  std::string origin_;
};

}  // namespace idon::cfg
