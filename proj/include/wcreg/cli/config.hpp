#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wcreg::cli {

/// Plain-text config: `[section]` headers, `key = value` lines, `#` or `;` comments.
/// Keys before the first header belong to the global section "". Every lookup marks the
/// entry as used; check_all_used() then rejects typos with their line numbers.
class Config
{
public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::optional<std::string>& fallback = std::nullopt) const;
  double get_double(const std::string& section, const std::string& key,
                    std::optional<double> fallback = std::nullopt) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::optional<std::int64_t> fallback = std::nullopt) const;
  std::size_t get_size(const std::string& section, const std::string& key,
                       std::optional<std::size_t> fallback = std::nullopt) const;
  bool get_bool(const std::string& section, const std::string& key,
                std::optional<bool> fallback = std::nullopt) const;
  /// Comma-separated numbers.
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::optional<std::vector<double>>& fallback = std::nullopt) const;

  /// Sets (or overrides) a value, as from a command-line flag.
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Throws ConfigError naming the first entry no lookup touched.
  void check_all_used() const;

  /// "origin:line" for an entry, or the origin when the key is absent.
  std::string where(const std::string& section, const std::string& key) const;

private:
  struct Entry
  {
    std::string value;
    std::size_t line = 0;
    mutable bool used = false;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const;

  std::string origin_;
  std::map<std::pair<std::string, std::string>, Entry> entries_;
};

} // namespace wcreg::cli
