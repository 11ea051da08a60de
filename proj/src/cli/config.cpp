#include "wcreg/cli/config.hpp"

#include "wcreg/array_io.hpp"
#include "wcreg/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fmt/format.h>
#include <sstream>

namespace wcreg::cli {

namespace {
std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string key_name(const std::string& section, const std::string& key)
{
  return section.empty() ? key : fmt::format("[{}] {}", section, key);
}
} // namespace

Config Config::parse(const std::string& text, const std::string& origin)
{
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';')
      continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3)
        throw ConfigError(fmt::format("{}:{}: malformed section header '{}'", origin, line, s));
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("{}:{}: expected key = value, got '{}'", origin, line, s));
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    // trailing comments need whitespace before the marker
    for (const char* marker : {" #", " ;", "\t#", "\t;"}) {
      const auto pos = value.find(marker);
      if (pos != std::string::npos)
        value = trim(value.substr(0, pos));
    }
    if (key.empty())
      throw ConfigError(fmt::format("{}:{}: empty key", origin, line));
    auto [it, inserted] = c.entries_.try_emplace({section, key}, Entry{value, line});
    if (!inserted)
      throw ConfigError(fmt::format("{}:{}: duplicate key {} (first set on line {})", origin, line,
                                    key_name(section, key), it->second.line));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path)
{
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(fmt::format("cannot read config {}: {}", path.string(), e.what()));
  }
  return parse(text, path.filename().string());
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const
{
  const auto it = entries_.find({section, key});
  if (it == entries_.end())
    return nullptr;
  it->second.used = true;
  return &it->second;
}

bool Config::has(const std::string& section, const std::string& key) const
{
  return entries_.count({section, key}) != 0;
}

std::string Config::where(const std::string& section, const std::string& key) const
{
  const auto it = entries_.find({section, key});
  if (it == entries_.end() || it->second.line == 0)
    return origin_;
  return fmt::format("{}:{}", origin_, it->second.line);
}

void Config::fail(const std::string& section, const std::string& key, const std::string& message) const
{
  throw ConfigError(fmt::format("{}: {}: {}", where(section, key), key_name(section, key), message));
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::optional<std::string>& fallback) const
{
  if (const Entry* e = find(section, key))
    return e->value;
  if (!fallback)
    fail(section, key, "required key is missing");
  return *fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          std::optional<double> fallback) const
{
  const Entry* e = find(section, key);
  if (!e) {
    if (!fallback)
      fail(section, key, "required key is missing");
    return *fallback;
  }
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(e->value.c_str(), &end);
  if (e->value.empty() || *end != '\0' || errno == ERANGE)
    fail(section, key, fmt::format("'{}' is not a number", e->value));
  return v;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::optional<std::int64_t> fallback) const
{
  const Entry* e = find(section, key);
  if (!e) {
    if (!fallback)
      fail(section, key, "required key is missing");
    return *fallback;
  }
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(e->value.c_str(), &end, 10);
  if (e->value.empty() || *end != '\0' || errno == ERANGE)
    fail(section, key, fmt::format("'{}' is not an integer", e->value));
  return v;
}

std::size_t Config::get_size(const std::string& section, const std::string& key,
                             std::optional<std::size_t> fallback) const
{
  const std::int64_t v =
    get_int(section, key, fallback ? std::optional<std::int64_t>(static_cast<std::int64_t>(*fallback))
                                   : std::nullopt);
  if (v < 0)
    fail(section, key, fmt::format("must be nonnegative, got {}", v));
  return static_cast<std::size_t>(v);
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      std::optional<bool> fallback) const
{
  const Entry* e = find(section, key);
  if (!e) {
    if (!fallback)
      fail(section, key, "required key is missing");
    return *fallback;
  }
  if (e->value == "true" || e->value == "1" || e->value == "yes")
    return true;
  if (e->value == "false" || e->value == "0" || e->value == "no")
    return false;
  fail(section, key, fmt::format("'{}' is not a boolean", e->value));
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key,
                                     const std::optional<std::vector<double>>& fallback) const
{
  const Entry* e = find(section, key);
  if (!e) {
    if (!fallback)
      fail(section, key, "required key is missing");
    return *fallback;
  }
  std::vector<double> out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0')
      fail(section, key, fmt::format("'{}' is not a number", item));
    out.push_back(v);
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value)
{
  auto& e = entries_[{section, key}];
  e.value = value;
}

void Config::check_all_used() const
{
  const Entry* first = nullptr;
  std::pair<std::string, std::string> name;
  for (const auto& [k, e] : entries_)
    if (!e.used && (!first || e.line < first->line)) {
      first = &e;
      name = k;
    }
  if (first)
    fail(name.first, name.second, "unknown key");
}

} // namespace wcreg::cli
