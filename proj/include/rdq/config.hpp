#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace rdq {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Minimal TOML reader for the experiment-config dialect: top-level keys and
// one-level [table] sections; values are strings, booleans, integers, floats
// (inf/nan included), and possibly nested arrays. Comments start with '#'.
// Dotted keys, array-of-tables, and date-times are rejected.
nlohmann::json toml_to_json(const std::string& text);

// Reads TOML or JSON, chosen by file extension with a content sniff
// fallback (a leading '{' means JSON). Throws ConfigError on any problem.
nlohmann::json load_config_file(const std::string& path);

}  // namespace rdq
