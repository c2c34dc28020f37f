#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arit/common/error.hpp"

namespace arit::cli {

// Fully resolved settings for one subcommand invocation: built-in defaults,
// overlaid by an optional config file, overlaid by --set key=value overrides.
// Every key must exist in the subcommand's default table; anything else is a
// config error, so typos fail loudly instead of silently using a default.
struct RunConfig {
    std::string subcommand;
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    const std::string& raw(const std::string& key) const;

    std::string get_string(const std::string& key) const { return raw(key); }
    long long get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    // "key = value" lines sorted by key; the canonical serialization that the
    // content hash and the metadata echo are computed from.
    std::string canonical_text() const;
    std::string hash() const; // 16 hex digits, FNV-1a over canonical_text()
};

// Default key/value table for one subcommand; throws UsageError on an unknown
// subcommand name.
const std::map<std::string, std::string>& default_config(const std::string& subcommand);

std::vector<std::string> known_subcommands();

// Flat TOML-style text: one `key = value` per line, `#` comments, no sections.
// Duplicate keys are rejected.
std::map<std::string, std::string> parse_config_text(const std::string& text);

RunConfig resolve_config(const std::string& subcommand, const std::string& config_path,
                         const std::vector<std::string>& overrides);

// Splits a comma-separated list, trimming whitespace; empty items dropped.
std::vector<std::string> split_list(const std::string& text);

} // namespace arit::cli
