#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spinline {

/// One `key = value` line of a config section. `raw` is the value text with
/// surrounding whitespace stripped; line/column point at the value for
/// diagnostics.
struct ConfigEntry {
    std::string key;
    std::string raw;
    int line = 0;
    int column = 0;

    double as_double() const;
    long long as_int() const;
    bool as_bool() const;
    const std::string& as_string() const { return raw; }
    /// Whitespace-separated list of numbers.
    std::vector<double> as_doubles() const;
    /// Whitespace-separated tokens.
    std::vector<std::string> as_tokens() const;
    /// `name:value` pairs, e.g. lever-arm rows like `P1:0.40 J1:0.10`.
    std::vector<std::pair<std::string, double>> as_named_doubles() const;
};

class ConfigSection {
public:
    ConfigSection() = default;
    ConfigSection(std::string name, int line) : name_(std::move(name)), line_(line) {}

    const std::string& name() const { return name_; }
    int line() const { return line_; }

    bool has(const std::string& key) const;
    /// Sole entry for `key`; throws ConfigError if missing or repeated.
    const ConfigEntry& entry(const std::string& key) const;
    /// All entries with this key, in file order (table rows).
    std::vector<const ConfigEntry*> entries(const std::string& key) const;
    const std::vector<ConfigEntry>& all() const { return entries_; }

    double get_double(const std::string& key) const { return entry(key).as_double(); }
    long long get_int(const std::string& key) const { return entry(key).as_int(); }
    bool get_bool(const std::string& key) const { return entry(key).as_bool(); }
    std::string get_string(const std::string& key) const { return entry(key).as_string(); }

    double get_double_or(const std::string& key, double fallback) const;
    long long get_int_or(const std::string& key, long long fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;

    void add(ConfigEntry e) { entries_.push_back(std::move(e)); }

private:
    std::string name_;
    int line_ = 0;
    std::vector<ConfigEntry> entries_;
};

/// Flat sectioned key/value file:
///
///     # comment
///     [section name]
///     key = value
///     row = 1.60 0          # repeated keys form tables
///     arm = P1:0.40 J1:0.10 # name:value lists
///
/// Keys before any section header belong to the unnamed section "".
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text,
                                 const std::string& origin = "<string>");

    bool has_section(const std::string& name) const;
    const ConfigSection& section(const std::string& name) const;
    const std::vector<ConfigSection>& sections() const { return sections_; }
    /// Sections whose name starts with `prefix` (e.g. "experiment ").
    std::vector<const ConfigSection*> sections_with_prefix(const std::string& prefix) const;

    const std::string& text() const { return text_; }
    const std::string& origin() const { return origin_; }

    /// FNV-1a hash of the raw config text, hex-encoded; used in run manifests.
    std::string content_hash() const;

private:
    std::string text_;
    std::string origin_;
    std::vector<ConfigSection> sections_;
};

} // namespace spinline
