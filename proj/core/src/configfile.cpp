#include "spinline/configfile.hpp"

#include "spinline/errors.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spinline {

namespace {

std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double_token(const std::string& tok, int line, int col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + tok + "'", line, col);
    }
}

} // namespace

double ConfigEntry::as_double() const { return parse_double_token(raw, line, column); }

long long ConfigEntry::as_int() const {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected an integer, got '" + raw + "'", line, column);
    }
}

bool ConfigEntry::as_bool() const {
    if (raw == "true" || raw == "yes" || raw == "on" || raw == "1") return true;
    if (raw == "false" || raw == "no" || raw == "off" || raw == "0") return false;
    throw ConfigError("expected a boolean, got '" + raw + "'", line, column);
}

std::vector<std::string> ConfigEntry::as_tokens() const {
    std::vector<std::string> out;
    std::istringstream is(raw);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::vector<double> ConfigEntry::as_doubles() const {
    std::vector<double> out;
    for (const auto& tok : as_tokens()) out.push_back(parse_double_token(tok, line, column));
    return out;
}

std::vector<std::pair<std::string, double>> ConfigEntry::as_named_doubles() const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& tok : as_tokens()) {
        auto colon = tok.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= tok.size())
            throw ConfigError("expected name:value, got '" + tok + "'", line, column);
        out.emplace_back(tok.substr(0, colon),
                         parse_double_token(tok.substr(colon + 1), line, column));
    }
    return out;
}

bool ConfigSection::has(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.key == key) return true;
    return false;
}

const ConfigEntry& ConfigSection::entry(const std::string& key) const {
    const ConfigEntry* found = nullptr;
    for (const auto& e : entries_) {
        if (e.key != key) continue;
        if (found)
            throw ConfigError("key '" + key + "' in [" + name_ + "] given more than once",
                              e.line, e.column);
        found = &e;
    }
    if (!found)
        throw ConfigError("missing key '" + key + "' in section [" + name_ + "]", line_);
    return *found;
}

std::vector<const ConfigEntry*> ConfigSection::entries(const std::string& key) const {
    std::vector<const ConfigEntry*> out;
    for (const auto& e : entries_)
        if (e.key == key) out.push_back(&e);
    return out;
}

double ConfigSection::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}
long long ConfigSection::get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}
bool ConfigSection::get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}
std::string ConfigSection::get_string_or(const std::string& key,
                                         const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.text_ = text;
    cfg.origin_ = origin;
    cfg.sections_.emplace_back("", 0);

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string body = line;
        // Comments start with '#' or ';' outside of any value.
        auto hash = body.find_first_of("#;");
        if (hash != std::string::npos) body = body.substr(0, hash);
        std::string t = strip(body);
        if (t.empty()) continue;

        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("unterminated section header", lineno,
                                  static_cast<int>(line.find('[')) + 1);
            std::string name = strip(t.substr(1, t.size() - 2));
            if (name.empty()) throw ConfigError("empty section name", lineno, 1);
            cfg.sections_.emplace_back(name, lineno);
            continue;
        }

        auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", lineno, 1);
        std::string key = strip(body.substr(0, eq));
        if (key.empty()) throw ConfigError("empty key", lineno, 1);
        std::string value = strip(body.substr(eq + 1));
        auto vstart = body.find_first_not_of(" \t", eq + 1);
        int vcol = vstart == std::string::npos ? static_cast<int>(eq) + 2
                                               : static_cast<int>(vstart) + 1;
        cfg.sections_.back().add(ConfigEntry{key, value, lineno, vcol});
    }
    return cfg;
}

bool ConfigFile::has_section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name() == name) return true;
    return false;
}

const ConfigSection& ConfigFile::section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name() == name) return s;
    throw ConfigError("missing section [" + name + "] in " + origin_);
}

std::vector<const ConfigSection*> ConfigFile::sections_with_prefix(
    const std::string& prefix) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections_)
        if (s.name().rfind(prefix, 0) == 0) out.push_back(&s);
    return out;
}

std::string ConfigFile::content_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text_) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace spinline
