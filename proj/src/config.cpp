#include "rss/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rss {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': not a number: " + text);
    return v;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& origin) {
    Config c;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse(in, path.string());
}

const std::string& Config::str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

double Config::num(const std::string& key) const { return to_double(key, str(key)); }

long Config::integer(const std::string& key) const {
    const std::string& text = str(key);
    long v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': not an integer: " + text);
    return v;
}

std::vector<std::string> Config::words(const std::string& key) const {
    std::istringstream in(str(key));
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::vector<double> Config::nums(const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : words(key)) out.push_back(to_double(key, w));
    return out;
}

std::string Config::str_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
}
double Config::num_or(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }
long Config::integer_or(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

bool Config::boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace rss
