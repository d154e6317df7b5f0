#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rss {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text. `#` starts a comment; blank lines are skipped.
/// Later duplicates override earlier ones.
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    /// Missing keys throw ConfigError naming the key.
    const std::string& str(const std::string& key) const;
    double num(const std::string& key) const;
    long integer(const std::string& key) const;
    std::vector<double> nums(const std::string& key) const;
    std::vector<std::string> words(const std::string& key) const;

    std::string str_or(const std::string& key, const std::string& fallback) const;
    double num_or(const std::string& key, double fallback) const;
    long integer_or(const std::string& key, long fallback) const;
    /// true/false or 1/0.
    bool boolean_or(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace rss
