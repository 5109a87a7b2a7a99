#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace vslkit {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` file.  `#` starts a comment; blank lines are ignored.
/// Later duplicates are an error.
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "config");
    /// Throws ConfigError (missing file is reported as such).
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated numbers.
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    /// `;`-separated groups of comma-separated numbers, e.g. "1,0; 0.8,0.2".
    std::vector<std::vector<double>> get_vectors(const std::string& key,
                                                 const std::vector<std::vector<double>>& fallback) const;

    /// Throws ConfigError naming the first key not in `known`.
    void check_known(const std::set<std::string>& known) const;

    /// FNV-1a of the canonical sorted `key=value` lines, as 16 hex digits.
    std::string hash() const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace vslkit
