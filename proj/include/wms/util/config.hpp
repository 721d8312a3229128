#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wms {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` file with `[section]` headers and `#` comments.
/// Keys before the first header belong to the section named "".
class KeyValueConfig {
public:
    using Section = std::map<std::string, std::string>;

    static KeyValueConfig parse(std::string_view text);
    static KeyValueConfig load(const std::string& path);

    bool has_section(const std::string& name) const;
    const Section& section(const std::string& name) const;
    /// Section names in file order.
    const std::vector<std::string>& section_names() const { return order_; }
    /// Names of sections `<prefix>.<x>` in file order, returned as `<x>`.
    std::vector<std::string> subsections(std::string_view prefix) const;

    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, std::string value);

private:
    std::map<std::string, Section> sections_;
    std::vector<std::string> order_;
};

/// Parses a number that may be `inf` / `infinity`.
double parse_double(std::string_view text);

} // namespace wms
