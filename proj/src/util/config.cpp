#include "wms/util/config.hpp"

#include "wms/util/fs.hpp"
#include "wms/util/strings.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace wms {

namespace {

const KeyValueConfig::Section kEmpty;

} // namespace

double parse_double(std::string_view text)
{
    std::string t = to_lower(trim(text));
    if (t == "inf" || t == "infinity" || t == "+inf")
        return std::numeric_limits<double>::infinity();
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || std::isnan(v))
        throw ConfigError("not a number: '" + std::string(text) + "'");
    return v;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text)
{
    KeyValueConfig cfg;
    std::string current;
    cfg.sections_[current];
    cfg.order_.push_back(current);
    int lineno = 0;
    while (!text.empty()) {
        ++lineno;
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (current.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            if (!cfg.sections_.count(current))
                cfg.order_.push_back(current);
            cfg.sections_[current];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        cfg.sections_[current][std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path)
{
    try {
        return parse(fs::read_file(path));
    } catch (const StorageError& e) {
        throw ConfigError(e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

bool KeyValueConfig::has_section(const std::string& name) const { return sections_.count(name) != 0; }

const KeyValueConfig::Section& KeyValueConfig::section(const std::string& name) const
{
    auto it = sections_.find(name);
    return it == sections_.end() ? kEmpty : it->second;
}

std::vector<std::string> KeyValueConfig::subsections(std::string_view prefix) const
{
    std::vector<std::string> out;
    std::string p = std::string(prefix) + ".";
    for (const auto& name : order_)
        if (name.size() > p.size() && name.compare(0, p.size(), p) == 0)
            out.push_back(name.substr(p.size()));
    return out;
}

std::optional<std::string> KeyValueConfig::get(const std::string& section,
                                               const std::string& key) const
{
    auto s = sections_.find(section);
    if (s == sections_.end())
        return std::nullopt;
    auto it = s->second.find(key);
    if (it == s->second.end())
        return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& section, const std::string& key,
                                       const std::string& fallback) const
{
    return get(section, key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& section, const std::string& key,
                                  double fallback) const
{
    auto v = get(section, key);
    if (!v)
        return fallback;
    try {
        return parse_double(*v);
    } catch (const ConfigError&) {
        throw ConfigError("[" + section + "] " + key + ": not a number: '" + *v + "'");
    }
}

long long KeyValueConfig::get_int(const std::string& section, const std::string& key,
                                  long long fallback) const
{
    auto v = get(section, key);
    if (!v)
        return fallback;
    long long out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || p != v->data() + v->size())
        throw ConfigError("[" + section + "] " + key + ": not an integer: '" + *v + "'");
    return out;
}

bool KeyValueConfig::get_bool(const std::string& section, const std::string& key,
                              bool fallback) const
{
    auto v = get(section, key);
    if (!v)
        return fallback;
    auto l = to_lower(*v);
    if (l == "true" || l == "yes" || l == "1" || l == "on")
        return true;
    if (l == "false" || l == "no" || l == "0" || l == "off")
        return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: '" + *v + "'");
}

void KeyValueConfig::set(const std::string& section, const std::string& key, std::string value)
{
    if (!sections_.count(section))
        order_.push_back(section);
    sections_[section][key] = std::move(value);
}

} // namespace wms
