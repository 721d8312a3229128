#include "wms/sim/model.hpp"

#include <cmath>
#include <set>

namespace wms::sim {

namespace {

std::size_t parse_capacity(const std::string& text)
{
    double v = parse_double(text);
    if (std::isinf(v) && v > 0)
        return kUnbounded;
    if (!(v >= 1) || v != std::floor(v))
        throw InvalidConfig("capacity must be a positive integer or inf, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

} // namespace

void SimConfig::validate() const
{
    if (!(lambda >= 0) || std::isinf(lambda))
        throw InvalidConfig("arrival rate must be finite and >= 0");
    if (stations.empty())
        throw InvalidConfig("at least one station is required");
    std::set<std::string> names;
    for (const auto& s : stations) {
        if (s.name.empty() || !names.insert(s.name).second)
            throw InvalidConfig("station names must be unique and non-empty");
        if (!(s.mu > 0) || std::isinf(s.mu))
            throw InvalidConfig("station " + s.name + ": mu must be finite and > 0");
        if (s.servers < 1)
            throw InvalidConfig("station " + s.name + ": servers must be >= 1");
        if (!(s.timeout > 0))
            throw InvalidConfig("station " + s.name + ": timeout must be > 0 or inf");
        if (s.capacity < 1)
            throw InvalidConfig("station " + s.name + ": capacity must be >= 1");
    }
    if (!(coupling.alpha >= 0) || std::isinf(coupling.alpha) || !(coupling.l0 >= 0))
        throw InvalidConfig("coupling needs alpha >= 0 and l0 >= 0");
    if (!(warmup >= 0) || !(horizon > warmup) || std::isinf(horizon))
        throw InvalidConfig("need horizon > warmup >= 0");
}

std::size_t SimConfig::station_index(const std::string& name) const
{
    for (std::size_t i = 0; i < stations.size(); ++i)
        if (stations[i].name == name)
            return i;
    throw InvalidConfig("no station named '" + name + "'");
}

SimConfig SimConfig::from(const KeyValueConfig& kv)
{
    SimConfig c;
    try {
        c.lambda = kv.get_double("arrivals", "rate", 0.0);
        for (const auto& n : kv.subsections("station")) {
            const std::string sec = "station." + n;
            StationModel s;
            s.name = n;
            s.mu = kv.get_double(sec, "mu", 1.0);
            long long servers = kv.get_int(sec, "servers", 1);
            if (servers < 1)
                throw InvalidConfig("station " + n + ": servers must be >= 1");
            s.servers = static_cast<std::size_t>(servers);
            s.timeout = kv.get_double(sec, "timeout", kInfinity);
            if (auto cap = kv.get(sec, "capacity"))
                s.capacity = parse_capacity(*cap);
            c.stations.push_back(s);
        }
        c.coupling.alpha = kv.get_double("coupling", "alpha", 0.0);
        c.coupling.l0 = kv.get_double("coupling", "l0", 0.0);
        c.horizon = kv.get_double("run", "horizon", c.horizon);
        c.warmup = kv.get_double("run", "warmup", c.warmup);
        long long seed = kv.get_int("run", "seed", 1);
        c.seed = static_cast<std::uint64_t>(seed);
    } catch (const ConfigError& e) {
        throw InvalidConfig(e.what());
    }
    c.validate();
    return c;
}

SimConfig SimConfig::load(const std::filesystem::path& path)
{
    try {
        return from(KeyValueConfig::load(path.string()));
    } catch (const ConfigError& e) {
        throw InvalidConfig(e.what());
    }
}

SimConfig with_parameter(SimConfig cfg, const std::string& name, double value)
{
    auto dot = name.find('.');
    std::string head = name.substr(0, dot);
    if (dot == std::string::npos) {
        if (head == "lambda")
            cfg.lambda = value;
        else if (head == "alpha")
            cfg.coupling.alpha = value;
        else if (head == "l0")
            cfg.coupling.l0 = value;
        else
            throw InvalidConfig("unknown sweep parameter '" + name + "'");
    } else {
        auto& st = cfg.stations.at(cfg.station_index(name.substr(dot + 1)));
        if (head == "mu")
            st.mu = value;
        else if (head == "timeout")
            st.timeout = value;
        else
            throw InvalidConfig("unknown sweep parameter '" + name + "'");
    }
    cfg.validate();
    return cfg;
}

SimConfig Fig2Setup::variant() const
{
    SimConfig v = baseline;
    v.stations[v.station_index(raise)].mu *= factor;
    return v;
}

Fig2Setup Fig2Setup::load(const std::filesystem::path& path)
{
    KeyValueConfig kv;
    try {
        kv = KeyValueConfig::load(path.string());
    } catch (const ConfigError& e) {
        throw InvalidConfig(e.what());
    }
    Fig2Setup f;
    f.baseline = SimConfig::from(kv);
    auto raise = kv.get("fig2", "raise");
    if (!raise)
        throw InvalidConfig(path.string() + ": [fig2] raise = <station> is required");
    f.raise = *raise;
    f.baseline.station_index(f.raise);
    f.factor = kv.get_double("fig2", "factor", 4.0);
    if (!(f.factor > 1.0))
        throw InvalidConfig("[fig2] factor must be > 1");
    return f;
}

} // namespace wms::sim
