#include "wms/pipeline/config.hpp"

#include <algorithm>

namespace wms::pipeline {

const char* handler_name(HandlerKind k)
{
    switch (k) {
    case HandlerKind::Accept: return "accept";
    case HandlerKind::Match: return "match";
    case HandlerKind::Submit: return "submit";
    case HandlerKind::Monitor: return "monitor";
    }
    return "?";
}

ServiceConfig ServiceConfig::defaults(std::filesystem::path home)
{
    ServiceConfig c;
    c.home = std::move(home);
    const HandlerKind kinds[] = {HandlerKind::Accept, HandlerKind::Match, HandlerKind::Submit, HandlerKind::Monitor};
    for (std::size_t i = 0; i < 4; ++i) {
        StationConfig s;
        s.kind = kinds[i];
        s.name = handler_name(kinds[i]);
        s.input_queue = s.name;
        if (i + 1 < 4)
            s.output_queue = handler_name(kinds[i + 1]);
        c.stations.push_back(s);
    }
    return c;
}

namespace {

std::chrono::milliseconds ms(const KeyValueConfig& kv, const std::string& sec, const std::string& key,
                             std::chrono::milliseconds fallback)
{
    return std::chrono::milliseconds{kv.get_int(sec, key, fallback.count())};
}

std::size_t count(const KeyValueConfig& kv, const std::string& sec, const std::string& key, std::size_t fallback)
{
    long long v = kv.get_int(sec, key, static_cast<long long>(fallback));
    if (v < 1)
        throw ConfigError("[" + sec + "] " + key + " must be at least 1");
    return static_cast<std::size_t>(v);
}

double probability(const KeyValueConfig& kv, const std::string& key)
{
    double p = kv.get_double("faults", key, 0.0);
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("[faults] " + key + " must be within [0, 1]");
    return p;
}

} // namespace

ServiceConfig ServiceConfig::from(const KeyValueConfig& kv, std::filesystem::path home)
{
    ServiceConfig c = defaults(std::move(home));

    c.limits.max_workers = count(kv, "limits", "max_workers", c.limits.max_workers);
    c.limits.max_requests = count(kv, "limits", "max_requests", c.limits.max_requests);
    c.limits.max_leases = count(kv, "limits", "max_leases", c.limits.max_leases);

    c.spool.lease_duration = ms(kv, "spool", "lease_ms", c.spool.lease_duration);
    c.spool.max_retries = static_cast<unsigned>(kv.get_int("spool", "max_retries", c.spool.max_retries));
    c.spool.stage_ttl = ms(kv, "spool", "stage_ttl_ms", c.spool.stage_ttl);

    for (const auto& name : kv.subsections("station")) {
        auto it = std::find_if(c.stations.begin(), c.stations.end(), [&](auto& s) { return s.name == name; });
        if (it == c.stations.end())
            throw ConfigError("unknown station '" + name + "' (stations: accept, match, submit, monitor)");
        std::string sec = "station." + name;
        it->pool_size = count(kv, sec, "pool", it->pool_size);
        it->max_requests = count(kv, sec, "max_requests", it->max_requests);
        it->handler_timeout = ms(kv, sec, "timeout_ms", it->handler_timeout);
        it->queue_capacity = count(kv, sec, "capacity", it->queue_capacity);
    }

    c.broker.snapshot = kv.get_string("broker", "snapshot", c.broker.snapshot.string());
    c.broker.catalog = kv.get_string("broker", "catalog", c.broker.catalog.string());
    auto policy = kv.get_string("broker", "policy", broker::policy_name(c.broker.policy));
    auto p = broker::policy_from_name(policy);
    if (!p)
        throw ConfigError("[broker] unknown policy '" + policy + "'");
    c.broker.policy = *p;
    c.broker.default_ttl = std::chrono::seconds{kv.get_int("broker", "default_ttl_s", c.broker.default_ttl.count())};

    c.faults.handler_failure = probability(kv, "handler_failure");
    c.faults.slow_probability = probability(kv, "slow_probability");
    c.faults.ce_loss = probability(kv, "ce_loss");
    c.faults.slow_delay = ms(kv, "faults", "slow_ms", c.faults.slow_delay);
    c.faults.seed = static_cast<std::uint64_t>(kv.get_int("faults", "seed", static_cast<long long>(c.faults.seed)));

    c.supervisor.interval = ms(kv, "supervisor", "interval_ms", c.supervisor.interval);
    c.supervisor.heartbeat_threshold = ms(kv, "supervisor", "heartbeat_ms", c.supervisor.heartbeat_threshold);
    c.supervisor.job_stale = ms(kv, "supervisor", "job_stale_ms", c.supervisor.job_stale);
    c.supervisor.idle_poll = ms(kv, "supervisor", "idle_poll_ms", c.supervisor.idle_poll);

    c.validate();
    return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& file, std::filesystem::path home)
{
    return from(KeyValueConfig::load(file.string()), std::move(home));
}

std::filesystem::path ServiceConfig::resolve(const std::filesystem::path& p) const
{
    return p.is_absolute() ? p : home / p;
}

const StationConfig& ServiceConfig::station(std::string_view name) const
{
    for (const auto& s : stations)
        if (s.name == name)
            return s;
    throw ConfigError("unknown station '" + std::string(name) + "'");
}

std::optional<std::size_t> ServiceConfig::station_index(std::string_view name) const
{
    for (std::size_t i = 0; i < stations.size(); ++i)
        if (stations[i].name == name)
            return i;
    return std::nullopt;
}

std::chrono::milliseconds ServiceConfig::heartbeat_threshold() const
{
    if (supervisor.heartbeat_threshold.count() > 0)
        return supervisor.heartbeat_threshold;
    std::chrono::milliseconds worst{0};
    for (const auto& s : stations)
        worst = std::max(worst, s.handler_timeout);
    return 3 * worst;
}

void ServiceConfig::validate() const
{
    if (home.empty())
        throw ConfigError("service home is not set");
    if (stations.empty())
        throw ConfigError("no stations configured");
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const auto& s = stations[i];
        if (s.pool_size < 1 || s.max_requests < 1 || s.queue_capacity < 1)
            throw ConfigError("station " + s.name + ": pool, max_requests and capacity must be at least 1");
        if (s.handler_timeout.count() <= 0)
            throw ConfigError("station " + s.name + ": timeout must be positive");
        bool last = i + 1 == stations.size();
        if (last != !s.output_queue.has_value())
            throw ConfigError("station " + s.name + ": only the last station has no output queue");
        if (!last && *s.output_queue != stations[i + 1].input_queue)
            throw ConfigError("station " + s.name + ": stations must form a chain");
    }
    if (spool.lease_duration.count() <= 0)
        throw ConfigError("[spool] lease_ms must be positive");
    if (supervisor.interval.count() <= 0 || supervisor.idle_poll.count() <= 0)
        throw ConfigError("[supervisor] intervals must be positive");
}

} // namespace wms::pipeline
