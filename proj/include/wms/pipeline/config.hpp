#pragma once

#include "wms/broker/broker.hpp"
#include "wms/pipeline/limits.hpp"
#include "wms/util/config.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wms::pipeline {

using namespace std::chrono_literals;

enum class HandlerKind { Accept, Match, Submit, Monitor };

const char* handler_name(HandlerKind k);

struct StationConfig {
    std::string name;
    HandlerKind kind = HandlerKind::Accept;
    std::string input_queue;
    std::optional<std::string> output_queue; // none for the last station
    std::size_t pool_size = 1;
    std::size_t max_requests = 100; // per worker, then it exits
    std::chrono::milliseconds handler_timeout = 2s;
    std::size_t queue_capacity = 1000;
};

struct SpoolSettings {
    std::chrono::milliseconds lease_duration = 60s;
    unsigned max_retries = 3;
    std::chrono::milliseconds stage_ttl = 10min;
};

struct BrokerSettings {
    std::filesystem::path snapshot = "is/snapshot.txt";
    std::filesystem::path catalog = "is/catalog.txt";
    broker::DataPolicy policy = broker::DataPolicy::RequireCloseReplica;
    std::chrono::seconds default_ttl = 300s;
};

/// Injected faults, decided per (job ad text, station, delivery) from `seed`
/// so a run is reproducible regardless of thread interleaving and minted ids.
/// Identical ads share their fate.
struct FaultSettings {
    double handler_failure = 0.0;
    double slow_probability = 0.0;
    std::chrono::milliseconds slow_delay = 0ms;
    double ce_loss = 0.0;
    std::uint64_t seed = 1;
};

struct SupervisorSettings {
    std::chrono::milliseconds interval = 50ms;
    /// Zero means 3x the largest handler timeout.
    std::chrono::milliseconds heartbeat_threshold = 0ms;
    std::chrono::milliseconds job_stale = 10min;
    std::chrono::milliseconds idle_poll = 20ms;
};

/// Everything a service installation needs. Paths that are not absolute are
/// relative to `home`.
///
/// File format (`key = value`, `#` comments):
///   [limits]        max_workers, max_requests, max_leases
///   [spool]         lease_ms, max_retries, stage_ttl_ms
///   [station.<n>]   pool, max_requests, timeout_ms, capacity   (n: accept|match|submit|monitor)
///   [broker]        snapshot, catalog, policy, default_ttl_s
///   [faults]        handler_failure, slow_probability, slow_ms, ce_loss, seed
///   [supervisor]    interval_ms, heartbeat_ms, job_stale_ms, idle_poll_ms
struct ServiceConfig {
    std::filesystem::path home;
    std::vector<StationConfig> stations; // accept -> match -> submit -> monitor
    LimitsConfig limits;
    SpoolSettings spool;
    BrokerSettings broker;
    FaultSettings faults;
    SupervisorSettings supervisor;

    static ServiceConfig defaults(std::filesystem::path home);
    static ServiceConfig from(const KeyValueConfig& kv, std::filesystem::path home);
    static ServiceConfig load(const std::filesystem::path& file, std::filesystem::path home);

    std::filesystem::path resolve(const std::filesystem::path& p) const;
    std::filesystem::path spool_root() const { return home / "spool"; }
    std::filesystem::path lb_root() const { return home / "lb"; }
    std::filesystem::path ce_dir() const { return home / "ce"; }
    std::filesystem::path run_log() const { return home / "log" / "run.log"; }

    const StationConfig& station(std::string_view name) const;
    std::optional<std::size_t> station_index(std::string_view name) const;
    std::chrono::milliseconds heartbeat_threshold() const;

    /// Throws ConfigError on violated invariants.
    void validate() const;
};

} // namespace wms::pipeline
