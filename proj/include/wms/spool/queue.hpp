#pragma once

#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wms::spool {

using namespace std::chrono_literals;

struct QueueConfig {
    std::string name;
    std::filesystem::path root;
    /// Upper bound on committed (ready) plus in-flight entries.
    std::size_t capacity = 1000;
    std::chrono::milliseconds lease_duration = 60s;
    unsigned max_retries = 3;
    std::chrono::milliseconds stage_ttl = 10min;
    std::size_t max_payload = 1 << 20;

    std::filesystem::path dir() const { return root / name; }
};

struct SpoolEntry {
    std::string id;
    std::string payload;
    unsigned retry_count = 0;
    TimePoint created{};
};

struct Lease {
    std::string entry_id;
    std::string consumer;
    TimePoint deadline{};
    std::string token;
    unsigned retry_count = 0; // of the leased delivery
};

struct RecoveryReport {
    std::size_t reclaimed = 0;      // entries moved inflight -> ready
    std::size_t expired_leases = 0; // lease records dropped (expired or orphaned)
    std::size_t purged_staging = 0; // abandoned staged writes removed

    bool all_zero() const { return reclaimed == 0 && expired_leases == 0 && purged_staging == 0; }
    RecoveryReport& operator+=(const RecoveryReport& o)
    {
        reclaimed += o.reclaimed;
        expired_leases += o.expired_leases;
        purged_staging += o.purged_staging;
        return *this;
    }
    bool operator==(const RecoveryReport&) const = default;
};

struct RecoverOptions {
    /// Treat every lease as expired. Only valid when no consumer is alive,
    /// e.g. at service startup after a crash.
    bool reclaim_all_leases = false;
};

/// Backpressure: the queue is at capacity. Nothing was committed.
class QueueFull : public std::runtime_error {
public:
    explicit QueueFull(const std::string& q) : std::runtime_error("queue full: " + q) {}
};

/// The lease expired or was superseded; the caller's work on the entry is void.
class StaleLease : public std::runtime_error {
public:
    explicit StaleLease(const std::string& id) : std::runtime_error("stale lease for entry " + id) {}
};

class PayloadTooLarge : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NackOutcome { Requeued, DeadLettered };

enum class Location { Ready, Inflight, Dead };

/// Durable, bounded, filesystem-backed queue.
///
/// On-disk layout under `<root>/<name>/`:
///   staging/<id>              written and flushed, not yet visible
///   ready/<id>.r<retries>     committed, waiting for a consumer
///   inflight/<id>.r<retries>  leased to a consumer
///   inflight/<id>.lease       `consumer-id|deadline-rfc3339|token`
///   dead/<id>.r<retries>      dead-lettered after too many retries or a cancel
///   counter                   last allocated sequence number
///
/// Every state change is a single rename or unlink, so an entry is always in
/// exactly one directory. The ready -> inflight rename is the only serial
/// section on the consume side; a rename succeeds for exactly one consumer.
class Queue {
public:
    explicit Queue(QueueConfig cfg);

    const QueueConfig& config() const { return cfg_; }
    const std::string& name() const { return cfg_.name; }

    /// Stage (write + flush into staging/), then commit (rename into ready/).
    /// Returns the entry id only after the commit.
    std::string enqueue(std::string_view payload);

    /// Oldest ready entry, moved to inflight/ under a fresh lease.
    std::optional<std::pair<SpoolEntry, Lease>> dequeue(std::string_view consumer_id);

    /// Consumer-side commit: the entry is gone for good.
    void ack(const Lease& lease);

    /// Rollback: back to ready/ with retry-count + 1, or to dead/ once that
    /// exceeds max_retries.
    NackOutcome nack(const Lease& lease);

    /// Rollback for congestion: back to ready/ with the retry count unchanged.
    void release(const Lease& lease);

    /// Moves expired leases' entries back to ready/. Safe while consumers run.
    RecoveryReport expire_leases();

    /// Reclaims one entry if its lease has expired (or it has none and has
    /// been in flight longer than a lease). True if it was moved to ready/.
    bool reclaim(const std::string& entry_id);

    /// Startup recovery; idempotent.
    RecoveryReport recover(RecoverOptions opts = {});

    /// Moves a ready entry to dead/. False if it was not in ready/.
    bool bury(const std::string& entry_id);

    /// Ready plus in-flight entries, taken under the commit lock.
    std::size_t depth() const;
    std::size_t count(Location where) const;

    /// Snapshot of the entries in one directory, oldest first. Entries that
    /// move while being read are skipped.
    std::vector<SpoolEntry> entries(Location where) const;

    /// True if `lease` is still the current, unexpired lease of its entry.
    bool lease_valid(const Lease& lease) const;

private:
    std::filesystem::path loc_dir(Location where) const;
    std::size_t depth_unlocked() const;
    std::string allocate_id();
    Lease verify(const Lease& lease) const;
    RecoveryReport reclaim_pass(bool all_expired);

    QueueConfig cfg_;
};

/// Pieces of an entry file name `<id>.r<retries>`.
struct EntryName {
    std::string id;
    unsigned retries = 0;
};
std::optional<EntryName> parse_entry_name(std::string_view file_name);
std::string entry_file_name(const std::string& id, unsigned retries);

} // namespace wms::spool
