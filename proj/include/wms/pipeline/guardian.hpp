#pragma once

#include "wms/util/time.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace wms::pipeline {

enum class WardKind { Worker, Lease, Job };
enum class RecoveryAction { RestartWorker, ReclaimLease, AbortJob };

const char* ward_kind_name(WardKind k);
const char* action_name(RecoveryAction a);

/// Who looks after whom. Each ward has exactly one record; a record whose
/// heartbeat is older than its threshold is stale, and its recovery action
/// runs once per staleness episode (a fresh heartbeat starts a new one).
struct GuardianRecord {
    std::string ward;     // worker id, `<queue>/<entry-id>` or job id
    WardKind kind = WardKind::Worker;
    std::string guardian; // supervisor id
    TimePoint last_heartbeat{};
    RecoveryAction action = RecoveryAction::RestartWorker;
    std::chrono::milliseconds threshold{6000};
    std::string detail;   // station for workers, queue for leases
    bool fired = false;
};

struct ActionTaken {
    std::string ward;
    RecoveryAction action = RecoveryAction::RestartWorker;
    bool done = false; // false: retried on the next pass
    std::string note;
};

class GuardianRegistry {
public:
    /// Adds or replaces the record for `r.ward`.
    void add(GuardianRecord r);
    /// Refreshes a ward. Unknown wards are ignored.
    void heartbeat(const std::string& ward, TimePoint at = now());
    void remove(const std::string& ward);
    std::optional<GuardianRecord> get(const std::string& ward) const;
    std::vector<GuardianRecord> records() const;
    std::size_t size() const;
    std::size_t count(WardKind k, const std::string& detail = {}) const;
    void clear();

    /// Stale records whose action has not run in the current episode.
    std::vector<GuardianRecord> due(TimePoint at) const;
    void mark_fired(const std::string& ward);

private:
    mutable std::mutex mu_;
    std::map<std::string, GuardianRecord> records_;
};

/// One supervision pass: runs `execute` for every due record. A successful
/// action closes the episode; a failed one stays due for the next pass.
std::vector<ActionTaken> supervise(GuardianRegistry& registry, TimePoint at,
                                   const std::function<ActionTaken(const GuardianRecord&)>& execute);

} // namespace wms::pipeline
