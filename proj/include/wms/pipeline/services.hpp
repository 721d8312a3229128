#pragma once

#include "wms/lb/logbook.hpp"
#include "wms/pipeline/ce_stub.hpp"
#include "wms/pipeline/config.hpp"
#include "wms/pipeline/guardian.hpp"
#include "wms/pipeline/limits.hpp"
#include "wms/pipeline/runlog.hpp"
#include "wms/spool/queue.hpp"

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace wms::pipeline {

/// What one station step did with (at most) one queue entry.
enum class StepResult {
    Idle,         // nothing ready
    Throttled,    // a system-wide limit refused the request slot or lease
    Forwarded,    // committed downstream, acked upstream
    Finished,     // last station or terminal outcome, acked
    Deferred,     // not ready yet (job still running), released
    Skipped,      // job already terminal, acked without work
    Failed,       // handler failed, nacked
    TimedOut,     // handler overran its timeout, nacked
    DeadLettered, // nacked past max retries, job Aborted
    Backpressure, // downstream full, released without a retry
    Stale,        // lease lost while working; the work is void
};

const char* step_name(StepResult r);

struct PipelineRecoveryReport {
    spool::RecoveryReport spool;
    std::size_t lb_reindexed = 0;
    std::size_t requeued = 0;          // live jobs found in no queue
    std::size_t duplicates_buried = 0; // extra live entries of one job
    std::size_t terminal_buried = 0;   // live entries of jobs already terminal
    std::size_t orphans_buried = 0;    // entries that name no registered job
    std::size_t aborted = 0;           // dead-lettered jobs missing their Aborted event

    bool all_zero() const;
    std::string summary() const;
};

/// Sequence numbers: retry-scoped events use `retry * 16 + code`, so a
/// redelivery with the same retry count reproduces the same identities and
/// the log deduplicates them. Terminal events use a fixed number per kind,
/// so at most one copy per source is ever stored.
std::uint64_t step_seq(unsigned retry, lb::EventKind kind);
std::uint64_t terminal_seq(lb::EventKind kind);

/// The live system: four stations joined by spool queues, worker pools under
/// a supervisor, and the LB as the only record of job state.
///
/// Workers are threads standing in for short-lived processes: each takes a
/// worker slot, handles at most max_requests entries and exits. A crash
/// (SimulatedCrash from a kill point) ends the thread without cleanup, the
/// way a dead process would; its guardian record goes stale and the
/// supervisor restarts it.
class Services {
public:
    explicit Services(ServiceConfig cfg);
    ~Services();
    Services(const Services&) = delete;
    Services& operator=(const Services&) = delete;

    const ServiceConfig& config() const { return cfg_; }
    lb::LogBook& logbook() { return lb_; }
    spool::Queue& queue(std::string_view name);
    Limits& limits() { return limits_; }
    GuardianRegistry& registry() { return registry_; }
    CeStub& ce() { return ce_; }
    RunLog& run_log() { return log_; }

    /// Registers the job and enqueues it at the first station. If that queue
    /// is full the job is recorded as Aborted("queue-full") and QueueFull is
    /// rethrown. Throws lb::InvalidAd for text that is not a job ad.
    lb::JobId submit(std::string_view jdl_text);

    enum class CancelResult { Cancelled, AlreadyTerminal };
    /// Records Cancelled and moves any ready entry of the job to dead/.
    /// A job that is running is stopped by the monitor on its next pass.
    CancelResult cancel(const lb::JobId& job);

    /// Startup recovery. Requires that no workers run. Idempotent.
    PipelineRecoveryReport recover_all();

    /// One iteration of a station's worker loop.
    StepResult process_one(std::string_view station, const std::string& worker_id);

    /// Runs every station on the calling thread until a whole round makes no
    /// progress or `max_rounds` is reached. With a non-zero seed the station
    /// order is shuffled every round. Returns the entries handled.
    std::size_t drain(std::uint64_t seed = 0, std::size_t max_rounds = 100000);

    /// Jobs not in exactly one place: live jobs need exactly one ready or
    /// in-flight entry, terminal jobs none. Meaningful when quiescent.
    std::vector<std::string> conservation_violations();

    // Live mode.
    void start();
    void stop();
    bool running() const { return running_.load(); }
    /// One supervision pass: guardian actions, pool refill, lease expiry.
    std::vector<ActionTaken> supervise_once();
    /// Makes a worker crash at its next kill point.
    bool kill_worker(const std::string& worker_id);
    std::vector<std::string> live_workers(std::string_view station = {}) const;
    std::size_t restarts() const { return restarts_.load(); }
    /// Waits until every queue is empty (nothing ready or in flight).
    bool wait_idle(std::chrono::milliseconds timeout);

private:
    struct Worker;
    struct Outcome;
    class SnapshotCache;

    bool spawn_worker(const StationConfig& st);
    void worker_main(Worker& w, Limits::Slot slot);
    void supervisor_main();
    void reap_workers();
    ActionTaken execute(const GuardianRecord& rec);

    Outcome run_handler(const StationConfig& st, const lb::JobId& job, const std::string& record, unsigned retry);
    Outcome accept(const lb::JobId& job);
    Outcome match(const lb::JobId& job, unsigned retry);
    Outcome submit_to_ce(const lb::JobId& job, const std::string& resource, unsigned retry);
    Outcome monitor(const lb::JobId& job, unsigned retry);

    void emit(const lb::JobId& job, lb::EventKind kind, const std::string& arg, const std::string& source,
              std::uint64_t seq);
    bool fault(double p, const lb::JobId& job, std::string_view station, unsigned retry, unsigned salt) const;
    void add_job_ward(const lb::JobId& job);

    ServiceConfig cfg_;
    lb::LogBook lb_;
    std::map<std::string, std::unique_ptr<spool::Queue>, std::less<>> queues_;
    Limits limits_;
    GuardianRegistry registry_;
    CeStub ce_;
    RunLog log_;
    std::unique_ptr<SnapshotCache> snapshots_;
    std::string supervisor_id_;

    mutable std::mutex workers_mu_;
    std::map<std::string, std::unique_ptr<Worker>> workers_;
    std::atomic<std::uint64_t> next_worker_{0};
    std::atomic<std::size_t> restarts_{0};
    std::atomic<bool> running_{false};
    std::atomic<bool> stopping_{false};
    std::thread supervisor_;
    std::mutex stop_mu_;
    std::condition_variable stop_cv_;
};

/// Splits a queue payload `<jobid>\n<record>`.
std::optional<std::pair<lb::JobId, std::string>> parse_payload(std::string_view payload);
std::string make_payload(const lb::JobId& job, std::string_view record);

} // namespace wms::pipeline
