#pragma once

#include "wms/jdl/ad.hpp"
#include "wms/lb/event.hpp"
#include "wms/lb/state.hpp"
#include "wms/util/fs.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wms::lb {

class UnknownJob : public std::runtime_error {
public:
    explicit UnknownJob(const std::string& id) : std::runtime_error("unknown job " + id) {}
};

/// Raised by register_job when the ad text does not parse as a job ad.
class InvalidAd : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LbRecoveryReport {
    std::size_t reindexed = 0;
    bool operator==(const LbRecoveryReport&) const = default;
};

/// Logging & Bookkeeping store: the single authoritative record of every job.
///
/// Layout under `root`:
///   index                          `<jobid> <relative ad path>` per line
///   jobs/<h1>/<h2>/<jobid>/ad.jdl  the submitted ad, verbatim
///   jobs/<h1>/<h2>/<jobid>/events  append-only event records
/// where h1/h2 are the first two byte pairs of crc32(jobid).
///
/// Many LogBook instances (threads or processes) may share one root. Appends
/// to a job stream are serialized by an flock on its events file; the index
/// by an flock on the index file.
class LogBook {
public:
    explicit LogBook(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Parses `jdl_text` as a job ad, mints an id, stores the text and a
    /// Registered event. Returns only once both are durable.
    JobId register_job(std::string_view jdl_text);

    /// Idempotent on (job, source, seq). Durable before return.
    /// Returns false if an event with the same identity was already stored.
    bool record_event(const Event& e);

    JobState job_state(const JobId& job) const;
    /// Arrival order, duplicates removed, torn records skipped.
    std::vector<Event> job_events(const JobId& job) const;
    std::string job_ad_text(const JobId& job) const;
    bool exists(const JobId& job) const;

    /// Every job in the index that has a Registered stream, index order.
    std::vector<JobId> jobs() const;

    /// Re-indexes job directories a crash left out of the index. Idempotent.
    LbRecoveryReport recover();

    std::filesystem::path job_dir(const JobId& job) const;

private:
    std::filesystem::path events_path(const JobId& job) const;
    void append_index(const JobId& job);
    std::vector<Event> read_events(const std::filesystem::path& path) const;

    std::filesystem::path root_;
};

/// Convenience for emitting an event with the current time.
Event make_event(const JobId& job, EventKind kind, std::string arg, std::string source,
                 std::uint64_t seq);

} // namespace wms::lb
