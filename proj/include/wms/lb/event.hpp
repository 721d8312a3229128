#pragma once

#include "wms/util/time.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wms::lb {

/// `wms-<creation-utc-compact>-<random-suffix>`. Construct through mint() or
/// parse(); both guarantee the id is safe to use as a path component.
class JobId {
public:
    JobId() = default;

    static JobId mint();
    /// Throws std::invalid_argument on malformed text.
    static JobId parse(std::string_view text);
    static bool valid(std::string_view text);

    const std::string& str() const { return value_; }
    bool empty() const { return value_.empty(); }

    auto operator<=>(const JobId&) const = default;

private:
    explicit JobId(std::string v) : value_(std::move(v)) {}
    std::string value_;
};

enum class EventKind {
    Registered,
    Enqueued,    // arg: station
    Dequeued,    // arg: station
    Matched,     // arg: resource id
    Transferred, // arg: resource id
    Running,
    Done,        // arg: exit code
    Aborted,     // arg: reason
    Cancelled,
    Warning,     // arg: text; never changes state
};

const char* kind_name(EventKind k);
std::optional<EventKind> kind_from_name(std::string_view name);
bool is_terminal(EventKind k);

struct Event {
    JobId job;
    EventKind kind = EventKind::Registered;
    std::string arg;
    std::string source;
    std::uint64_t seq = 0;
    TimePoint timestamp{};

    /// Two events are the same delivery iff (job, source, seq) agree.
    bool same_identity(const Event& o) const
    {
        return job == o.job && source == o.source && seq == o.seq;
    }
};

/// `v1|<jobid>|<kind>|<kind-arg>|<source>|<seq>|<rfc3339-utc>|<crc32-hex>\n`.
/// The checksum covers every byte before it, including the last `|`.
/// `%`, `|`, CR and LF inside arg and source are percent-encoded.
std::string encode_line(const Event& e);

/// Null for anything that is not one complete, checksummed record (e.g. a
/// line torn by a crash). `line` excludes the trailing newline.
std::optional<Event> decode_line(std::string_view line);

} // namespace wms::lb
