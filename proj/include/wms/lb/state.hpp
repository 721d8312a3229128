#pragma once

#include "wms/lb/event.hpp"

#include <optional>
#include <span>
#include <string>

namespace wms::lb {

/// Lifecycle order Submitted < Waiting < Matched < Transferred < Running < Done,
/// plus the off-ramps Aborted and Cancelled.
enum class State { Submitted, Waiting, Matched, Transferred, Running, Done, Aborted, Cancelled };

const char* state_name(State s);
bool is_terminal(State s);

struct JobState {
    State state = State::Submitted;
    /// The event that determined `state`.
    std::optional<Event> last_event;
    std::optional<std::string> resource;
    std::optional<int> exit_code;
    std::optional<std::string> reason;

    /// State plus attached details; ignores which copy of a redundant event
    /// happened to decide it.
    bool same_outcome(const JobState& o) const
    {
        return state == o.state && resource == o.resource && exit_code == o.exit_code &&
               reason == o.reason;
    }
};

/// Pure fold over an event set; the order of `events` and duplicates in it do
/// not matter.
///
/// If any terminal event (Done, Aborted, Cancelled) is present, the earliest
/// one by (timestamp, source, kind, seq) decides the state. Otherwise the
/// state is the highest lifecycle rank any event witnesses. The matched
/// resource is taken from the latest Matched event.
JobState derive_state(std::span<const Event> events);

} // namespace wms::lb
