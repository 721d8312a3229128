#include "wms/lb/state.hpp"

#include <tuple>

namespace wms::lb {

namespace {

State state_of(EventKind k)
{
    switch (k) {
    case EventKind::Registered:
    case EventKind::Enqueued: return State::Submitted; // queued, not yet taken by a station
    case EventKind::Dequeued: return State::Waiting;
    case EventKind::Matched: return State::Matched;
    case EventKind::Transferred: return State::Transferred;
    case EventKind::Running: return State::Running;
    case EventKind::Done: return State::Done;
    case EventKind::Aborted: return State::Aborted;
    case EventKind::Cancelled: return State::Cancelled;
    case EventKind::Warning: break;
    }
    return State::Submitted;
}

auto order_key(const Event& e) { return std::tie(e.timestamp, e.source, e.kind, e.seq); }

} // namespace

const char* state_name(State s)
{
    switch (s) {
    case State::Submitted: return "Submitted";
    case State::Waiting: return "Waiting";
    case State::Matched: return "Matched";
    case State::Transferred: return "Transferred";
    case State::Running: return "Running";
    case State::Done: return "Done";
    case State::Aborted: return "Aborted";
    case State::Cancelled: return "Cancelled";
    }
    return "?";
}

bool is_terminal(State s) { return s == State::Done || s == State::Aborted || s == State::Cancelled; }

JobState derive_state(std::span<const Event> events)
{
    const Event* terminal = nullptr;
    const Event* best = nullptr;
    const Event* matched = nullptr;
    for (const Event& e : events) {
        if (e.kind == EventKind::Warning)
            continue;
        if (e.kind == EventKind::Matched && (!matched || order_key(*matched) < order_key(e)))
            matched = &e;
        if (is_terminal(e.kind)) {
            if (!terminal || order_key(e) < order_key(*terminal))
                terminal = &e;
            continue;
        }
        if (!best || state_of(e.kind) > state_of(best->kind) ||
            (state_of(e.kind) == state_of(best->kind) && order_key(e) < order_key(*best)))
            best = &e;
    }

    JobState out;
    if (matched)
        out.resource = matched->arg;
    const Event* decider = terminal ? terminal : best;
    if (!decider)
        return out;
    out.state = state_of(decider->kind);
    out.last_event = *decider;
    if (decider->kind == EventKind::Done) {
        int code = 0;
        try {
            code = std::stoi(decider->arg);
        } catch (const std::exception&) {
            code = -1;
        }
        out.exit_code = code;
    } else if (decider->kind == EventKind::Aborted) {
        out.reason = decider->arg;
    }
    return out;
}

} // namespace wms::lb
