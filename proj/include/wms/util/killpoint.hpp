#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace wms {

/// Thrown at an armed kill point. Not derived from std::exception, so
/// `catch (const std::exception&)` handlers never see it; it unwinds to the
/// top of the worker or test harness and leaves the disk as a dead process
/// would.
struct SimulatedCrash {
    std::string point;
};

/// Instrumented crash location. Free when nothing is armed.
void kill_point(std::string_view name);

/// Test-side control over kill points. All members are thread-safe.
class KillSwitch {
public:
    /// Crash at the n-th (0-based) kill point hit from now on, counting only
    /// points whose name starts with `prefix`.
    static void arm(std::size_t nth_hit, std::string_view prefix = {});
    static void disarm();
    /// True once an armed crash has fired.
    static bool fired();
    /// Hits counted since the last arm()/reset_count().
    static std::size_t hits();
    static void reset_count();

    /// Record names of every hit (for enumerating the crash surface).
    static void start_recording();
    static std::vector<std::string> stop_recording();
};

/// Lets another thread kill a specific worker: once triggered, the bound
/// thread crashes at its next kill point.
class Doom {
public:
    Doom();
    void trigger();
    bool triggered() const;
    /// Binds this handle to the calling thread's kill points.
    void bind_current_thread();

    struct State;

private:
    std::shared_ptr<State> state_;
};

} // namespace wms
