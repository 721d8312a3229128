#include "wms/util/killpoint.hpp"

#include <atomic>
#include <mutex>

namespace wms {

struct Doom::State {
    std::atomic<bool> triggered{false};
};

namespace {

std::atomic<bool> g_armed{false};
std::atomic<bool> g_fired{false};
std::atomic<bool> g_recording{false};
std::atomic<std::size_t> g_hits{0};
std::size_t g_target = 0;
std::string g_prefix;
std::mutex g_mu;
std::vector<std::string> g_recorded;

thread_local std::shared_ptr<Doom::State> t_doom;

} // namespace

void kill_point(std::string_view name)
{
    if (t_doom && t_doom->triggered.load())
        throw SimulatedCrash{std::string(name)};
    if (g_recording.load()) {
        std::lock_guard lk(g_mu);
        g_recorded.emplace_back(name);
    }
    if (!g_armed.load(std::memory_order_acquire))
        return;
    std::lock_guard lk(g_mu);
    if (!g_armed.load() || name.substr(0, g_prefix.size()) != g_prefix)
        return;
    std::size_t hit = g_hits.fetch_add(1);
    if (hit == g_target) {
        g_armed.store(false);
        g_fired.store(true);
        throw SimulatedCrash{std::string(name)};
    }
}

void KillSwitch::arm(std::size_t nth_hit, std::string_view prefix)
{
    std::lock_guard lk(g_mu);
    g_target = nth_hit;
    g_prefix = prefix;
    g_hits.store(0);
    g_fired.store(false);
    g_armed.store(true, std::memory_order_release);
}

void KillSwitch::disarm()
{
    std::lock_guard lk(g_mu);
    g_armed.store(false);
}

bool KillSwitch::fired() { return g_fired.load(); }

std::size_t KillSwitch::hits() { return g_hits.load(); }

void KillSwitch::reset_count() { g_hits.store(0); }

void KillSwitch::start_recording()
{
    std::lock_guard lk(g_mu);
    g_recorded.clear();
    g_recording.store(true);
}

std::vector<std::string> KillSwitch::stop_recording()
{
    std::lock_guard lk(g_mu);
    g_recording.store(false);
    return std::exchange(g_recorded, {});
}

Doom::Doom() : state_(std::make_shared<State>()) {}

void Doom::trigger() { state_->triggered.store(true); }

bool Doom::triggered() const { return state_->triggered.load(); }

void Doom::bind_current_thread() { t_doom = state_; }

} // namespace wms
