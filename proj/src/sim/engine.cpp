#include "wms/sim/engine.hpp"

#include "wms/util/random.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <deque>
#include <queue>

namespace wms::sim {

std::uint64_t SimMetrics::window_timeouts() const
{
    std::uint64_t n = 0;
    for (const auto& s : stations)
        n += s.timeouts;
    return n;
}

namespace {

constexpr std::size_t kOutside = static_cast<std::size_t>(-1);

enum class Ev { Arrival, Departure, Timeout };

struct Event {
    double t;
    std::uint64_t order;
    Ev kind;
    std::size_t job;
    std::size_t station;
    std::uint64_t token;

    bool operator>(const Event& o) const { return t != o.t ? t > o.t : order > o.order; }
};

struct Job {
    double entered = 0;   // into the network
    double arrived = 0;   // at the current station
    std::size_t station = kOutside;
    std::uint64_t token = 0;
    bool in_service = false;
};

struct Station {
    std::deque<std::pair<std::size_t, std::uint64_t>> waiting; // (job, token); stale pairs skipped
    std::size_t n_waiting = 0;
    std::size_t busy = 0;
    Rng rng;
    double area_waiting = 0;
    double area_in = 0;
    std::vector<double> sojourns;
    StationMetrics m;

    explicit Station(std::uint64_t seed) : rng(seed) {}
    std::size_t in_station() const { return n_waiting + busy; }
};

class Engine {
public:
    Engine(const SimConfig& cfg, std::ostream* trace)
        : cfg_(cfg), trace_(trace), arrivals_(derive_seed(cfg.seed, 0))
    {
        for (std::size_t i = 0; i < cfg.stations.size(); ++i) {
            stations_.emplace_back(derive_seed(cfg.seed, i + 1));
            stations_.back().m.name = cfg.stations[i].name;
        }
    }

    SimMetrics run()
    {
        if (cfg_.lambda > 0)
            push(arrivals_.exponential(cfg_.lambda), Ev::Arrival, kOutside, 0, 0);
        while (!calendar_.empty() && calendar_.top().t <= cfg_.horizon) {
            Event e = calendar_.top();
            calendar_.pop();
            advance(e.t);
            switch (e.kind) {
            case Ev::Arrival: on_arrival(e.t); break;
            case Ev::Departure: on_departure(e); break;
            case Ev::Timeout: on_timeout(e); break;
            }
        }
        advance(cfg_.horizon);
        return finish();
    }

private:
    void push(double t, Ev kind, std::size_t job, std::size_t station, std::uint64_t token)
    {
        calendar_.push({t, order_++, kind, job, station, token});
    }

    void log(double t, std::size_t job, std::size_t station, const char* what)
    {
        if (!trace_)
            return;
        char buf[128];
        const char* name = station == kOutside ? "-" : cfg_.stations[station].name.c_str();
        std::snprintf(buf, sizeof buf, "%.9f|%zu|", t, job);
        *trace_ << buf << name << '|' << what << '\n';
    }

    bool in_window(double t) const { return t >= cfg_.warmup && t <= cfg_.horizon; }

    void advance(double t)
    {
        double lo = std::max(now_, cfg_.warmup);
        double hi = std::min(t, cfg_.horizon);
        if (hi > lo) {
            double dt = hi - lo;
            area_load_ += static_cast<double>(load_) * dt;
            for (auto& s : stations_) {
                s.area_waiting += static_cast<double>(s.n_waiting) * dt;
                s.area_in += static_cast<double>(s.in_station()) * dt;
            }
        }
        now_ = t;
    }

    void on_arrival(double t)
    {
        std::size_t id = jobs_.size();
        jobs_.push_back(Job{t, t, kOutside, 0, false});
        ++injected_;
        log(t, id, kOutside, "inject");
        ++load_;
        enter(id, 0, t);
        push(t + arrivals_.exponential(cfg_.lambda), Ev::Arrival, kOutside, 0, 0);
    }

    // Job `id` (already counted in the load) arrives at station `s`.
    void enter(std::size_t id, std::size_t s, double t)
    {
        const auto& model = cfg_.stations[s];
        auto& st = stations_[s];
        Job& j = jobs_[id];
        if (st.in_station() >= model.capacity) {
            j.station = kOutside;
            --load_;
            ++rejected_;
            if (in_window(t)) {
                ++st.m.rejected;
                ++window_failed_;
            }
            log(t, id, s, "reject");
            return;
        }
        j.station = s;
        j.arrived = t;
        j.in_service = false;
        log(t, id, s, "arrive");
        if (std::isfinite(model.timeout))
            push(t + model.timeout, Ev::Timeout, id, s, j.token);
        if (st.busy < model.servers) {
            start(id, s, t);
        } else {
            st.waiting.emplace_back(id, j.token);
            ++st.n_waiting;
        }
    }

    void start(std::size_t id, std::size_t s, double t)
    {
        auto& st = stations_[s];
        Job& j = jobs_[id];
        ++st.busy;
        j.in_service = true;
        double rate = cfg_.stations[s].mu / cfg_.coupling.factor(static_cast<double>(load_));
        push(t + st.rng.exponential(rate), Ev::Departure, id, s, j.token);
        log(t, id, s, "start");
    }

    void start_next(std::size_t s, double t)
    {
        auto& st = stations_[s];
        while (st.busy < cfg_.stations[s].servers && !st.waiting.empty()) {
            auto [id, token] = st.waiting.front();
            st.waiting.pop_front();
            if (jobs_[id].station != s || jobs_[id].token != token)
                continue; // timed out while waiting
            --st.n_waiting;
            start(id, s, t);
        }
    }

    // Removes a job from station `s`; returns true if it held a server.
    bool leave(std::size_t id, std::size_t s)
    {
        auto& st = stations_[s];
        Job& j = jobs_[id];
        bool served = j.in_service;
        if (served)
            --st.busy;
        else
            --st.n_waiting;
        j.in_service = false;
        j.station = kOutside;
        ++j.token;
        return served;
    }

    void on_departure(const Event& e)
    {
        Job& j = jobs_[e.job];
        if (j.station != e.station || j.token != e.token)
            return;
        auto& st = stations_[e.station];
        double sojourn = e.t - j.arrived;
        leave(e.job, e.station);
        log(e.t, e.job, e.station, "depart");
        if (in_window(e.t)) {
            ++st.m.served;
            st.sojourns.push_back(sojourn);
        }
        if (e.station + 1 < cfg_.stations.size()) {
            enter(e.job, e.station + 1, e.t);
        } else {
            --load_;
            ++completed_;
            if (in_window(e.t)) {
                ++window_completed_;
                sum_sojourn_ += e.t - j.entered;
            }
            log(e.t, e.job, kOutside, "complete");
        }
        start_next(e.station, e.t);
    }

    void on_timeout(const Event& e)
    {
        Job& j = jobs_[e.job];
        if (j.station != e.station || j.token != e.token)
            return;
        auto& st = stations_[e.station];
        bool freed = leave(e.job, e.station);
        --load_;
        ++timed_out_;
        if (in_window(e.t)) {
            ++st.m.timeouts;
            ++window_failed_;
        }
        log(e.t, e.job, e.station, "timeout");
        if (freed)
            start_next(e.station, e.t);
    }

    SimMetrics finish()
    {
        SimMetrics m;
        m.window = cfg_.horizon - cfg_.warmup;
        m.injected = injected_;
        m.completed = completed_;
        m.timed_out = timed_out_;
        m.rejected = rejected_;
        m.in_flight = load_;
        m.throughput = static_cast<double>(window_completed_ + window_failed_) / m.window;
        m.goodput = static_cast<double>(window_completed_) / m.window;
        m.mean_load = area_load_ / m.window;
        m.mean_sojourn = window_completed_ ? sum_sojourn_ / static_cast<double>(window_completed_) : 0.0;
        for (auto& st : stations_) {
            StationMetrics sm = st.m;
            sm.mean_queue = st.area_waiting / m.window;
            sm.mean_in_station = st.area_in / m.window;
            if (!st.sojourns.empty()) {
                double sum = 0;
                for (double x : st.sojourns)
                    sum += x;
                sm.mean_sojourn = sum / static_cast<double>(st.sojourns.size());
                auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(st.sojourns.size()))) - 1;
                std::nth_element(st.sojourns.begin(), st.sojourns.begin() + static_cast<std::ptrdiff_t>(k),
                                 st.sojourns.end());
                sm.p95_sojourn = st.sojourns[k];
            }
            m.stations.push_back(std::move(sm));
        }
        return m;
    }

    const SimConfig& cfg_;
    std::ostream* trace_;
    Rng arrivals_;
    std::vector<Station> stations_;
    std::vector<Job> jobs_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> calendar_;
    std::uint64_t order_ = 0;
    double now_ = 0;
    std::size_t load_ = 0;
    double area_load_ = 0;
    double sum_sojourn_ = 0;
    std::uint64_t injected_ = 0, completed_ = 0, timed_out_ = 0, rejected_ = 0;
    std::uint64_t window_completed_ = 0, window_failed_ = 0;
};

} // namespace

SimMetrics run_sim(const SimConfig& cfg, std::ostream* trace)
{
    cfg.validate();
    return Engine(cfg, trace).run();
}

} // namespace wms::sim
