#pragma once

#include "wms/sim/model.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace wms::sim {

/// Per-station figures over the measurement window [warmup, horizon].
struct StationMetrics {
    std::string name;
    std::uint64_t served = 0;     // finished service here
    std::uint64_t timeouts = 0;   // sojourn exceeded the station timeout
    std::uint64_t rejected = 0;   // arrived to a full station
    double mean_sojourn = 0.0;    // over jobs served
    double p95_sojourn = 0.0;
    double mean_queue = 0.0;      // time-averaged number waiting
    double mean_in_station = 0.0; // time-averaged number waiting or in service
};

struct SimMetrics {
    double window = 0.0;
    double throughput = 0.0;  // jobs leaving the network, any outcome, per unit time
    double goodput = 0.0;     // jobs finishing the last station per unit time
    double mean_load = 0.0;   // time-averaged jobs in the network (mean number in system)
    double mean_sojourn = 0.0; // end to end, over jobs finished in the window
    std::vector<StationMetrics> stations;

    // Whole-run counts; injected == completed + timed_out + rejected + in_flight.
    std::uint64_t injected = 0;
    std::uint64_t completed = 0;
    std::uint64_t timed_out = 0;
    std::uint64_t rejected = 0;
    std::uint64_t in_flight = 0;

    std::uint64_t window_timeouts() const;
};

/// Event-calendar simulation of the station chain. The service time is drawn
/// once at service start with the coupled rate at that instant. If `trace` is
/// given, one `t|job|station|event` line is written per event.
SimMetrics run_sim(const SimConfig& cfg, std::ostream* trace = nullptr);

} // namespace wms::sim
