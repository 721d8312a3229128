#pragma once

#include "wms/util/config.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wms::sim {

class InvalidConfig : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// One FIFO station with `servers` parallel servers.
struct StationModel {
    std::string name;
    double mu = 1.0;                    // base service rate per server
    std::size_t servers = 1;
    double timeout = kInfinity;         // bound on sojourn (wait + service)
    std::size_t capacity = kUnbounded;  // jobs in the station, waiting or in service
};

/// mu_eff = mu / (1 + alpha * max(0, L - l0)), L = jobs in the whole network.
struct LoadCoupling {
    double alpha = 0.0;
    double l0 = 0.0;

    double factor(double load) const { return 1.0 + alpha * std::max(0.0, load - l0); }
};

/// File format (`key = value`):
///   [arrivals]      rate
///   [station.<n>]   mu, servers, timeout, capacity   (file order is chain order; inf allowed)
///   [coupling]      alpha, l0
///   [run]           horizon, warmup, seed
struct SimConfig {
    double lambda = 0.0;
    std::vector<StationModel> stations;
    LoadCoupling coupling;
    double horizon = 10000.0;
    double warmup = 0.0;
    std::uint64_t seed = 1;

    /// Throws InvalidConfig.
    void validate() const;
    std::size_t station_index(const std::string& name) const;

    static SimConfig from(const KeyValueConfig& kv);
    static SimConfig load(const std::filesystem::path& path);
};

/// Returns a copy with one parameter changed. Names: `lambda`, `alpha`, `l0`,
/// `mu.<station>`, `timeout.<station>`. Throws InvalidConfig for others.
SimConfig with_parameter(SimConfig cfg, const std::string& name, double value);

/// A baseline plus the station whose rate the variant multiplies. Read from
/// the `[fig2]` section: `raise = <station>`, `factor = <x>`.
struct Fig2Setup {
    SimConfig baseline;
    std::string raise;
    double factor = 4.0;

    SimConfig variant() const;
    static Fig2Setup load(const std::filesystem::path& path);
};

} // namespace wms::sim
