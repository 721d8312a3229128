#pragma once

#include "wms/sim/engine.hpp"

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wms::sim {

class UnstableRegime : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MM1 {
    double rho = 0.0;
    double mean_in_system = 0.0;
    double mean_sojourn = 0.0;
};

/// Closed-form M/M/1. Throws UnstableRegime when lambda >= mu.
MM1 mm1_theory(double lambda, double mu);

struct ComparisonReport {
    SimMetrics baseline;
    SimMetrics variant;
    std::optional<std::size_t> raised; // none when the configs are equal
    double factor = 1.0;
    /// Mean queue at the station after the raised one (the build-up).
    double next_queue_baseline = 0.0;
    double next_queue_variant = 0.0;
    /// Variant minus baseline window timeouts, per station.
    std::vector<long long> timeout_delta;
    /// Sum of timeout_delta over stations after the raised one.
    long long downstream_timeout_delta = 0;
    double goodput_ratio = 1.0;
    std::string verdict; // "better" | "worse" | "equal"
};

/// The variant may differ from the baseline only by a higher mu at one
/// station; anything else throws ConfigMismatch.
ComparisonReport fig2_experiment(const SimConfig& baseline, const SimConfig& variant);

struct SweepRow {
    double value = 0.0;
    SimMetrics metrics;
};

/// One run per value with the template's seed.
std::vector<SweepRow> sweep(const SimConfig& tmpl, const std::string& parameter, const std::vector<double>& values);

/// `param,throughput,goodput,timeouts,mean_sojourn_<station>...`
std::string csv_header(const SimConfig& cfg);
std::string csv_row(const std::string& param, const SimMetrics& m);
void write_csv(std::ostream& out, const SimConfig& cfg, const std::vector<SweepRow>& rows);

} // namespace wms::sim
