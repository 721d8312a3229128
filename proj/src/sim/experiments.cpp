#include "wms/sim/experiments.hpp"

#include <cmath>
#include <cstdio>

namespace wms::sim {

MM1 mm1_theory(double lambda, double mu)
{
    if (!(lambda >= 0) || !(mu > 0))
        throw InvalidConfig("mm1 needs lambda >= 0 and mu > 0");
    if (lambda >= mu)
        throw UnstableRegime("lambda >= mu: the queue grows without bound");
    MM1 r;
    r.rho = lambda / mu;
    r.mean_in_system = r.rho / (1 - r.rho);
    r.mean_sojourn = 1 / (mu - lambda);
    return r;
}

namespace {

bool same_station(const StationModel& a, const StationModel& b, bool ignore_mu)
{
    return a.name == b.name && (ignore_mu || a.mu == b.mu) && a.servers == b.servers && a.timeout == b.timeout &&
           a.capacity == b.capacity;
}

} // namespace

ComparisonReport fig2_experiment(const SimConfig& baseline, const SimConfig& variant)
{
    baseline.validate();
    variant.validate();
    if (baseline.lambda != variant.lambda || baseline.coupling.alpha != variant.coupling.alpha ||
        baseline.coupling.l0 != variant.coupling.l0 || baseline.horizon != variant.horizon ||
        baseline.warmup != variant.warmup || baseline.seed != variant.seed ||
        baseline.stations.size() != variant.stations.size())
        throw ConfigMismatch("variant may differ from the baseline only in one station's mu");

    ComparisonReport r;
    for (std::size_t i = 0; i < baseline.stations.size(); ++i) {
        const auto& b = baseline.stations[i];
        const auto& v = variant.stations[i];
        if (!same_station(b, v, true))
            throw ConfigMismatch("station " + b.name + " differs in more than mu");
        if (b.mu == v.mu)
            continue;
        if (r.raised)
            throw ConfigMismatch("more than one station's mu differs");
        if (v.mu < b.mu)
            throw ConfigMismatch("the variant must raise mu at " + b.name + ", not lower it");
        r.raised = i;
        r.factor = v.mu / b.mu;
    }

    r.baseline = run_sim(baseline);
    r.variant = r.raised ? run_sim(variant) : r.baseline;
    for (std::size_t i = 0; i < baseline.stations.size(); ++i) {
        long long d = static_cast<long long>(r.variant.stations[i].timeouts) -
                      static_cast<long long>(r.baseline.stations[i].timeouts);
        r.timeout_delta.push_back(d);
        if (r.raised && i > *r.raised)
            r.downstream_timeout_delta += d;
    }
    if (r.raised && *r.raised + 1 < baseline.stations.size()) {
        r.next_queue_baseline = r.baseline.stations[*r.raised + 1].mean_queue;
        r.next_queue_variant = r.variant.stations[*r.raised + 1].mean_queue;
    }
    double gb = r.baseline.goodput, gv = r.variant.goodput;
    r.goodput_ratio = gb > 0 ? gv / gb : (gv > 0 ? kInfinity : 1.0);
    r.verdict = gv == gb ? "equal" : gv > gb ? "better" : "worse";
    return r;
}

std::vector<SweepRow> sweep(const SimConfig& tmpl, const std::string& parameter, const std::vector<double>& values)
{
    tmpl.validate();
    with_parameter(tmpl, parameter, parameter == "lambda" ? tmpl.lambda : 1.0); // rejects unknown names early
    std::vector<SweepRow> rows;
    for (double v : values)
        rows.push_back({v, run_sim(with_parameter(tmpl, parameter, v))});
    return rows;
}

std::string csv_header(const SimConfig& cfg)
{
    std::string h = "param,throughput,goodput,timeouts";
    for (const auto& s : cfg.stations)
        h += ",mean_sojourn_" + s.name;
    return h;
}

std::string csv_row(const std::string& param, const SimMetrics& m)
{
    char buf[64];
    std::string row = param;
    auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, ",%.6g", x);
        row += buf;
    };
    num(m.throughput);
    num(m.goodput);
    row += "," + std::to_string(m.window_timeouts());
    for (const auto& s : m.stations)
        num(s.mean_sojourn);
    return row;
}

void write_csv(std::ostream& out, const SimConfig& cfg, const std::vector<SweepRow>& rows)
{
    out << csv_header(cfg) << '\n';
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6g", r.value);
        out << csv_row(buf, r.metrics) << '\n';
    }
}

} // namespace wms::sim
