// Acceptance run: one PASS/FAIL line per criterion.

#include "support/match_instance.hpp"
#include "support/pipeline_fixture.hpp"

#include "wms/lb/state.hpp"
#include "wms/pipeline/services.hpp"
#include "wms/sim/experiments.hpp"
#include "wms/util/killpoint.hpp"
#include "wms/util/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;
namespace pl = wms::pipeline;
namespace sim = wms::sim;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool wait_for(const std::function<bool()>& pred, std::chrono::milliseconds timeout)
{
    auto deadline = Clock::now() + timeout;
    while (Clock::now() < deadline) {
        if (pred())
            return true;
        std::this_thread::sleep_for(20ms);
    }
    return pred();
}

bool all_terminal(const wms::lb::LogBook& lb)
{
    for (const auto& j : lb.jobs())
        if (!wms::lb::is_terminal(lb.job_state(j).state))
            return false;
    return true;
}

// ---------------------------------------------------------------------------

Verdict ac1()
{
    auto t0 = Clock::now();
    sim::SimConfig c;
    c.lambda = 0.5;
    c.stations = {sim::StationModel{"s1", 1.0}};
    c.horizon = 2e5;
    c.warmup = 1e4;
    c.seed = 1;
    auto m = sim::run_sim(c);
    double secs = seconds_since(t0);
    bool ok = std::fabs(m.mean_load - 1.0) <= 0.05 && std::fabs(m.mean_sojourn - 2.0) <= 0.10 && secs < 30;
    return {ok, fmt("mean-in-system %.4f (1.0 +-5%%) mean-sojourn %.4f (2.0 +-5%%) %.2fs", m.mean_load,
                    m.mean_sojourn, secs)};
}

Verdict ac2(const std::filesystem::path& cfg)
{
    auto t0 = Clock::now();
    auto f = sim::Fig2Setup::load(cfg);
    auto r = sim::fig2_experiment(f.baseline, f.variant());

    std::uint64_t upstream = 0, downstream = 0;
    for (std::size_t i = 0; i < r.variant.stations.size(); ++i)
        (i > *r.raised ? downstream : upstream) += r.variant.stations[i].timeouts;
    bool concentrated = downstream > 0 && r.downstream_timeout_delta > 0 && downstream >= 9 * upstream;

    auto b0 = sim::with_parameter(f.baseline, "alpha", 0);
    auto v0 = sim::with_parameter(f.variant(), "alpha", 0);
    auto r0 = sim::fig2_experiment(b0, v0);
    double secs = seconds_since(t0);

    bool ok = r.variant.goodput <= 0.8 * r.baseline.goodput && concentrated &&
              r0.variant.goodput >= r0.baseline.goodput && secs < 120;
    return {ok, fmt("coupled goodput %.4f -> %.4f (ratio %.3f <= 0.8), timeouts upstream %llu downstream %llu; "
                    "alpha=0 goodput %.4f -> %.4f; %.2fs",
                    r.baseline.goodput, r.variant.goodput, r.goodput_ratio, (unsigned long long)upstream,
                    (unsigned long long)downstream, r0.baseline.goodput, r0.variant.goodput, secs)};
}

Verdict ac3()
{
    auto t0 = Clock::now();
    std::size_t schedules = 0, failures = 0;
    std::set<std::string> crashed_at;
    std::string first_failure;
    // Fault-free schedules must end with every job Done; schedules with
    // injected failures exercise the nack path and must end terminal.
    struct Family {
        std::uint64_t seed;
        double failure;
    };
    for (Family fam : {Family{1, 0.0}, Family{2, 0.0}, Family{3, 0.3}, Family{4, 0.3}}) {
        testing::CrashSchedule base;
        base.seed = fam.seed;
        base.handler_failure = fam.failure;
        base.jobs = 3;
        auto surface = testing::crash_surface(base);
        for (std::size_t n = 0; n < surface.size(); ++n) {
            auto s = base;
            s.kill_index = n;
            auto out = testing::run_crash_schedule(s);
            ++schedules;
            crashed_at.insert(out.point);
            bool ok = out.crashed && out.violations.empty() && out.census.live == 0 &&
                      out.census.duplicate_done == 0 && out.second_recover_clean &&
                      out.census.jobs >= out.committed && (fam.failure > 0 || out.not_done == 0);
            if (!ok) {
                ++failures;
                if (first_failure.empty())
                    first_failure = fmt(" first failure: seed %llu point %s", (unsigned long long)fam.seed,
                                        out.point.c_str());
            }
        }
    }
    std::size_t families = 0;
    for (const char* prefix : {"spool.enqueue.", "spool.dequeue.", "spool.ack.", "spool.nack.", "station."})
        families += std::any_of(crashed_at.begin(), crashed_at.end(),
                                [&](const std::string& p) { return p.rfind(prefix, 0) == 0; });
    double secs = seconds_since(t0);
    bool ok = failures == 0 && schedules >= 50 && families == 5 && secs < 300;
    return {ok, fmt("%zu schedules over %zu distinct kill points, %zu failed, crash families covered %zu/5; %.1fs%s",
                    schedules, crashed_at.size(), failures, families, secs, first_failure.c_str())};
}

Verdict ac4()
{
    testing::PipelineHome home;
    auto cfg = home.config();
    std::size_t total_capacity = 0;
    for (auto& st : cfg.stations) {
        st.pool_size = 2;
        st.queue_capacity = 10;
        total_capacity += st.queue_capacity;
    }
    cfg.limits = {.max_workers = 8, .max_requests = 4, .max_leases = 4};
    pl::Services svc(cfg);
    svc.start();

    std::atomic<bool> sampling{true};
    std::atomic<std::size_t> samples{0}, breaches{0};
    std::string breach;
    std::thread sampler([&] {
        while (sampling) {
            for (const auto& st : cfg.stations)
                if (svc.queue(st.input_queue).depth() > st.queue_capacity)
                    ++breaches, breach = "queue " + st.input_queue;
            if (svc.limits().current(pl::Resource::Worker) > cfg.limits.max_workers)
                ++breaches, breach = "workers";
            if (svc.live_workers().size() > cfg.limits.max_workers)
                ++breaches, breach = "live workers";
            if (svc.limits().current(pl::Resource::Request) > cfg.limits.max_requests)
                ++breaches, breach = "requests";
            if (svc.limits().current(pl::Resource::Lease) > cfg.limits.max_leases)
                ++breaches, breach = "leases";
            ++samples;
            std::this_thread::sleep_for(1ms);
        }
    });

    const std::size_t burst = 10 * total_capacity;
    std::atomic<std::size_t> accepted{0}, refused{0}, other{0};
    std::vector<std::thread> submitters;
    std::mutex ids_mu;
    std::vector<wms::lb::JobId> accepted_ids;
    for (int t = 0; t < 4; ++t)
        submitters.emplace_back([&] {
            for (std::size_t i = 0; i < burst / 4; ++i) {
                try {
                    auto id = svc.submit(testing::job_jdl());
                    ++accepted;
                    std::lock_guard lk(ids_mu);
                    accepted_ids.push_back(id);
                } catch (const wms::spool::QueueFull&) {
                    ++refused;
                } catch (...) {
                    ++other;
                }
            }
        });
    for (auto& t : submitters)
        t.join();
    bool finished = wait_for([&] { return all_terminal(svc.logbook()); }, 120s);
    sampling = false;
    sampler.join();
    svc.stop();

    std::size_t lost = 0;
    for (const auto& id : accepted_ids)
        lost += svc.logbook().job_state(id).state != wms::lb::State::Done;
    std::size_t refused_recorded = 0;
    for (const auto& j : svc.logbook().jobs()) {
        auto s = svc.logbook().job_state(j);
        refused_recorded += s.state == wms::lb::State::Aborted && s.reason == "queue-full";
    }
    bool hw_ok = svc.limits().high_water(pl::Resource::Worker) <= cfg.limits.max_workers &&
                 svc.limits().high_water(pl::Resource::Request) <= cfg.limits.max_requests &&
                 svc.limits().high_water(pl::Resource::Lease) <= cfg.limits.max_leases;
    bool ok = finished && breaches == 0 && hw_ok && refused > 0 && other == 0 && accepted + refused == burst &&
              lost == 0 && refused_recorded == refused && svc.conservation_violations().empty();
    return {ok, fmt("burst %zu into capacity %zu: accepted %zu, QueueFull %zu, accepted-not-Done %zu; %zu samples, "
                    "%zu cap breaches%s; high water workers %zu requests %zu leases %zu",
                    burst, total_capacity, accepted.load(), refused.load(), lost, samples.load(), breaches.load(),
                    breach.empty() ? "" : (" (" + breach + ")").c_str(),
                    svc.limits().high_water(pl::Resource::Worker), svc.limits().high_water(pl::Resource::Request),
                    svc.limits().high_water(pl::Resource::Lease))};
}

Verdict ac5()
{
    // Traces come from real pipeline runs: one success and two kinds of failure.
    testing::PipelineHome home;
    auto cfg = home.config();
    std::vector<std::vector<wms::lb::Event>> traces;
    {
        pl::Services svc(cfg);
        auto ok = svc.submit(testing::job_jdl(0, 0));
        auto nomatch = svc.submit("[ Executable = \"x\"; Requirements = other.Arch == \"sparc\" ]");
        svc.drain();
        traces.push_back(svc.logbook().job_events(ok));
        traces.push_back(svc.logbook().job_events(nomatch));
    }
    {
        testing::PipelineHome h2;
        auto c2 = h2.config();
        c2.faults.handler_failure = 1.0;
        pl::Services svc(c2);
        auto failed = svc.submit(testing::job_jdl());
        svc.drain();
        traces.push_back(svc.logbook().job_events(failed));
    }

    wms::Rng rng(2002);
    std::size_t checks = 0, mismatches = 0, loss_checks = 0;
    std::vector<std::string> canon;
    for (const auto& trace : traces) {
        auto expected = wms::lb::derive_state(trace);
        canon.push_back(wms::lb::state_name(expected.state));
        if (!wms::lb::is_terminal(expected.state))
            ++mismatches;
        for (int i = 0; i < 100; ++i) {
            auto noisy = trace;
            for (std::size_t k = 0, n = 1 + rng.below(trace.size()); k < n; ++k)
                noisy.push_back(trace[rng.below(trace.size())]);
            std::shuffle(noisy.begin(), noisy.end(), rng);
            ++checks;
            mismatches += !wms::lb::derive_state(noisy).same_outcome(expected);
        }
        // Redundant pairs: same kind, arg and seq from two sources.
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t a = 0; a < trace.size(); ++a)
            for (std::size_t b = a + 1; b < trace.size(); ++b)
                if (trace[a].kind == trace[b].kind && trace[a].arg == trace[b].arg && trace[a].seq == trace[b].seq &&
                    trace[a].source != trace[b].source)
                    pairs.emplace_back(a, b);
        if (pairs.empty())
            ++mismatches;
        // Every single copy dropped, then 100 random choices of one lost copy per pair.
        for (const auto& [a, b] : pairs) {
            for (auto drop : {a, b}) {
                auto lossy = trace;
                lossy.erase(lossy.begin() + static_cast<std::ptrdiff_t>(drop));
                ++loss_checks;
                mismatches += !wms::lb::derive_state(lossy).same_outcome(expected);
            }
        }
        for (int i = 0; i < 100; ++i) {
            std::set<std::size_t> dropped;
            for (const auto& [a, b] : pairs)
                if (rng.bernoulli(0.5))
                    dropped.insert(rng.bernoulli(0.5) ? a : b);
            std::vector<wms::lb::Event> lossy;
            for (std::size_t k = 0; k < trace.size(); ++k)
                if (!dropped.count(k))
                    lossy.push_back(trace[k]);
            std::shuffle(lossy.begin(), lossy.end(), rng);
            ++loss_checks;
            mismatches += !wms::lb::derive_state(lossy).same_outcome(expected);
        }
    }
    bool ok = mismatches == 0 && canon == std::vector<std::string>{"Done", "Aborted", "Aborted"};
    return {ok, fmt("traces %s/%s/%s; %zu permutation+duplication checks, %zu one-copy-loss checks, %zu mismatches",
                    canon[0].c_str(), canon[1].c_str(), canon[2].c_str(), checks, loss_checks, mismatches)};
}

Verdict ac6()
{
    std::size_t instances = 0, decisions = 0, disagreements = 0, tie_jobs = 0, data_refusals = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto inst = testing::random_instance(seed, 20, 10);
        ++instances;
        for (const auto& job : inst.jobs) {
            for (auto policy : {wms::broker::DataPolicy::RequireCloseReplica, wms::broker::DataPolicy::IgnoreData}) {
                auto r = wms::broker::match_job(wms::lb::JobId::mint(), job, inst.snapshot, inst.catalog, policy);
                auto want = testing::brute_force_match(job, inst.snapshot, inst.catalog, policy);
                ++decisions;
                disagreements += r.chosen != want;
                std::set<double> ranks;
                for (const auto& c : r.candidates)
                    ranks.insert(c.rank);
                tie_jobs += ranks.size() < r.candidates.size();
                data_refusals += !r.chosen && r.reason.rfind("no replica", 0) == 0;
            }
        }
    }
    bool ok = disagreements == 0 && tie_jobs > 0 && data_refusals > 0;
    return {ok, fmt("%zu instances, %zu decisions, %zu disagreements; %zu decisions with rank ties, %zu data-policy "
                    "refusals",
                    instances, decisions, disagreements, tie_jobs, data_refusals)};
}

Verdict ac7()
{
    auto t0 = Clock::now();
    testing::PipelineHome home;
    auto cfg = home.config();
    for (auto& st : cfg.stations) {
        st.pool_size = 2;
        st.max_requests = 100;
    }
    cfg.faults.handler_failure = 0.05;
    cfg.faults.seed = 7;
    {
        pl::Services svc(cfg);
        svc.start();
        for (int i = 0; i < 500; ++i)
            svc.submit(testing::job_jdl(0, 0, std::to_string(i)));
        wait_for([&] { return all_terminal(svc.logbook()); }, 115s);
        svc.stop();
    }
    double secs = seconds_since(t0);
    // Verification reads the LB and nothing else.
    wms::lb::LogBook lb(cfg.lb_root());
    auto c = testing::census(lb);
    std::size_t injected = 0;
    for (const auto& j : lb.jobs())
        for (const auto& e : lb.job_events(j))
            injected += e.kind == wms::lb::EventKind::Warning;
    bool ok = c.jobs == 500 && c.done + c.aborted == 500 && c.duplicate_done == 0 && injected > 0 && secs < 120;
    return {ok, fmt("500 jobs at 5%% handler failures (%zu failures logged): Done %zu + Aborted %zu = %zu, live %zu; "
                    "%.1fs",
                    injected, c.done, c.aborted, c.done + c.aborted, c.live, secs)};
}

} // namespace

int main(int argc, char** argv)
{
    std::filesystem::path source = argc > 1 ? argv[1] : WMS_SOURCE_DIR;
    std::set<std::string> only;
    for (int i = 2; i < argc; ++i)
        only.insert(argv[i]);

    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
    };
    std::vector<Criterion> all = {
        {"AC1", ac1},
        {"AC2", [&] { return ac2(source / "experiments/fig2.cfg"); }},
        {"AC3", ac3},
        {"AC4", ac4},
        {"AC5", ac5},
        {"AC6", ac6},
        {"AC7", ac7},
    };
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.name))
            continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        } catch (const wms::SimulatedCrash& e) {
            v = {false, "unexpected crash at " + e.point};
        }
        std::printf("%s %s %s\n", c.name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
