#include "wms/sim/experiments.hpp"
#include "wms/util/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace wms::sim;

namespace {

SimConfig single(double lambda, double mu, double horizon = 200000, double warmup = 10000, std::uint64_t seed = 1)
{
    SimConfig c;
    c.lambda = lambda;
    c.stations = {StationModel{"s1", mu}};
    c.horizon = horizon;
    c.warmup = warmup;
    c.seed = seed;
    return c;
}

bool within(double got, double want, double rel) { return std::fabs(got - want) <= rel * std::fabs(want); }

std::filesystem::path fig2_path() { return std::filesystem::path(WMS_SOURCE_DIR) / "experiments/fig2.cfg"; }

} // namespace

TEST_CASE("mm1_theory closed forms")
{
    auto a = mm1_theory(0.5, 1.0);
    CHECK(a.rho == doctest::Approx(0.5));
    CHECK(a.mean_in_system == doctest::Approx(1.0));
    CHECK(a.mean_sojourn == doctest::Approx(2.0));
    CHECK(mm1_theory(0.9, 1.0).mean_in_system == doctest::Approx(9.0));
    CHECK_THROWS_AS(mm1_theory(1.0, 1.0), UnstableRegime);
    CHECK_THROWS_AS(mm1_theory(2.0, 1.0), UnstableRegime);
}

TEST_CASE("no arrivals, no metrics")
{
    auto m = run_sim(single(0.0, 1.0, 1000, 0));
    CHECK(m.injected == 0);
    CHECK(m.throughput == 0.0);
    CHECK(m.goodput == 0.0);
    CHECK(m.mean_load == 0.0);
    CHECK(m.mean_sojourn == 0.0);
    CHECK(m.stations.at(0).mean_queue == 0.0);
    CHECK(m.window_timeouts() == 0);
}

TEST_CASE("single station matches M/M/1")
{
    const double lambda = 0.5, mu = 1.0;
    auto m = run_sim(single(lambda, mu));
    double rho = lambda / mu;
    CHECK(within(m.mean_load, rho / (1 - rho), 0.05));
    CHECK(within(m.mean_sojourn, 1 / (mu - lambda), 0.05));
    CHECK(within(m.stations[0].mean_sojourn, 1 / (mu - lambda), 0.05));
    CHECK(within(m.stations[0].mean_queue, rho * rho / (1 - rho), 0.07));
    // p95 of an exponential sojourn with rate mu - lambda.
    CHECK(within(m.stations[0].p95_sojourn, std::log(20.0) / (mu - lambda), 0.05));
    CHECK(within(m.goodput, lambda, 0.02));
    CHECK(m.goodput == m.throughput);
    // Little's law on the simulated figures.
    CHECK(within(m.mean_load, m.goodput * m.mean_sojourn, 0.02));
}

TEST_CASE("load sweep is monotone in lambda and tracks the closed form")
{
    std::vector<double> lambdas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    auto rows = sweep(single(0.5, 1.0, 100000, 5000), "lambda", lambdas);
    REQUIRE(rows.size() == lambdas.size());
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].metrics.mean_load > rows[i - 1].metrics.mean_load);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) // the rho = 0.9 run mixes too slowly for 5%
        CHECK(within(rows[i].metrics.mean_load, lambdas[i] / (1 - lambdas[i]), 0.08));
}

TEST_CASE("tandem without coupling has product-form sojourns")
{
    SimConfig c = single(0.5, 1.0);
    c.stations = {StationModel{"a", 1.0}, StationModel{"b", 0.8}, StationModel{"c", 2.0}};
    auto m = run_sim(c);
    for (std::size_t i = 0; i < 3; ++i) {
        INFO(c.stations[i].name);
        CHECK(within(m.stations[i].mean_sojourn, 1 / (c.stations[i].mu - 0.5), 0.05));
    }
    CHECK(within(m.mean_sojourn, 2.0 + 1 / 0.3 + 1 / 1.5, 0.05));
}

TEST_CASE("multi-server station")
{
    // M/M/2 with lambda = 1, mu = 1: Erlang C gives Wq = 1/3, W = 4/3.
    SimConfig c = single(1.0, 1.0);
    c.stations[0].servers = 2;
    auto m = run_sim(c);
    CHECK(within(m.stations[0].mean_sojourn, 4.0 / 3.0, 0.05));
}

TEST_CASE("determinism and seed stability")
{
    auto c = single(0.5, 1.0, 20000, 1000);
    std::ostringstream t1, t2;
    auto a = run_sim(c, &t1);
    auto b = run_sim(c, &t2);
    CHECK(t1.str() == t2.str());
    CHECK(a.mean_load == b.mean_load);
    CHECK(a.mean_sojourn == b.mean_sojourn);

    auto x = run_sim(single(0.5, 1.0, 200000, 10000, 1));
    auto y = run_sim(single(0.5, 1.0, 200000, 10000, 2));
    CHECK(within(x.mean_load, y.mean_load, 0.03));
    CHECK(within(x.mean_sojourn, y.mean_sojourn, 0.03));
    CHECK(within(x.goodput, y.goodput, 0.03));

    std::istringstream lines(t1.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line) && n < 50) {
        ++n;
        CHECK(std::count(line.begin(), line.end(), '|') == 3);
    }
    CHECK(n == 50);
}

TEST_CASE("job conservation holds exactly under timeouts and capacity")
{
    wms::Rng rng(5);
    for (int round = 0; round < 40; ++round) {
        SimConfig c;
        c.lambda = 0.2 + 2.0 * rng.uniform();
        std::size_t n = 1 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) {
            StationModel s{"s" + std::to_string(i + 1), 0.3 + 2.0 * rng.uniform()};
            s.servers = 1 + rng.below(3);
            if (rng.bernoulli(0.5))
                s.timeout = 0.5 + 10 * rng.uniform();
            if (rng.bernoulli(0.5))
                s.capacity = 1 + rng.below(10);
            c.stations.push_back(s);
        }
        c.coupling.alpha = rng.bernoulli(0.5) ? 0.2 * rng.uniform() : 0.0;
        c.coupling.l0 = 5 * rng.uniform();
        c.horizon = 500 + 1000 * rng.uniform();
        c.warmup = 100 * rng.uniform();
        c.seed = round + 1;
        auto m = run_sim(c);
        CHECK(m.injected == m.completed + m.timed_out + m.rejected + m.in_flight);
        CHECK(m.goodput <= m.throughput);
        CHECK(m.throughput <= c.lambda * 1.25 + 0.05);
        for (const auto& s : m.stations)
            CHECK(s.mean_queue <= s.mean_in_station);
    }
}

TEST_CASE("a timeout below the p95 sojourn produces timeout failures")
{
    SimConfig c = single(0.9, 1.0, 50000, 1000);
    auto free = run_sim(c);
    REQUIRE(free.stations[0].p95_sojourn > 5.0);
    CHECK(free.window_timeouts() == 0);
    c.stations[0].timeout = 5.0;
    auto bounded = run_sim(c);
    CHECK(bounded.stations[0].timeouts > 0);
    CHECK(bounded.goodput < bounded.throughput);
}

TEST_CASE("load coupling sweep lowers goodput")
{
    SimConfig c = single(0.7, 1.0, 50000, 2000);
    c.stations[0].timeout = 4.0;
    auto rows = sweep(c, "alpha", {0.0, 0.01, 0.1});
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].metrics.goodput <= rows[0].metrics.goodput);
    CHECK(rows[2].metrics.goodput <= rows[1].metrics.goodput);
    CHECK(sweep(c, "alpha", {}).empty());
    CHECK_THROWS_AS(sweep(c, "beta", {1.0}), InvalidConfig);
    CHECK_THROWS_AS(sweep(c, "mu.nope", {1.0}), InvalidConfig);
    CHECK_THROWS_AS(sweep(c, "mu.s1", {-1.0}), InvalidConfig);
}

TEST_CASE("classical behaviour: raising a bottleneck never hurts without coupling")
{
    SimConfig b;
    b.lambda = 1.0;
    b.stations = {StationModel{"s1", 0.5}, StationModel{"s2", 0.8}, StationModel{"s3", 2.0}};
    b.stations[0].capacity = 5;
    b.horizon = 20000;
    b.warmup = 1000;
    SimConfig v = b;
    v.stations[0].mu *= 4;
    auto r = fig2_experiment(b, v);
    CHECK(r.raised == 0);
    CHECK(r.factor == doctest::Approx(4.0));
    CHECK(r.variant.goodput >= r.baseline.goodput);
    CHECK(r.verdict == "better");
    CHECK(r.next_queue_variant > r.next_queue_baseline);
}

TEST_CASE("shipped fig2 config shows the inversion, and only with coupling")
{
    auto f = Fig2Setup::load(fig2_path());
    CHECK(f.baseline.stations.size() == 3);
    CHECK(f.factor == 4.0);
    CHECK(f.baseline.coupling.alpha > 0);
    CHECK(std::isfinite(f.baseline.stations[2].timeout));

    auto r = fig2_experiment(f.baseline, f.variant());
    CHECK(r.variant.goodput <= 0.8 * r.baseline.goodput);
    CHECK(r.verdict == "worse");
    REQUIRE(r.raised);
    CHECK(r.next_queue_variant > 10 * r.next_queue_baseline);
    CHECK(r.downstream_timeout_delta > 0);
    for (std::size_t i = 0; i <= *r.raised; ++i)
        CHECK(r.timeout_delta[i] <= 0);

    auto b0 = f.baseline;
    b0.coupling.alpha = 0;
    auto v0 = f.variant();
    v0.coupling.alpha = 0;
    auto r0 = fig2_experiment(b0, v0);
    CHECK(r0.variant.goodput >= r0.baseline.goodput);
}

TEST_CASE("fig2 inversion appears as alpha grows")
{
    auto f = Fig2Setup::load(fig2_path());
    std::vector<double> ratios;
    for (double a : {0.0, 0.01, 0.05}) {
        auto b = with_parameter(f.baseline, "alpha", a);
        auto v = with_parameter(f.variant(), "alpha", a);
        ratios.push_back(fig2_experiment(b, v).goodput_ratio);
    }
    CHECK(ratios[0] >= 1.0);
    CHECK(ratios[2] <= 0.8);
    CHECK(ratios[1] >= ratios[2]);
}

TEST_CASE("fig2 with identical configs and mismatches")
{
    auto f = Fig2Setup::load(fig2_path());
    auto same = fig2_experiment(f.baseline, f.baseline);
    CHECK(same.verdict == "equal");
    CHECK_FALSE(same.raised);
    CHECK(same.downstream_timeout_delta == 0);
    for (auto d : same.timeout_delta)
        CHECK(d == 0);

    auto v = f.variant();
    v.lambda *= 2;
    CHECK_THROWS_AS(fig2_experiment(f.baseline, v), ConfigMismatch);
    v = f.variant();
    v.stations[1].mu *= 2;
    CHECK_THROWS_AS(fig2_experiment(f.baseline, v), ConfigMismatch);
    v = f.baseline;
    v.stations[0].mu /= 2;
    CHECK_THROWS_AS(fig2_experiment(f.baseline, v), ConfigMismatch);
    v = f.variant();
    v.stations[2].timeout = 99;
    CHECK_THROWS_AS(fig2_experiment(f.baseline, v), ConfigMismatch);
}

TEST_CASE("config parsing and validation")
{
    auto kv = wms::KeyValueConfig::parse("[arrivals]\nrate = 0.4\n[station.b]\nmu = 2\nservers = 3\n"
                                         "timeout = inf\ncapacity = 7\n[station.a]\nmu = 1\ntimeout = 3\n"
                                         "[coupling]\nalpha = 0.1\nl0 = 4\n[run]\nhorizon = 100\nwarmup = 10\nseed = 9\n");
    auto c = SimConfig::from(kv);
    CHECK(c.lambda == 0.4);
    REQUIRE(c.stations.size() == 2);
    CHECK(c.stations[0].name == "b"); // file order is chain order
    CHECK(c.stations[0].servers == 3);
    CHECK(std::isinf(c.stations[0].timeout));
    CHECK(c.stations[0].capacity == 7);
    CHECK(c.stations[1].timeout == 3.0);
    CHECK(c.stations[1].capacity == kUnbounded);
    CHECK(c.coupling.factor(14) == doctest::Approx(2.0));
    CHECK(c.coupling.factor(2) == 1.0);
    CHECK(c.seed == 9);

    auto bad = [](const char* text) { return SimConfig::from(wms::KeyValueConfig::parse(text)); };
    CHECK_THROWS_AS(bad("[arrivals]\nrate = 1\n"), InvalidConfig);
    CHECK_THROWS_AS(bad("[station.a]\nmu = 0\n"), InvalidConfig);
    CHECK_THROWS_AS(bad("[station.a]\nmu = 1\nservers = 0\n"), InvalidConfig);
    CHECK_THROWS_AS(bad("[station.a]\nmu = 1\ntimeout = 0\n"), InvalidConfig);
    CHECK_THROWS_AS(bad("[station.a]\nmu = 1\ncapacity = 0\n"), InvalidConfig);
    CHECK_THROWS_AS(bad("[station.a]\nmu = 1\n[run]\nhorizon = 5\nwarmup = 5\n"), InvalidConfig);
    CHECK_THROWS_AS(bad("[station.a]\nmu = 1\n[coupling]\nalpha = -1\n"), InvalidConfig);
    CHECK_THROWS_AS(bad("[arrivals]\nrate = -1\n[station.a]\nmu = 1\n"), InvalidConfig);
}

TEST_CASE("csv output")
{
    auto c = single(0.5, 1.0, 1000, 100);
    c.stations.push_back(StationModel{"s2", 2.0});
    CHECK(csv_header(c) == "param,throughput,goodput,timeouts,mean_sojourn_s1,mean_sojourn_s2");
    std::ostringstream out;
    write_csv(out, c, sweep(c, "lambda", {0.1, 0.2}));
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[1].rfind("0.1,", 0) == 0);
    CHECK(std::count(lines[2].begin(), lines[2].end(), ',') == 5);
}
