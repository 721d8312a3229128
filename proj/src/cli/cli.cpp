#include "wms/cli/cli.hpp"

#include "wms/broker/broker.hpp"
#include "wms/jdl/parser.hpp"
#include "wms/lb/logbook.hpp"
#include "wms/pipeline/services.hpp"
#include "wms/sim/experiments.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/strings.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace wms::cli {

namespace {

namespace stdfs = std::filesystem;
using nlohmann::json;
using pipeline::ServiceConfig;
using pipeline::Services;

/// Raised for anything the user can fix: maps to exit code 1.
class UsageProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct Globals {
    std::string home;
    std::string config;
    bool json = false;
};

stdfs::path home_dir(const Globals& g)
{
    if (!g.home.empty())
        return g.home;
    if (const char* env = std::getenv("WMS_HOME"); env && *env)
        return env;
    return "wms-home";
}

// Relative paths are taken from the working directory when they exist there,
// otherwise from the installation root.
stdfs::path locate(const Globals& g, const std::string& p)
{
    stdfs::path path(p);
    if (path.is_absolute() || stdfs::exists(path))
        return path;
    auto under_home = home_dir(g) / path;
    return stdfs::exists(under_home) ? under_home : path;
}

std::string read_input(const Globals& g, const std::string& p)
{
    auto path = locate(g, p);
    if (!stdfs::is_regular_file(path))
        throw UsageProblem("no such file: " + p);
    return fs::read_file(path);
}

ServiceConfig service_config(const Globals& g, const std::string& explicit_path = {})
{
    auto home = home_dir(g);
    std::string file = explicit_path.empty() ? g.config : explicit_path;
    if (!file.empty()) {
        auto path = locate(g, file);
        if (!stdfs::is_regular_file(path))
            throw UsageProblem("no such config file: " + file);
        return ServiceConfig::load(path, home);
    }
    if (stdfs::is_regular_file(home / "wms.conf"))
        return ServiceConfig::load(home / "wms.conf", home);
    return ServiceConfig::defaults(home);
}

lb::JobId job_arg(const std::string& text)
{
    if (!lb::JobId::valid(text))
        throw lb::UnknownJob(text);
    return lb::JobId::parse(text);
}

std::string detail_of(const lb::JobState& s)
{
    switch (s.state) {
    case lb::State::Done: return "exit=" + std::to_string(s.exit_code.value_or(0));
    case lb::State::Aborted: return s.reason.value_or("");
    case lb::State::Matched:
    case lb::State::Transferred:
    case lb::State::Running: return s.resource.value_or("");
    default: return "";
    }
}

json state_json(const lb::JobId& job, const lb::JobState& s)
{
    json j = {{"job", job.str()}, {"state", lb::state_name(s.state)}};
    if (s.resource)
        j["resource"] = *s.resource;
    if (s.exit_code)
        j["exit_code"] = *s.exit_code;
    if (s.reason)
        j["reason"] = *s.reason;
    return j;
}

// ---------------------------------------------------------------------------

int cmd_submit(const Globals& g, const std::string& jdl, std::ostream& out)
{
    std::string text = read_input(g, jdl);
    Services svc(service_config(g));
    lb::JobId id;
    try {
        id = svc.submit(text);
    } catch (const lb::InvalidAd& e) {
        throw UsageProblem(std::string("invalid job description: ") + e.what());
    } catch (const spool::QueueFull& e) {
        throw UsageProblem(std::string("submission refused: ") + e.what());
    }
    if (g.json)
        out << json{{"job", id.str()}}.dump() << '\n';
    else
        out << id.str() << '\n';
    return Ok;
}

int cmd_status(const Globals& g, const std::vector<std::string>& ids, std::ostream& out)
{
    lb::LogBook lb(service_config(g).lb_root());
    for (const auto& text : ids) {
        auto job = job_arg(text);
        if (!lb.exists(job))
            throw lb::UnknownJob(text);
        auto s = lb.job_state(job);
        if (g.json) {
            out << state_json(job, s).dump() << '\n';
        } else {
            auto detail = detail_of(s);
            out << job.str() << ' ' << lb::state_name(s.state) << (detail.empty() ? "" : " " + detail) << '\n';
        }
    }
    return Ok;
}

int cmd_events(const Globals& g, const std::string& text, std::ostream& out)
{
    lb::LogBook lb(service_config(g).lb_root());
    auto job = job_arg(text);
    if (!lb.exists(job))
        throw lb::UnknownJob(text);
    for (const auto& e : lb.job_events(job)) {
        if (g.json)
            out << json{{"time", format_rfc3339(e.timestamp)}, {"kind", lb::kind_name(e.kind)}, {"arg", e.arg},
                        {"source", e.source}, {"seq", e.seq}}
                       .dump()
                << '\n';
        else
            out << format_rfc3339(e.timestamp) << '|' << lb::kind_name(e.kind) << '|' << e.arg << '|' << e.source
                << '|' << e.seq << '\n';
    }
    return Ok;
}

int cmd_cancel(const Globals& g, const std::string& text, std::ostream& out)
{
    Services svc(service_config(g));
    auto job = job_arg(text);
    auto r = svc.cancel(job);
    auto state = lb::state_name(svc.logbook().job_state(job).state);
    if (g.json)
        out << json{{"job", job.str()}, {"result", r == Services::CancelResult::Cancelled ? "cancelled" : "already-terminal"},
                    {"state", state}}
                   .dump()
            << '\n';
    else
        out << job.str() << ' ' << (r == Services::CancelResult::Cancelled ? "cancelled" : "already-terminal") << ' '
            << state << '\n';
    return Ok;
}

int cmd_recover(const Globals& g, const std::string& config, std::ostream& out)
{
    Services svc(service_config(g, config));
    auto rep = svc.recover_all();
    out << rep.summary() << '\n';
    return Ok;
}

int cmd_run_services(const Globals& g, const std::string& config, double duration_s, bool until_idle,
                     std::ostream& out)
{
    Services svc(service_config(g, config));
    out << "recover " << svc.recover_all().summary() << '\n' << std::flush;

    g_interrupted = false;
    auto old_int = std::signal(SIGINT, on_signal);
    auto old_term = std::signal(SIGTERM, on_signal);
    svc.start();
    auto started = std::chrono::steady_clock::now();
    auto quiet = [&] {
        for (const auto& j : svc.logbook().jobs())
            if (!lb::is_terminal(svc.logbook().job_state(j).state))
                return false;
        return true;
    };
    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds{100});
        auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (duration_s > 0 && elapsed >= duration_s)
            break;
        if (until_idle && quiet())
            break;
    }
    svc.stop();
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);

    std::size_t live = 0, done = 0, aborted = 0, cancelled = 0;
    for (const auto& j : svc.logbook().jobs()) {
        switch (svc.logbook().job_state(j).state) {
        case lb::State::Done: ++done; break;
        case lb::State::Aborted: ++aborted; break;
        case lb::State::Cancelled: ++cancelled; break;
        default: ++live; break;
        }
    }
    out << "stopped done=" << done << " aborted=" << aborted << " cancelled=" << cancelled << " live=" << live
        << " restarts=" << svc.restarts() << '\n';
    return Ok;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw UsageProblem("cannot write " + path);
    f << text;
    if (!f.flush())
        throw StorageError("write failed: " + path);
}

int cmd_sim(const Globals& g, const std::string& config, const std::string& out_path, const std::string& trace_path,
            bool fig2, std::ostream& out, std::ostream& err)
{
    auto path = locate(g, config);
    std::ostringstream csv;
    if (fig2) {
        auto f = sim::Fig2Setup::load(path);
        auto r = sim::fig2_experiment(f.baseline, f.variant());
        csv << sim::csv_header(f.baseline) << '\n'
            << sim::csv_row("baseline", r.baseline) << '\n'
            << sim::csv_row("variant", r.variant) << '\n';
        write_text(out_path, csv.str(), out);
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "verdict %s goodput %.6g -> %.6g ratio %.4g next-queue %.6g -> %.6g downstream-timeouts %+lld\n",
                      r.verdict.c_str(), r.baseline.goodput, r.variant.goodput, r.goodput_ratio,
                      r.next_queue_baseline, r.next_queue_variant, r.downstream_timeout_delta);
        (out_path == "-" ? err : out) << buf;
        return Ok;
    }
    auto cfg = sim::SimConfig::load(path);
    std::ofstream trace;
    if (!trace_path.empty()) {
        trace.open(trace_path, std::ios::trunc);
        if (!trace)
            throw UsageProblem("cannot write " + trace_path);
    }
    auto m = sim::run_sim(cfg, trace_path.empty() ? nullptr : &trace);
    csv << sim::csv_header(cfg) << '\n' << sim::csv_row("base", m) << '\n';
    write_text(out_path, csv.str(), out);
    return Ok;
}

std::vector<double> parse_values(const std::string& text)
{
    std::vector<double> out;
    if (text.empty())
        return out;
    // a:b:step or a comma list
    auto parts = split(text, ':');
    if (parts.size() == 3) {
        double a = parse_double(parts[0]), b = parse_double(parts[1]), step = parse_double(parts[2]);
        if (!(step > 0) || b < a)
            throw UsageProblem("range must be start:stop:step with step > 0 and stop >= start");
        for (long long i = 0;; ++i) {
            double v = a + static_cast<double>(i) * step;
            if (v > b + step * 1e-9)
                break;
            out.push_back(v);
        }
        return out;
    }
    for (const auto& p : split(text, ','))
        out.push_back(parse_double(std::string(trim(p))));
    return out;
}

int cmd_sweep(const Globals& g, const std::string& config, const std::string& param, const std::string& values,
              const std::string& out_path, std::ostream& out)
{
    auto cfg = sim::SimConfig::load(locate(g, config));
    std::vector<double> vs;
    try {
        vs = parse_values(values);
    } catch (const ConfigError& e) {
        throw UsageProblem(std::string("bad value list: ") + e.what());
    }
    std::ostringstream csv;
    sim::write_csv(csv, cfg, sim::sweep(cfg, param, vs));
    write_text(out_path, csv.str(), out);
    return Ok;
}

int cmd_match_dry_run(const Globals& g, const std::string& jdl, const std::string& snapshot,
                      const std::string& catalog, const std::string& policy_name, std::ostream& out,
                      std::ostream& err)
{
    jdl::Ad ad;
    try {
        ad = jdl::parse_ad(read_input(g, jdl), jdl::AdRole::Job);
    } catch (const jdl::SyntaxError& e) {
        throw UsageProblem(std::string("invalid job description: ") + e.what());
    }
    auto snap_path = locate(g, snapshot);
    auto cat_path = locate(g, catalog);
    if (!stdfs::is_regular_file(snap_path))
        throw UsageProblem("no such file: " + snapshot);
    if (!stdfs::is_regular_file(cat_path))
        throw UsageProblem("no such file: " + catalog);
    broker::InfoSnapshot snap;
    broker::ReplicaCatalog cat;
    broker::DataPolicy policy;
    try {
        snap = broker::load_snapshot(snap_path, std::chrono::seconds{300});
        cat = broker::load_catalog(cat_path);
        auto named = broker::policy_from_name(policy_name);
        if (!named)
            throw UsageProblem("unknown data policy '" + policy_name + "'");
        policy = *named;
    } catch (const broker::ParseError& e) {
        throw UsageProblem(e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageProblem(e.what());
    }
    if (!snap.fresh(now()))
        err << "warning: snapshot taken at " << format_rfc3339(snap.taken_at) << " is stale\n";

    auto r = broker::match_job(lb::JobId::mint(), ad, snap, cat, policy);
    if (g.json) {
        json cands = json::array();
        for (const auto& c : r.candidates)
            cands.push_back({{"id", c.id}, {"rank", c.rank}});
        json j = {{"candidates", cands}, {"warnings", r.warnings}};
        j["chosen"] = r.chosen ? json(*r.chosen) : json(nullptr);
        if (!r.chosen)
            j["reason"] = r.reason;
        out << j.dump() << '\n';
        return Ok;
    }
    for (const auto& c : r.candidates)
        out << "candidate " << c.id << ' ' << jdl::format_real(c.rank) << '\n';
    for (const auto& w : r.warnings)
        out << "warning " << w << '\n';
    if (r.chosen)
        out << "chosen " << *r.chosen << '\n';
    else
        out << "none " << r.reason << '\n';
    return Ok;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Workload management: job submission and tracking, services, simulation", "wms"};
    app.require_subcommand(1, 1);
    Globals g;
    app.add_option("--home", g.home, "Installation root (default: $WMS_HOME, else ./wms-home)");
    app.add_option("--config", g.config, "Service config (default: <home>/wms.conf if present)");
    app.add_flag("--json", g.json, "Structured output, one JSON object per line");

    std::string a, b, c, d, policy = "require-close-replica", trace;
    std::vector<std::string> ids;
    double duration = 0;
    bool until_idle = false, fig2 = false;

    auto* submit = app.add_subcommand("submit", "Submit a job description; prints the job id");
    submit->add_option("jdl", a, "JDL file")->required();
    auto* status = app.add_subcommand("status", "Print `<jobid> <state> [detail]` per job");
    status->add_option("jobid", ids, "Job ids")->required();
    auto* events = app.add_subcommand("events", "Print the job's events, `time|kind|arg|source|seq`");
    events->add_option("jobid", a)->required();
    auto* cancel = app.add_subcommand("cancel", "Cancel a job");
    cancel->add_option("jobid", a)->required();
    auto* run_services = app.add_subcommand("run-services", "Recover, then run the stations until stopped");
    run_services->add_option("config", a, "Service config")->required();
    run_services->add_option("--duration", duration, "Stop after this many seconds (0: until SIGINT/SIGTERM)");
    run_services->add_flag("--until-idle", until_idle, "Stop once every job is terminal");
    auto* recover = app.add_subcommand("recover", "Run startup recovery and print the report");
    recover->add_option("config", a, "Service config")->required();
    auto* sim = app.add_subcommand("sim", "Run the simulator and write one CSV row");
    sim->add_option("config", a, "Experiment config")->required();
    sim->add_option("out", b, "CSV output path or -")->required();
    sim->add_option("--trace", trace, "Write a t|job|station|event trace");
    sim->add_flag("--fig2", fig2, "Run the [fig2] baseline/variant pair and print the verdict");
    auto* sweep = app.add_subcommand("sweep", "One simulator run per parameter value, as CSV");
    sweep->add_option("config", a, "Experiment config")->required();
    sweep->add_option("param", b, "lambda | alpha | l0 | mu.<station> | timeout.<station>")->required();
    sweep->add_option("values", c, "Comma list or start:stop:step")->required();
    sweep->add_option("out", d, "CSV output path or -")->required();
    auto* dry = app.add_subcommand("match-dry-run", "Show how the broker would match a job; no side effects");
    dry->add_option("jdl", a)->required();
    dry->add_option("snapshot", b)->required();
    dry->add_option("catalog", c)->required();
    dry->add_option("--policy", policy, "require-close-replica | ignore-data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "wms: " << e.what() << '\n';
        return UserError;
    }

    try {
        if (submit->parsed())
            return cmd_submit(g, a, out);
        if (status->parsed())
            return cmd_status(g, ids, out);
        if (events->parsed())
            return cmd_events(g, a, out);
        if (cancel->parsed())
            return cmd_cancel(g, a, out);
        if (run_services->parsed())
            return cmd_run_services(g, a, duration, until_idle, out);
        if (recover->parsed())
            return cmd_recover(g, a, out);
        if (sim->parsed())
            return cmd_sim(g, a, b, trace, fig2, out, err);
        if (sweep->parsed())
            return cmd_sweep(g, a, b, c, d, out);
        if (dry->parsed())
            return cmd_match_dry_run(g, a, b, c, policy, out, err);
    } catch (const UsageProblem& e) {
        err << "wms: " << e.what() << '\n';
        return UserError;
    } catch (const lb::UnknownJob& e) {
        err << "wms: " << e.what() << '\n';
        return UserError;
    } catch (const sim::InvalidConfig& e) {
        err << "wms: invalid config: " << e.what() << '\n';
        return UserError;
    } catch (const sim::ConfigMismatch& e) {
        err << "wms: " << e.what() << '\n';
        return UserError;
    } catch (const ConfigError& e) {
        err << "wms: invalid config: " << e.what() << '\n';
        return UserError;
    } catch (const StorageError& e) {
        err << "wms: storage error: " << e.what() << '\n';
        return InternalError;
    } catch (const std::exception& e) {
        err << "wms: internal error: " << e.what() << '\n';
        return InternalError;
    }
    err << "wms: no command\n";
    return UserError;
}

} // namespace wms::cli
