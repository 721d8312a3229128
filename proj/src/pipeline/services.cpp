#include "wms/pipeline/services.hpp"

#include "wms/broker/broker.hpp"
#include "wms/jdl/eval.hpp"
#include "wms/jdl/parser.hpp"
#include "wms/util/crc32.hpp"
#include "wms/util/killpoint.hpp"
#include "wms/util/random.hpp"

#include <algorithm>
#include <set>

namespace wms::pipeline {

using lb::EventKind;
using lb::JobId;
using spool::Location;

namespace {

constexpr std::uint64_t kTerminalBase = 1'000'000'000;

unsigned kind_code(EventKind k) { return static_cast<unsigned>(k) + 1; }

class HandlerFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string ms_text(std::chrono::steady_clock::duration d)
{
    return std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(d).count()) + "ms";
}

} // namespace

const char* step_name(StepResult r)
{
    switch (r) {
    case StepResult::Idle: return "idle";
    case StepResult::Throttled: return "throttled";
    case StepResult::Forwarded: return "forwarded";
    case StepResult::Finished: return "finished";
    case StepResult::Deferred: return "deferred";
    case StepResult::Skipped: return "skipped";
    case StepResult::Failed: return "failed";
    case StepResult::TimedOut: return "timed-out";
    case StepResult::DeadLettered: return "dead-lettered";
    case StepResult::Backpressure: return "backpressure";
    case StepResult::Stale: return "stale";
    }
    return "?";
}

std::uint64_t step_seq(unsigned retry, EventKind kind) { return std::uint64_t{retry} * 16 + kind_code(kind); }

std::uint64_t terminal_seq(EventKind kind) { return kTerminalBase + kind_code(kind); }

bool PipelineRecoveryReport::all_zero() const
{
    return spool.all_zero() && lb_reindexed == 0 && requeued == 0 && duplicates_buried == 0 &&
           terminal_buried == 0 && orphans_buried == 0 && aborted == 0;
}

std::string PipelineRecoveryReport::summary() const
{
    return "reclaimed=" + std::to_string(spool.reclaimed) + " expired-leases=" + std::to_string(spool.expired_leases) +
           " purged-staging=" + std::to_string(spool.purged_staging) + " lb-reindexed=" + std::to_string(lb_reindexed) +
           " requeued=" + std::to_string(requeued) + " duplicates=" + std::to_string(duplicates_buried) +
           " terminal=" + std::to_string(terminal_buried) + " orphans=" + std::to_string(orphans_buried) +
           " aborted=" + std::to_string(aborted);
}

std::optional<std::pair<JobId, std::string>> parse_payload(std::string_view payload)
{
    auto nl = payload.find('\n');
    std::string_view id = payload.substr(0, nl);
    if (!JobId::valid(id))
        return std::nullopt;
    std::string rest = nl == std::string_view::npos ? std::string{} : std::string(payload.substr(nl + 1));
    return std::make_pair(JobId::parse(id), std::move(rest));
}

std::string make_payload(const JobId& job, std::string_view record)
{
    return job.str() + "\n" + std::string(record);
}

// ---------------------------------------------------------------------------

struct Services::Worker {
    std::string id;
    std::string station;
    Doom doom;
    std::thread thread;
    std::atomic<bool> finished{false};
};

struct Services::Outcome {
    enum Kind { Forward, Finish, Fail, Defer } kind = Fail;
    std::string record; // Forward: downstream record
    std::string reason; // Fail
    struct Ev {
        EventKind kind;
        std::string arg;
        std::string source;
        std::uint64_t seq;
    };
    std::vector<Ev> events;

    void twice(EventKind k, const std::string& arg, const std::string& a, const std::string& b, std::uint64_t seq)
    {
        events.push_back({k, arg, a, seq});
        events.push_back({k, arg, b, seq});
    }
};

/// Re-reads the snapshot and catalog only when their files change.
class Services::SnapshotCache {
public:
    struct Loaded {
        std::shared_ptr<const broker::InfoSnapshot> snapshot;
        std::shared_ptr<const broker::ReplicaCatalog> catalog;
    };

    Loaded get(const std::filesystem::path& snap, const std::filesystem::path& cat, std::chrono::seconds ttl)
    {
        std::lock_guard lk(mu_);
        std::error_code ec;
        auto st = std::filesystem::last_write_time(snap, ec);
        if (ec)
            throw HandlerFailure("no information system snapshot at " + snap.string());
        if (!snap_ || st != snap_time_) {
            snap_ = std::make_shared<broker::InfoSnapshot>(broker::load_snapshot(snap, ttl));
            snap_time_ = st;
        }
        auto ct = std::filesystem::last_write_time(cat, ec);
        if (ec) {
            cat_ = std::make_shared<broker::ReplicaCatalog>();
            cat_time_ = {};
        } else if (!cat_ || ct != cat_time_) {
            cat_ = std::make_shared<broker::ReplicaCatalog>(broker::load_catalog(cat));
            cat_time_ = ct;
        }
        return {snap_, cat_};
    }

private:
    std::mutex mu_;
    std::shared_ptr<const broker::InfoSnapshot> snap_;
    std::shared_ptr<const broker::ReplicaCatalog> cat_;
    std::filesystem::file_time_type snap_time_{};
    std::filesystem::file_time_type cat_time_{};
};

// ---------------------------------------------------------------------------

Services::Services(ServiceConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))), lb_(cfg_.lb_root()), limits_(cfg_.limits), ce_(cfg_.ce_dir()),
      log_(cfg_.run_log()), snapshots_(std::make_unique<SnapshotCache>()),
      supervisor_id_("supervisor-" + random_hex(6))
{
    for (const auto& st : cfg_.stations) {
        spool::QueueConfig q;
        q.name = st.input_queue;
        q.root = cfg_.spool_root();
        q.capacity = st.queue_capacity;
        q.lease_duration = cfg_.spool.lease_duration;
        q.max_retries = cfg_.spool.max_retries;
        q.stage_ttl = cfg_.spool.stage_ttl;
        queues_.emplace(q.name, std::make_unique<spool::Queue>(q));
    }
}

Services::~Services() { stop(); }

spool::Queue& Services::queue(std::string_view name)
{
    auto it = queues_.find(name);
    if (it == queues_.end())
        throw std::invalid_argument("unknown queue '" + std::string(name) + "'");
    return *it->second;
}

void Services::emit(const JobId& job, EventKind kind, const std::string& arg, const std::string& source,
                    std::uint64_t seq)
{
    lb_.record_event(lb::make_event(job, kind, arg, source, seq));
}

bool Services::fault(double p, const JobId& job, std::string_view station, unsigned retry, unsigned salt) const
{
    if (p <= 0.0)
        return false;
    // Keyed on the ad text, not the minted id, so a replayed run draws the same faults.
    std::uint64_t key = (std::uint64_t{crc32(lb_.job_ad_text(job) + "|" + std::string(station))} << 8) ^ salt;
    Rng rng(derive_seed(cfg_.faults.seed ^ key, retry));
    return rng.uniform() < p;
}

// ---------------------------------------------------------------------------
// Submission and cancellation

JobId Services::submit(std::string_view jdl_text)
{
    const auto& first = cfg_.stations.front();
    JobId job = lb_.register_job(jdl_text);
    kill_point("ui.submit.after_register");
    try {
        queue(first.input_queue).enqueue(make_payload(job, ""));
    } catch (const spool::QueueFull&) {
        emit(job, EventKind::Aborted, "queue-full", "ui", terminal_seq(EventKind::Aborted));
        throw;
    }
    kill_point("ui.submit.after_enqueue");
    emit(job, EventKind::Enqueued, first.name, "ui", step_seq(0, EventKind::Enqueued));
    return job;
}

Services::CancelResult Services::cancel(const JobId& job)
{
    if (!lb_.exists(job))
        throw lb::UnknownJob(job.str());
    if (lb::is_terminal(lb_.job_state(job).state))
        return CancelResult::AlreadyTerminal;
    emit(job, EventKind::Cancelled, "", "ui", terminal_seq(EventKind::Cancelled));
    for (auto& [name, q] : queues_)
        for (const auto& e : q->entries(Location::Ready))
            if (auto p = parse_payload(e.payload); p && p->first == job)
                q->bury(e.id);
    ce_.cancel(job);
    return CancelResult::Cancelled;
}

// ---------------------------------------------------------------------------
// Handlers

Services::Outcome Services::run_handler(const StationConfig& st, const JobId& job, const std::string& record,
                                        unsigned retry)
{
    if (fault(cfg_.faults.slow_probability, job, st.name, retry, 1))
        std::this_thread::sleep_for(cfg_.faults.slow_delay);
    if (fault(cfg_.faults.handler_failure, job, st.name, retry, 2))
        throw HandlerFailure("injected handler failure");
    switch (st.kind) {
    case HandlerKind::Accept: return accept(job);
    case HandlerKind::Match: return match(job, retry);
    case HandlerKind::Submit: return submit_to_ce(job, record, retry);
    case HandlerKind::Monitor: return monitor(job, retry);
    }
    throw HandlerFailure("no handler");
}

Services::Outcome Services::accept(const JobId& job)
{
    Outcome out;
    jdl::Ad ad = jdl::parse_ad(lb_.job_ad_text(job), jdl::AdRole::Job);
    const jdl::Expr* exe = ad.find("Executable");
    jdl::Value v = exe ? jdl::evaluate(*exe, ad, jdl::Ad{}) : jdl::Value::undefined();
    if (!v.is_string() || v.as_string().empty()) {
        out.kind = Outcome::Finish;
        out.twice(EventKind::Aborted, "invalid job: Executable must be a non-empty string", "accept", "guardian",
                  terminal_seq(EventKind::Aborted));
        return out;
    }
    out.kind = Outcome::Forward;
    return out;
}

Services::Outcome Services::match(const JobId& job, unsigned retry)
{
    auto loaded = snapshots_->get(cfg_.resolve(cfg_.broker.snapshot), cfg_.resolve(cfg_.broker.catalog),
                                  cfg_.broker.default_ttl);
    jdl::Ad ad = jdl::parse_ad(lb_.job_ad_text(job), jdl::AdRole::Job);
    broker::MatchResult r;
    try {
        r = broker::match_job(job, ad, *loaded.snapshot, *loaded.catalog, cfg_.broker.policy, now());
    } catch (const broker::StaleSnapshot& e) {
        throw HandlerFailure(e.what());
    }
    Outcome out;
    if (r.chosen) {
        out.kind = Outcome::Forward;
        out.record = *r.chosen;
        out.twice(EventKind::Matched, *r.chosen, "match", "broker", step_seq(retry, EventKind::Matched));
    } else {
        out.kind = Outcome::Finish;
        out.twice(EventKind::Aborted, "no-match: " + r.reason, "match", "broker", terminal_seq(EventKind::Aborted));
    }
    return out;
}

Services::Outcome Services::submit_to_ce(const JobId& job, const std::string& resource, unsigned retry)
{
    if (resource.empty())
        throw HandlerFailure("submit request carries no resource");
    jdl::Ad ad = jdl::parse_ad(lb_.job_ad_text(job), jdl::AdRole::Job);
    CeStub::Job spec;
    spec.resource = resource;
    spec.submitted = now();
    auto num = [&](const char* name) -> std::optional<jdl::Value> {
        const jdl::Expr* e = ad.find(name);
        if (!e)
            return std::nullopt;
        auto v = jdl::evaluate(*e, ad, jdl::Ad{});
        return v.is_number() ? std::optional(v) : std::nullopt;
    };
    if (auto rt = num("RunTime"))
        spec.runtime = std::chrono::milliseconds{static_cast<long long>(std::max(0.0, rt->as_number()) * 1000)};
    if (auto ex = num("ExitCode"))
        spec.exit_code = static_cast<int>(ex->as_number());
    spec.lost = fault(cfg_.faults.ce_loss, job, "ce", retry, 3);
    ce_.dispatch(job, spec);

    Outcome out;
    out.kind = Outcome::Forward;
    out.record = resource;
    out.twice(EventKind::Transferred, resource, "submit", "ce", step_seq(retry, EventKind::Transferred));
    return out;
}

void Services::add_job_ward(const JobId& job)
{
    if (registry_.get(job.str()))
        return;
    GuardianRecord r;
    r.ward = job.str();
    r.kind = WardKind::Job;
    r.guardian = supervisor_id_;
    r.last_heartbeat = now();
    r.action = RecoveryAction::AbortJob;
    r.threshold = cfg_.supervisor.job_stale;
    r.detail = "monitor";
    registry_.add(std::move(r));
}

Services::Outcome Services::monitor(const JobId& job, unsigned retry)
{
    Outcome out;
    add_job_ward(job);
    auto p = ce_.poll(job);
    switch (p.status) {
    case CeStub::Status::Running:
        registry_.heartbeat(job.str());
        out.kind = Outcome::Defer;
        out.twice(EventKind::Running, "", "monitor", "ce", step_seq(retry, EventKind::Running));
        return out;
    case CeStub::Status::Done:
        registry_.remove(job.str());
        out.kind = Outcome::Finish;
        out.twice(EventKind::Running, "", "monitor", "ce", step_seq(retry, EventKind::Running));
        out.twice(EventKind::Done, std::to_string(p.exit_code), "monitor", "ce", terminal_seq(EventKind::Done));
        return out;
    case CeStub::Status::Lost:
    case CeStub::Status::Unknown:
        // No news; the job guardian aborts the job once it has been silent too long.
        out.kind = Outcome::Defer;
        return out;
    }
    return out;
}

// ---------------------------------------------------------------------------
// The station step

StepResult Services::process_one(std::string_view station, const std::string& worker_id)
{
    const StationConfig& st = cfg_.station(station);
    spool::Queue& in = queue(st.input_queue);

    std::string why;
    auto request_slot = limits_.acquire(Resource::Request, &why);
    if (!request_slot) {
        log_.write(worker_id, st.name, "", "admit", why);
        return StepResult::Throttled;
    }
    auto lease_slot = limits_.acquire(Resource::Lease, &why);
    if (!lease_slot) {
        log_.write(worker_id, st.name, "", "admit", why);
        return StepResult::Throttled;
    }

    auto got = in.dequeue(worker_id);
    if (!got)
        return StepResult::Idle;
    const spool::SpoolEntry& entry = got->first;
    const spool::Lease& lease = got->second;
    const unsigned retry = entry.retry_count;

    std::string lease_ward = st.input_queue + "/" + entry.id;
    registry_.add({lease_ward, WardKind::Lease, supervisor_id_, now(), RecoveryAction::ReclaimLease,
                   cfg_.heartbeat_threshold(), st.input_queue, false});
    kill_point("station.after_dequeue");

    auto finish = [&](StepResult r, std::string_view action, std::string_view outcome) {
        registry_.remove(lease_ward);
        log_.write(worker_id, st.name, entry.id, action, outcome);
        return r;
    };
    auto nack = [&](const JobId* job, const std::string& reason, StepResult as) {
        spool::NackOutcome n;
        try {
            n = in.nack(lease);
        } catch (const spool::StaleLease&) {
            return finish(StepResult::Stale, "nack", "stale-lease");
        }
        kill_point("station.after_nack");
        if (n == spool::NackOutcome::DeadLettered && job) {
            std::string arg = "retries exhausted at " + st.name + ": " + reason;
            emit(*job, EventKind::Aborted, arg, st.name, terminal_seq(EventKind::Aborted));
            emit(*job, EventKind::Aborted, arg, "guardian", terminal_seq(EventKind::Aborted));
            return finish(StepResult::DeadLettered, "dead-letter", reason);
        }
        return finish(as, "nack", reason);
    };

    auto payload = parse_payload(entry.payload);
    if (!payload)
        return nack(nullptr, "malformed payload", StepResult::Failed);
    const JobId& job = payload->first;
    if (!lb_.exists(job))
        return nack(nullptr, "unknown job " + job.str(), StepResult::Failed);

    auto state = lb_.job_state(job);
    if (lb::is_terminal(state.state)) {
        if (st.kind == HandlerKind::Monitor)
            ce_.cancel(job);
        registry_.remove(job.str());
        try {
            in.ack(lease);
        } catch (const spool::StaleLease&) {
            return finish(StepResult::Stale, "ack", "stale-lease");
        }
        return finish(StepResult::Skipped, "skip", lb::state_name(state.state));
    }

    emit(job, EventKind::Dequeued, st.name, st.name, step_seq(retry, EventKind::Dequeued));
    kill_point("station.after_dequeued_event");

    Outcome out;
    auto t0 = std::chrono::steady_clock::now();
    try {
        out = run_handler(st, job, payload->second, retry);
    } catch (const StorageError&) {
        throw;
    } catch (const std::exception& e) {
        out = Outcome{};
        out.kind = Outcome::Fail;
        out.reason = e.what();
    }
    auto elapsed = std::chrono::steady_clock::now() - t0;
    kill_point("station.after_handler");

    if (elapsed > st.handler_timeout) {
        emit(job, EventKind::Warning, "handler timeout at " + st.name + " after " + ms_text(elapsed), st.name,
             step_seq(retry, EventKind::Warning));
        return nack(&job, "timeout after " + ms_text(elapsed), StepResult::TimedOut);
    }

    switch (out.kind) {
    case Outcome::Fail:
        emit(job, EventKind::Warning, st.name + ": " + out.reason, st.name, step_seq(retry, EventKind::Warning));
        return nack(&job, out.reason, StepResult::Failed);

    case Outcome::Defer:
        for (const auto& e : out.events)
            emit(job, e.kind, e.arg, e.source, e.seq);
        try {
            in.release(lease);
        } catch (const spool::StaleLease&) {
            return finish(StepResult::Stale, "release", "stale-lease");
        }
        return finish(StepResult::Deferred, "release", "not-ready");

    case Outcome::Finish:
    case Outcome::Forward:
        break;
    }

    for (const auto& e : out.events)
        emit(job, e.kind, e.arg, e.source, e.seq);
    kill_point("station.after_events");

    if (out.kind == Outcome::Forward) {
        const auto& next_name = *st.output_queue;
        try {
            queue(next_name).enqueue(make_payload(job, out.record));
        } catch (const spool::QueueFull&) {
            try {
                in.release(lease);
            } catch (const spool::StaleLease&) {
                return finish(StepResult::Stale, "release", "stale-lease");
            }
            return finish(StepResult::Backpressure, "release", "downstream-full");
        }
        kill_point("station.after_forward");
        auto next = cfg_.station_index(next_name);
        emit(job, EventKind::Enqueued, cfg_.stations[next ? *next : 0].name, st.name,
             step_seq(retry, EventKind::Enqueued));
        kill_point("station.before_ack");
    }

    try {
        in.ack(lease);
    } catch (const spool::StaleLease&) {
        return finish(StepResult::Stale, "ack", "stale-lease");
    }
    kill_point("station.after_ack");
    return out.kind == Outcome::Forward ? finish(StepResult::Forwarded, "forward", *st.output_queue)
                                        : finish(StepResult::Finished, "finish", "ok");
}

std::size_t Services::drain(std::uint64_t seed, std::size_t max_rounds)
{
    std::vector<std::size_t> order(cfg_.stations.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::optional<Rng> rng;
    if (seed)
        rng.emplace(seed);
    std::size_t handled = 0;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        if (rng)
            std::shuffle(order.begin(), order.end(), *rng);
        bool progress = false;
        for (auto i : order) {
            const auto& st = cfg_.stations[i];
            auto r = process_one(st.name, "drain-" + st.name);
            if (r != StepResult::Idle && r != StepResult::Throttled && r != StepResult::Deferred &&
                r != StepResult::Backpressure) {
                progress = true;
                ++handled;
            }
        }
        if (!progress)
            break;
    }
    return handled;
}

// ---------------------------------------------------------------------------
// Recovery and conservation

namespace {

struct Place {
    std::size_t station;
    spool::Queue* queue;
    std::string entry;
    Location where;
};

} // namespace

PipelineRecoveryReport Services::recover_all()
{
    if (running_)
        throw std::logic_error("recover_all needs the services stopped");
    PipelineRecoveryReport rep;
    for (auto& [name, q] : queues_)
        rep.spool += q->recover({.reclaim_all_leases = true});
    rep.lb_reindexed = lb_.recover().reindexed;

    std::map<JobId, std::vector<Place>> live, dead;
    for (std::size_t i = 0; i < cfg_.stations.size(); ++i) {
        auto& q = queue(cfg_.stations[i].input_queue);
        for (auto where : {Location::Ready, Location::Dead}) {
            for (const auto& e : q.entries(where)) {
                auto p = parse_payload(e.payload);
                if (!p || !lb_.exists(p->first)) {
                    if (where == Location::Ready && q.bury(e.id))
                        ++rep.orphans_buried;
                    continue;
                }
                (where == Location::Ready ? live : dead)[p->first].push_back({i, &q, e.id, where});
            }
        }
    }

    for (const auto& job : lb_.jobs()) {
        auto state = lb_.job_state(job);
        auto& places = live[job];
        if (lb::is_terminal(state.state)) {
            for (auto& p : places)
                rep.terminal_buried += p.queue->bury(p.entry);
            continue;
        }
        if (places.size() > 1) {
            // Keep the furthest-along copy; the others are replays of earlier steps.
            auto keep = std::max_element(places.begin(), places.end(), [](const Place& a, const Place& b) {
                return a.station != b.station ? a.station < b.station : a.entry < b.entry;
            });
            for (auto it = places.begin(); it != places.end(); ++it)
                if (it != keep)
                    rep.duplicates_buried += it->queue->bury(it->entry);
            continue;
        }
        if (places.size() == 1)
            continue;

        if (dead.count(job)) {
            emit(job, EventKind::Aborted, "retries exhausted (recovered)", "recover", terminal_seq(EventKind::Aborted));
            ++rep.aborted;
            continue;
        }

        // Live but queued nowhere: put it back where its history says it stopped.
        std::size_t at = 0;
        std::string record;
        switch (state.state) {
        case lb::State::Submitted:
        case lb::State::Waiting: {
            for (const auto& e : lb_.job_events(job))
                if (e.kind == EventKind::Enqueued)
                    if (auto idx = cfg_.station_index(e.arg))
                        at = std::max(at, *idx);
            at = std::min<std::size_t>(at, 1);
            break;
        }
        case lb::State::Matched:
            at = 2;
            record = state.resource.value_or("");
            break;
        default:
            at = 3;
            record = state.resource.value_or("");
            for (const auto& e : lb_.job_events(job))
                if (e.kind == EventKind::Transferred)
                    record = e.arg;
            break;
        }
        at = std::min(at, cfg_.stations.size() - 1);
        try {
            queue(cfg_.stations[at].input_queue).enqueue(make_payload(job, record));
            ++rep.requeued;
        } catch (const spool::QueueFull&) {
            emit(job, EventKind::Aborted, "queue-full on recovery", "recover", terminal_seq(EventKind::Aborted));
            ++rep.aborted;
        }
    }

    registry_.clear();
    for (const auto& e : queue(cfg_.stations.back().input_queue).entries(Location::Ready))
        if (auto p = parse_payload(e.payload))
            add_job_ward(p->first);
    log_.write(supervisor_id_, "-", "-", "recover", rep.summary());
    return rep;
}

std::vector<std::string> Services::conservation_violations()
{
    std::map<JobId, int> live;
    std::vector<std::string> out;
    for (auto& [name, q] : queues_) {
        for (auto where : {Location::Ready, Location::Inflight}) {
            for (const auto& e : q->entries(where)) {
                auto p = parse_payload(e.payload);
                if (!p || !lb_.exists(p->first)) {
                    out.push_back("entry " + name + "/" + e.id + " names no registered job");
                    continue;
                }
                ++live[p->first];
            }
        }
    }
    for (const auto& job : lb_.jobs()) {
        bool terminal = lb::is_terminal(lb_.job_state(job).state);
        int n = live.count(job) ? live[job] : 0;
        if (terminal && n != 0)
            out.push_back(job.str() + " is terminal but has " + std::to_string(n) + " live entries");
        if (!terminal && n != 1)
            out.push_back(job.str() + " is live with " + std::to_string(n) + " entries");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Workers and supervision

bool Services::spawn_worker(const StationConfig& st)
{
    std::string why;
    auto slot = limits_.acquire(Resource::Worker, &why);
    if (!slot) {
        log_.write(supervisor_id_, st.name, "-", "spawn", why);
        return false;
    }
    auto w = std::make_unique<Worker>();
    w->id = st.name + "-w" + std::to_string(next_worker_.fetch_add(1));
    w->station = st.name;
    registry_.add({w->id, WardKind::Worker, supervisor_id_, now(), RecoveryAction::RestartWorker,
                   cfg_.heartbeat_threshold(), st.name, false});
    Worker& ref = *w;
    {
        std::lock_guard lk(workers_mu_);
        workers_.emplace(w->id, std::move(w));
    }
    ref.thread = std::thread([this, &ref, s = std::move(*slot)]() mutable { worker_main(ref, std::move(s)); });
    log_.write(ref.id, st.name, "-", "spawn", "ok");
    return true;
}

void Services::worker_main(Worker& w, Limits::Slot slot)
{
    w.doom.bind_current_thread();
    const StationConfig& st = cfg_.station(w.station);
    std::size_t handled = 0;
    try {
        while (!stopping_ && handled < st.max_requests) {
            registry_.heartbeat(w.id);
            kill_point("worker.loop");
            auto r = process_one(st.name, w.id);
            if (r != StepResult::Idle && r != StepResult::Throttled)
                ++handled;
            if (r == StepResult::Idle || r == StepResult::Throttled || r == StepResult::Deferred) {
                std::unique_lock lk(stop_mu_);
                stop_cv_.wait_for(lk, cfg_.supervisor.idle_poll, [&] { return stopping_.load(); });
            }
        }
        registry_.remove(w.id);
        log_.write(w.id, st.name, "-", "exit", std::to_string(handled) + " requests");
    } catch (const SimulatedCrash& c) {
        log_.write(w.id, st.name, "-", "crash", c.point);
    } catch (const std::exception& e) {
        log_.write(w.id, st.name, "-", "crash", e.what());
    }
    slot.reset();
    w.finished = true;
}

void Services::reap_workers()
{
    std::vector<std::unique_ptr<Worker>> done;
    {
        std::lock_guard lk(workers_mu_);
        for (auto it = workers_.begin(); it != workers_.end();) {
            if (it->second->finished) {
                done.push_back(std::move(it->second));
                it = workers_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& w : done)
        if (w->thread.joinable())
            w->thread.join();
}

ActionTaken Services::execute(const GuardianRecord& rec)
{
    ActionTaken a{rec.ward, rec.action, false, {}};
    switch (rec.action) {
    case RecoveryAction::RestartWorker: {
        {
            std::lock_guard lk(workers_mu_);
            auto it = workers_.find(rec.ward);
            if (it != workers_.end() && !it->second->finished)
                it->second->doom.trigger(); // hung: make it die at its next kill point
        }
        if (stopping_) {
            registry_.remove(rec.ward);
            a.done = true;
            a.note = "stopping";
            break;
        }
        if (spawn_worker(cfg_.station(rec.detail))) {
            registry_.remove(rec.ward);
            ++restarts_;
            a.done = true;
            a.note = "replaced";
        } else {
            a.note = "spawn refused";
        }
        break;
    }
    case RecoveryAction::ReclaimLease: {
        auto slash = rec.ward.find('/');
        auto& q = queue(rec.ward.substr(0, slash));
        std::string id = rec.ward.substr(slash + 1);
        bool inflight = false;
        for (const auto& e : q.entries(Location::Inflight))
            inflight = inflight || e.id == id;
        if (!inflight) {
            registry_.remove(rec.ward);
            a.done = true;
            a.note = "already settled";
        } else if (q.reclaim(id)) {
            registry_.remove(rec.ward);
            a.done = true;
            a.note = "reclaimed";
        } else {
            a.note = "lease not yet expired";
        }
        break;
    }
    case RecoveryAction::AbortJob: {
        auto job = JobId::parse(rec.ward);
        emit(job, EventKind::Aborted, "guardian: no progress for " + ms_text(rec.threshold), "guardian",
             terminal_seq(EventKind::Aborted));
        ce_.cancel(job);
        registry_.remove(rec.ward);
        a.done = true;
        a.note = "aborted";
        break;
    }
    }
    log_.write(supervisor_id_, rec.detail, rec.ward, action_name(rec.action), a.done ? a.note : "retry: " + a.note);
    return a;
}

std::vector<ActionTaken> Services::supervise_once()
{
    reap_workers();
    auto actions = supervise(registry_, now(), [this](const GuardianRecord& r) { return execute(r); });
    if (!stopping_) {
        for (const auto& st : cfg_.stations) {
            std::size_t have = registry_.count(WardKind::Worker, st.name);
            while (have < st.pool_size && spawn_worker(st))
                ++have;
        }
    }
    for (auto& [name, q] : queues_)
        q->expire_leases();
    return actions;
}

void Services::supervisor_main()
{
    while (!stopping_) {
        try {
            supervise_once();
        } catch (const std::exception& e) {
            log_.write(supervisor_id_, "-", "-", "supervise", std::string("error: ") + e.what());
        }
        std::unique_lock lk(stop_mu_);
        stop_cv_.wait_for(lk, cfg_.supervisor.interval, [&] { return stopping_.load(); });
    }
}

void Services::start()
{
    if (running_.exchange(true))
        return;
    stopping_ = false;
    supervise_once();
    supervisor_ = std::thread([this] { supervisor_main(); });
}

void Services::stop()
{
    {
        std::lock_guard lk(stop_mu_);
        stopping_ = true;
    }
    stop_cv_.notify_all();
    if (supervisor_.joinable())
        supervisor_.join();
    std::vector<std::unique_ptr<Worker>> all;
    {
        std::lock_guard lk(workers_mu_);
        for (auto& [_, w] : workers_)
            all.push_back(std::move(w));
        workers_.clear();
    }
    for (auto& w : all)
        if (w->thread.joinable())
            w->thread.join();
    for (const auto& r : registry_.records())
        if (r.kind == WardKind::Worker)
            registry_.remove(r.ward);
    running_ = false;
}

bool Services::kill_worker(const std::string& worker_id)
{
    std::lock_guard lk(workers_mu_);
    auto it = workers_.find(worker_id);
    if (it == workers_.end() || it->second->finished)
        return false;
    it->second->doom.trigger();
    return true;
}

std::vector<std::string> Services::live_workers(std::string_view station) const
{
    std::lock_guard lk(workers_mu_);
    std::vector<std::string> out;
    for (const auto& [id, w] : workers_)
        if (!w->finished && (station.empty() || w->station == station))
            out.push_back(id);
    return out;
}

bool Services::wait_idle(std::chrono::milliseconds timeout)
{
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        bool idle = true;
        for (auto& [_, q] : queues_)
            idle = idle && q->count(Location::Ready) == 0 && q->count(Location::Inflight) == 0;
        if (idle)
            return true;
        if (std::chrono::steady_clock::now() >= deadline)
            return false;
        std::this_thread::sleep_for(std::chrono::milliseconds{10});
    }
}

} // namespace wms::pipeline
