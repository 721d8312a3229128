#include "wms/spool/queue.hpp"

#include "wms/util/killpoint.hpp"
#include "wms/util/random.hpp"
#include "wms/util/strings.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>

#include <sys/stat.h>

namespace wms::spool {

namespace stdfs = std::filesystem;

namespace {

constexpr std::string_view kLeaseSuffix = ".lease";
constexpr std::string_view kCreatedPrefix = "created ";

bool is_digits(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<std::string> lease_owner_id(std::string_view name)
{
    if (name.size() <= kLeaseSuffix.size() || name.substr(name.size() - kLeaseSuffix.size()) != kLeaseSuffix)
        return std::nullopt;
    std::string id(name.substr(0, name.size() - kLeaseSuffix.size()));
    if (id.find('.') != std::string::npos)
        return std::nullopt;
    return id;
}

std::string encode_lease(const Lease& l)
{
    return l.consumer + "|" + format_rfc3339(l.deadline) + "|" + l.token + "\n";
}

std::optional<Lease> decode_lease(const std::string& id, std::string_view text)
{
    if (!text.empty() && text.back() == '\n')
        text.remove_suffix(1);
    auto parts = split(text, '|');
    if (parts.size() != 3)
        return std::nullopt;
    auto deadline = parse_rfc3339(parts[1]);
    if (!deadline)
        return std::nullopt;
    Lease l;
    l.entry_id = id;
    l.consumer = parts[0];
    l.deadline = *deadline;
    l.token = parts[2];
    return l;
}

std::optional<std::string> try_read(const stdfs::path& p)
{
    try {
        return fs::read_file(p);
    } catch (const StorageError&) {
        return std::nullopt;
    }
}

std::optional<TimePoint> change_time(const stdfs::path& p)
{
    struct stat st{};
    if (::stat(p.c_str(), &st) != 0)
        return std::nullopt;
    auto us = static_cast<long long>(st.st_ctim.tv_sec) * 1'000'000 + st.st_ctim.tv_nsec / 1000;
    return TimePoint{std::chrono::microseconds{us}};
}

std::optional<TimePoint> modify_time(const stdfs::path& p)
{
    struct stat st{};
    if (::stat(p.c_str(), &st) != 0)
        return std::nullopt;
    auto us = static_cast<long long>(st.st_mtim.tv_sec) * 1'000'000 + st.st_mtim.tv_nsec / 1000;
    return TimePoint{std::chrono::microseconds{us}};
}

void fill_from_file(SpoolEntry& e, std::string_view t)
{
    auto nl = t.find('\n');
    if (!starts_with(t, kCreatedPrefix) || nl == std::string_view::npos)
        return;
    if (auto c = parse_rfc3339(t.substr(kCreatedPrefix.size(), nl - kCreatedPrefix.size())))
        e.created = *c;
    e.payload = std::string(t.substr(nl + 1));
}

struct Listed {
    std::map<std::string, unsigned> entries; // id -> retries
    std::map<std::string, std::string> leases; // id -> file name
    std::vector<std::string> other;
};

Listed list_dir(const stdfs::path& dir)
{
    Listed out;
    for (auto& name : fs::list_names(dir)) {
        if (auto e = parse_entry_name(name))
            out.entries.emplace(e->id, e->retries);
        else if (auto id = lease_owner_id(name))
            out.leases.emplace(*id, name);
        else
            out.other.push_back(name);
    }
    return out;
}

} // namespace

std::optional<EntryName> parse_entry_name(std::string_view name)
{
    auto dot = name.rfind(".r");
    if (dot == std::string_view::npos || dot == 0)
        return std::nullopt;
    std::string_view id = name.substr(0, dot);
    std::string_view num = name.substr(dot + 2);
    if (id.find('.') != std::string_view::npos || !is_digits(num) || num.size() > 6)
        return std::nullopt;
    EntryName out;
    out.id = std::string(id);
    std::from_chars(num.data(), num.data() + num.size(), out.retries);
    return out;
}

std::string entry_file_name(const std::string& id, unsigned retries)
{
    return id + ".r" + std::to_string(retries);
}

Queue::Queue(QueueConfig cfg) : cfg_(std::move(cfg))
{
    if (cfg_.name.empty() || cfg_.name.find('/') != std::string::npos || cfg_.name[0] == '.')
        throw std::invalid_argument("invalid queue name '" + cfg_.name + "'");
    if (cfg_.capacity == 0)
        throw std::invalid_argument("queue capacity must be positive");
    for (auto loc : {"staging", "ready", "inflight", "dead"})
        fs::ensure_dir(cfg_.dir() / loc);
}

stdfs::path Queue::loc_dir(Location where) const
{
    switch (where) {
    case Location::Ready: return cfg_.dir() / "ready";
    case Location::Inflight: return cfg_.dir() / "inflight";
    case Location::Dead: return cfg_.dir() / "dead";
    }
    return {};
}

std::size_t Queue::depth_unlocked() const
{
    // ready, inflight, ready again: any single move between the two
    // directories is seen by at least one listing, so nothing is missed.
    std::set<std::string> ids;
    auto add = [&](Location loc) {
        for (auto& name : fs::list_names(loc_dir(loc)))
            if (auto e = parse_entry_name(name))
                ids.insert(e->id);
    };
    add(Location::Ready);
    add(Location::Inflight);
    add(Location::Ready);
    return ids.size();
}

std::size_t Queue::depth() const
{
    fs::FileLock lock(cfg_.dir() / ".commit.lock", true);
    return depth_unlocked();
}

std::size_t Queue::count(Location where) const
{
    std::size_t n = 0;
    for (auto& name : fs::list_names(loc_dir(where)))
        if (parse_entry_name(name))
            ++n;
    return n;
}

std::string Queue::allocate_id()
{
    auto path = cfg_.dir() / "counter";
    std::uint64_t last = 0;
    bool ok = false;
    if (auto text = try_read(path)) {
        auto t = trim(*text);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), last);
        ok = ec == std::errc{} && p == t.data() + t.size();
    }
    if (!ok) {
        // Lost or torn counter: continue past every id still on disk.
        last = 0;
        for (auto loc : {"staging", "ready", "inflight", "dead"}) {
            for (auto& name : fs::list_names(cfg_.dir() / loc)) {
                std::uint64_t n = 0;
                auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), n);
                if (ec == std::errc{} && p != name.data())
                    last = std::max(last, n);
            }
        }
    }
    ++last;
    fs::replace_file(path, std::to_string(last) + "\n");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%020llu", static_cast<unsigned long long>(last));
    return std::string(buf) + "-" + random_hex(8);
}

std::string Queue::enqueue(std::string_view payload)
{
    if (payload.size() > cfg_.max_payload)
        throw PayloadTooLarge("payload of " + std::to_string(payload.size()) + " bytes exceeds " +
                              std::to_string(cfg_.max_payload));
    std::string id;
    {
        fs::FileLock lock(cfg_.dir() / ".commit.lock", true);
        if (depth_unlocked() >= cfg_.capacity)
            throw QueueFull(cfg_.name);
        id = allocate_id();
    }
    kill_point("spool.enqueue.after_alloc");

    auto staged = cfg_.dir() / "staging" / id;
    std::string bytes;
    bytes.reserve(payload.size() + 40);
    bytes.append(kCreatedPrefix).append(format_rfc3339(now())).append("\n").append(payload);
    fs::write_new_file(staged, bytes);
    kill_point("spool.enqueue.after_stage");

    {
        fs::FileLock lock(cfg_.dir() / ".commit.lock", true);
        if (depth_unlocked() >= cfg_.capacity) {
            fs::unlink_if_exists(staged);
            throw QueueFull(cfg_.name);
        }
        kill_point("spool.enqueue.before_commit");
        if (!fs::rename_if_exists(staged, loc_dir(Location::Ready) / entry_file_name(id, 0)))
            throw StorageError("staged entry " + id + " vanished before commit");
        fs::fsync_dir(loc_dir(Location::Ready));
    }
    kill_point("spool.enqueue.after_commit");
    return id;
}

std::optional<std::pair<SpoolEntry, Lease>> Queue::dequeue(std::string_view consumer_id)
{
    auto ready = loc_dir(Location::Ready);
    auto inflight = loc_dir(Location::Inflight);
    auto listed = list_dir(ready);
    for (auto& [id, retries] : listed.entries) {
        auto name = entry_file_name(id, retries);
        if (!fs::rename_if_exists(ready / name, inflight / name))
            continue; // another consumer won
        kill_point("spool.dequeue.after_claim");

        auto text = try_read(inflight / name);
        SpoolEntry entry;
        entry.id = id;
        entry.retry_count = retries;
        if (text)
            fill_from_file(entry, *text);

        Lease lease;
        lease.entry_id = id;
        lease.consumer = std::string(consumer_id);
        lease.deadline = now() + std::chrono::duration_cast<std::chrono::microseconds>(cfg_.lease_duration);
        lease.token = random_hex(32);
        lease.retry_count = retries;
        fs::replace_file(inflight / (id + std::string(kLeaseSuffix)), encode_lease(lease));
        kill_point("spool.dequeue.after_lease");
        return std::make_pair(std::move(entry), std::move(lease));
    }
    return std::nullopt;
}

Lease Queue::verify(const Lease& lease) const
{
    auto inflight = loc_dir(Location::Inflight);
    auto text = try_read(inflight / (lease.entry_id + std::string(kLeaseSuffix)));
    if (!text)
        throw StaleLease(lease.entry_id);
    auto current = decode_lease(lease.entry_id, *text);
    if (!current || current->token != lease.token || current->deadline <= now())
        throw StaleLease(lease.entry_id);
    current->retry_count = lease.retry_count;
    return *current;
}

bool Queue::lease_valid(const Lease& lease) const
{
    try {
        verify(lease);
        return true;
    } catch (const StaleLease&) {
        return false;
    }
}

void Queue::ack(const Lease& lease)
{
    fs::FileLock lock(cfg_.dir() / ".lease.lock", true);
    verify(lease);
    auto inflight = loc_dir(Location::Inflight);
    kill_point("spool.ack.before_remove");
    if (!fs::unlink_if_exists(inflight / entry_file_name(lease.entry_id, lease.retry_count)))
        throw StaleLease(lease.entry_id);
    fs::fsync_dir(inflight);
    kill_point("spool.ack.after_remove");
    fs::unlink_if_exists(inflight / (lease.entry_id + std::string(kLeaseSuffix)));
}

NackOutcome Queue::nack(const Lease& lease)
{
    fs::FileLock lock(cfg_.dir() / ".lease.lock", true);
    verify(lease);
    auto inflight = loc_dir(Location::Inflight);
    unsigned next = lease.retry_count + 1;
    bool dead = next > cfg_.max_retries;
    auto target = loc_dir(dead ? Location::Dead : Location::Ready);
    fs::unlink_if_exists(inflight / (lease.entry_id + std::string(kLeaseSuffix)));
    kill_point("spool.nack.after_unlease");
    if (!fs::rename_if_exists(inflight / entry_file_name(lease.entry_id, lease.retry_count),
                              target / entry_file_name(lease.entry_id, next)))
        throw StaleLease(lease.entry_id);
    fs::fsync_dir(target);
    kill_point("spool.nack.after_move");
    return dead ? NackOutcome::DeadLettered : NackOutcome::Requeued;
}

void Queue::release(const Lease& lease)
{
    fs::FileLock lock(cfg_.dir() / ".lease.lock", true);
    verify(lease);
    auto inflight = loc_dir(Location::Inflight);
    auto ready = loc_dir(Location::Ready);
    fs::unlink_if_exists(inflight / (lease.entry_id + std::string(kLeaseSuffix)));
    kill_point("spool.release.after_unlease");
    auto name = entry_file_name(lease.entry_id, lease.retry_count);
    if (!fs::rename_if_exists(inflight / name, ready / name))
        throw StaleLease(lease.entry_id);
    fs::fsync_dir(ready);
}

RecoveryReport Queue::reclaim_pass(bool all_expired)
{
    RecoveryReport report;
    auto inflight = loc_dir(Location::Inflight);
    auto ready = loc_dir(Location::Ready);
    auto t = now();
    auto lease_us = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.lease_duration);
    auto listed = list_dir(inflight);

    for (auto& [id, retries] : listed.entries) {
        auto name = entry_file_name(id, retries);
        bool expired = all_expired;
        auto lease_it = listed.leases.find(id);
        if (!expired) {
            if (lease_it != listed.leases.end()) {
                auto text = try_read(inflight / lease_it->second);
                auto l = text ? decode_lease(id, *text) : std::nullopt;
                // An unreadable lease is torn; treat it like no lease at all.
                if (l)
                    expired = l->deadline <= t;
                else if (auto c = change_time(inflight / name))
                    expired = *c + lease_us <= t;
            } else if (auto c = change_time(inflight / name)) {
                // Claimed but never leased (consumer died in between).
                expired = *c + lease_us <= t;
            }
        }
        if (!expired)
            continue;
        if (lease_it != listed.leases.end()) {
            if (fs::unlink_if_exists(inflight / lease_it->second))
                ++report.expired_leases;
            listed.leases.erase(lease_it);
        }
        kill_point("spool.reclaim.after_unlease");
        if (fs::rename_if_exists(inflight / name, ready / name)) {
            ++report.reclaimed;
            fs::fsync_dir(ready);
        }
    }

    // Leases whose entry is gone (a consumer died between its two ack steps).
    for (auto& [id, file] : listed.leases) {
        if (listed.entries.count(id))
            continue;
        auto text = try_read(inflight / file);
        auto l = text ? decode_lease(id, *text) : std::nullopt;
        if (all_expired || !l || l->deadline <= t)
            if (fs::unlink_if_exists(inflight / file))
                ++report.expired_leases;
    }
    return report;
}

RecoveryReport Queue::expire_leases()
{
    fs::FileLock lock(cfg_.dir() / ".lease.lock", true);
    return reclaim_pass(false);
}

bool Queue::reclaim(const std::string& entry_id)
{
    fs::FileLock lock(cfg_.dir() / ".lease.lock", true);
    auto inflight = loc_dir(Location::Inflight);
    auto listed = list_dir(inflight);
    auto it = listed.entries.find(entry_id);
    if (it == listed.entries.end())
        return false;
    auto t = now();
    auto name = entry_file_name(entry_id, it->second);
    auto lease_path = inflight / (entry_id + std::string(kLeaseSuffix));
    auto text = try_read(lease_path);
    auto l = text ? decode_lease(entry_id, *text) : std::nullopt;
    if (l && l->deadline > t)
        return false;
    if (!l) {
        auto c = change_time(inflight / name);
        if (c && *c + std::chrono::duration_cast<std::chrono::microseconds>(cfg_.lease_duration) > t)
            return false;
    }
    fs::unlink_if_exists(lease_path);
    bool moved = fs::rename_if_exists(inflight / name, loc_dir(Location::Ready) / name);
    if (moved)
        fs::fsync_dir(loc_dir(Location::Ready));
    return moved;
}

RecoveryReport Queue::recover(RecoverOptions opts)
{
    fs::FileLock lock(cfg_.dir() / ".lease.lock", true);
    RecoveryReport report = reclaim_pass(opts.reclaim_all_leases);

    auto t = now();
    auto ttl = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.stage_ttl);
    auto stale = [&](const stdfs::path& p) {
        if (opts.reclaim_all_leases)
            return true;
        auto m = modify_time(p);
        return m && *m + ttl <= t;
    };

    // Staged writes that were never committed, and temporaries of
    // interrupted lease or counter writes.
    auto staging = cfg_.dir() / "staging";
    for (auto& name : fs::list_names(staging))
        if (stale(staging / name) && fs::unlink_if_exists(staging / name))
            ++report.purged_staging;
    for (auto& name : list_dir(loc_dir(Location::Inflight)).other)
        if (stale(loc_dir(Location::Inflight) / name))
            fs::unlink_if_exists(loc_dir(Location::Inflight) / name);
    for (auto& name : fs::list_names(cfg_.dir()))
        if (starts_with(name, "counter.tmp-") && stale(cfg_.dir() / name))
            fs::unlink_if_exists(cfg_.dir() / name);
    return report;
}

bool Queue::bury(const std::string& entry_id)
{
    fs::FileLock lock(cfg_.dir() / ".lease.lock", true);
    auto ready = loc_dir(Location::Ready);
    auto listed = list_dir(ready);
    auto it = listed.entries.find(entry_id);
    if (it == listed.entries.end())
        return false;
    auto name = entry_file_name(entry_id, it->second);
    auto dead = loc_dir(Location::Dead);
    bool moved = fs::rename_if_exists(ready / name, dead / name);
    if (moved)
        fs::fsync_dir(dead);
    return moved;
}

std::vector<SpoolEntry> Queue::entries(Location where) const
{
    auto dir = loc_dir(where);
    std::vector<SpoolEntry> out;
    for (auto& [id, retries] : list_dir(dir).entries) {
        auto text = try_read(dir / entry_file_name(id, retries));
        if (!text)
            continue;
        SpoolEntry e;
        e.id = id;
        e.retry_count = retries;
        fill_from_file(e, *text);
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace wms::spool
