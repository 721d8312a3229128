#include "wms/lb/logbook.hpp"

#include "wms/jdl/parser.hpp"
#include "wms/util/crc32.hpp"
#include "wms/util/killpoint.hpp"
#include "wms/util/strings.hpp"

#include <algorithm>
#include <cerrno>
#include <set>

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

namespace wms::lb {

namespace stdfs = std::filesystem;

namespace {

constexpr const char* kAdFile = "ad.jdl";
constexpr const char* kEventsFile = "events";
constexpr const char* kIndexFile = "index";
constexpr const char* kLbSource = "lb";

class LockedAppender {
public:
    LockedAppender(const stdfs::path& path, bool create)
        : path_(path)
    {
        int flags = O_RDWR | O_APPEND | O_CLOEXEC | (create ? O_CREAT : 0);
        fd_ = ::open(path.c_str(), flags, 0644);
        if (fd_ < 0) {
            if (errno == ENOENT)
                return;
            fs::throw_errno("open", path);
        }
        while (::flock(fd_, LOCK_EX) != 0) {
            if (errno != EINTR)
                fs::throw_errno("flock", path);
        }
    }
    LockedAppender(const LockedAppender&) = delete;
    LockedAppender& operator=(const LockedAppender&) = delete;
    ~LockedAppender()
    {
        if (fd_ >= 0)
            ::close(fd_);
    }

    bool is_open() const { return fd_ >= 0; }

    std::string contents() const
    {
        std::string out;
        char buf[8192];
        off_t off = 0;
        for (;;) {
            ssize_t n = ::pread(fd_, buf, sizeof buf, off);
            if (n < 0) {
                if (errno == EINTR)
                    continue;
                fs::throw_errno("read", path_);
            }
            if (n == 0)
                break;
            out.append(buf, static_cast<std::size_t>(n));
            off += n;
        }
        return out;
    }

    void append(std::string_view bytes)
    {
        while (!bytes.empty()) {
            ssize_t n = ::write(fd_, bytes.data(), bytes.size());
            if (n < 0) {
                if (errno == EINTR)
                    continue;
                fs::throw_errno("append", path_);
            }
            bytes.remove_prefix(static_cast<std::size_t>(n));
        }
        fs::fsync_fd(fd_, path_);
    }

private:
    stdfs::path path_;
    int fd_ = -1;
};

template <class F>
void for_each_line(std::string_view text, F&& f)
{
    while (!text.empty()) {
        auto nl = text.find('\n');
        if (nl == std::string_view::npos)
            return; // torn final line
        f(text.substr(0, nl));
        text.remove_prefix(nl + 1);
    }
}

} // namespace

Event make_event(const JobId& job, EventKind kind, std::string arg, std::string source,
                 std::uint64_t seq)
{
    return Event{job, kind, std::move(arg), std::move(source), seq, now()};
}

LogBook::LogBook(stdfs::path root) : root_(std::move(root))
{
    fs::ensure_dir(root_ / "jobs");
}

stdfs::path LogBook::job_dir(const JobId& job) const
{
    std::string h = crc32_hex(job.str());
    return root_ / "jobs" / h.substr(0, 2) / h.substr(2, 2) / job.str();
}

stdfs::path LogBook::events_path(const JobId& job) const { return job_dir(job) / kEventsFile; }

JobId LogBook::register_job(std::string_view jdl_text)
{
    try {
        jdl::parse_ad(jdl_text, jdl::AdRole::Job);
    } catch (const jdl::SyntaxError& e) {
        throw InvalidAd(e.what());
    }

    JobId id;
    stdfs::path dir;
    for (;;) {
        id = JobId::mint();
        dir = job_dir(id);
        fs::ensure_dir(dir.parent_path());
        if (::mkdir(dir.c_str(), 0755) == 0)
            break;
        if (errno != EEXIST)
            fs::throw_errno("mkdir", dir);
    }
    fs::fsync_dir(dir.parent_path());
    fs::write_new_file(dir / kAdFile, jdl_text);
    kill_point("lb.register.after_ad");
    {
        LockedAppender out(dir / kEventsFile, true);
        out.append(encode_line(make_event(id, EventKind::Registered, "", kLbSource, 1)));
    }
    fs::fsync_dir(dir);
    kill_point("lb.register.after_event");
    append_index(id);
    return id;
}

void LogBook::append_index(const JobId& job)
{
    auto rel = stdfs::relative(job_dir(job) / kAdFile, root_);
    LockedAppender out(root_ / kIndexFile, true);
    std::string existing = out.contents();
    // A torn final line from a crash is terminated before appending.
    std::string line = job.str() + " " + rel.string() + "\n";
    if (!existing.empty() && existing.back() != '\n')
        line = "\n" + line;
    out.append(line);
}

bool LogBook::record_event(const Event& e)
{
    LockedAppender out(events_path(e.job), false);
    if (!out.is_open())
        throw UnknownJob(e.job.str());
    std::string existing = out.contents();
    bool registered = false;
    bool duplicate = false;
    for_each_line(existing, [&](std::string_view line) {
        if (auto stored = decode_line(line)) {
            registered |= stored->kind == EventKind::Registered;
            duplicate |= stored->same_identity(e);
        }
    });
    if (!registered)
        throw UnknownJob(e.job.str());
    if (duplicate)
        return false;
    kill_point("lb.record.before_append");
    std::string line = encode_line(e);
    if (!existing.empty() && existing.back() != '\n')
        line = "\n" + line;
    out.append(line);
    return true;
}

std::vector<Event> LogBook::read_events(const stdfs::path& path) const
{
    std::string text;
    try {
        text = fs::read_file(path);
    } catch (const StorageError&) {
        if (!stdfs::exists(path))
            return {};
        throw;
    }
    std::vector<Event> out;
    for_each_line(text, [&](std::string_view line) {
        auto e = decode_line(line);
        if (!e)
            return;
        bool dup = std::any_of(out.begin(), out.end(),
                               [&](const Event& seen) { return seen.same_identity(*e); });
        if (!dup)
            out.push_back(std::move(*e));
    });
    return out;
}

bool LogBook::exists(const JobId& job) const
{
    auto events = read_events(events_path(job));
    return std::any_of(events.begin(), events.end(),
                       [](const Event& e) { return e.kind == EventKind::Registered; });
}

std::vector<Event> LogBook::job_events(const JobId& job) const
{
    auto events = read_events(events_path(job));
    bool registered = std::any_of(events.begin(), events.end(),
                                  [](const Event& e) { return e.kind == EventKind::Registered; });
    if (!registered)
        throw UnknownJob(job.str());
    return events;
}

JobState LogBook::job_state(const JobId& job) const
{
    auto events = job_events(job);
    return derive_state(events);
}

std::string LogBook::job_ad_text(const JobId& job) const
{
    if (!exists(job))
        throw UnknownJob(job.str());
    return fs::read_file(job_dir(job) / kAdFile);
}

std::vector<JobId> LogBook::jobs() const
{
    std::string text;
    auto index = root_ / kIndexFile;
    if (!stdfs::exists(index))
        return {};
    text = fs::read_file(index);
    std::vector<JobId> out;
    std::set<JobId> seen;
    for_each_line(text, [&](std::string_view line) {
        auto sp = line.find(' ');
        auto id_text = line.substr(0, sp);
        if (!JobId::valid(id_text))
            return;
        auto id = JobId::parse(id_text);
        if (seen.insert(id).second && exists(id))
            out.push_back(id);
    });
    return out;
}

LbRecoveryReport LogBook::recover()
{
    LbRecoveryReport report;
    std::set<std::string> indexed;
    auto index = root_ / kIndexFile;
    if (stdfs::exists(index)) {
        for_each_line(fs::read_file(index), [&](std::string_view line) {
            indexed.emplace(line.substr(0, line.find(' ')));
        });
    }
    std::vector<JobId> missing;
    for (const auto& h1 : stdfs::directory_iterator(root_ / "jobs")) {
        if (!h1.is_directory())
            continue;
        for (const auto& h2 : stdfs::directory_iterator(h1.path())) {
            if (!h2.is_directory())
                continue;
            for (const auto& dir : stdfs::directory_iterator(h2.path())) {
                auto name = dir.path().filename().string();
                if (!JobId::valid(name) || indexed.count(name))
                    continue;
                auto id = JobId::parse(name);
                if (exists(id))
                    missing.push_back(id);
            }
        }
    }
    std::sort(missing.begin(), missing.end());
    for (const auto& id : missing) {
        append_index(id);
        ++report.reindexed;
    }
    return report;
}

} // namespace wms::lb
