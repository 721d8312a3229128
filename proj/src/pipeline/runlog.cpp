#include "wms/pipeline/runlog.hpp"

#include "wms/util/fs.hpp"
#include "wms/util/strings.hpp"
#include "wms/util/time.hpp"

#include <fcntl.h>
#include <unistd.h>

namespace wms::pipeline {

namespace {

// Fields never contain '|' or newlines; anything that would is replaced.
std::string field(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        if (c == '|' || c == '\n' || c == '\r')
            c = '/';
    return out.empty() ? "-" : out;
}

} // namespace

RunLog::RunLog(std::filesystem::path path) : path_(std::move(path))
{
    if (path_.empty())
        return;
    fs::ensure_dir(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0)
        fs::throw_errno("open", path_);
}

RunLog::~RunLog()
{
    if (fd_ >= 0)
        ::close(fd_);
}

void RunLog::write(std::string_view worker, std::string_view station, std::string_view entry,
                   std::string_view action, std::string_view outcome)
{
    if (fd_ < 0)
        return;
    std::string line = format_rfc3339(now()) + "|" + field(worker) + "|" + field(station) + "|" + field(entry) +
                       "|" + field(action) + "|" + field(outcome) + "\n";
    std::lock_guard lk(mu_);
    // One write per line keeps lines whole under O_APPEND.
    [[maybe_unused]] auto n = ::write(fd_, line.data(), line.size());
}

std::optional<RunLogLine> parse_run_log_line(std::string_view line)
{
    auto parts = split(line, '|');
    if (parts.size() != 6)
        return std::nullopt;
    return RunLogLine{parts[0], parts[1], parts[2], parts[3], parts[4], parts[5]};
}

std::vector<RunLogLine> read_run_log(const std::filesystem::path& path)
{
    std::vector<RunLogLine> out;
    if (!std::filesystem::exists(path))
        return out;
    for (auto& line : split(fs::read_file(path), '\n'))
        if (auto l = parse_run_log_line(line))
            out.push_back(std::move(*l));
    return out;
}

} // namespace wms::pipeline
