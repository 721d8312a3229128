#include "wms/pipeline/ce_stub.hpp"

#include "wms/util/fs.hpp"
#include "wms/util/strings.hpp"

#include <charconv>
#include <map>

namespace wms::pipeline {

namespace {

std::map<std::string, std::string> read_fields(std::string_view text)
{
    std::map<std::string, std::string> out;
    for (auto& line : split(text, '\n')) {
        auto eq = line.find('=');
        if (eq != std::string::npos)
            out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

long long to_ll(const std::string& s)
{
    long long v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

} // namespace

CeStub::CeStub(std::filesystem::path dir) : dir_(std::move(dir)) { fs::ensure_dir(dir_); }

void CeStub::dispatch(const lb::JobId& job, const Job& spec)
{
    auto path = dir_ / job.str();
    if (std::filesystem::exists(path))
        return;
    std::string text = "resource=" + spec.resource + "\nsubmitted=" + format_rfc3339(spec.submitted) +
                       "\nruntime_ms=" + std::to_string(spec.runtime.count()) +
                       "\nexit=" + std::to_string(spec.exit_code) + "\nlost=" + (spec.lost ? "1" : "0") + "\n";
    fs::replace_file(path, text);
}

CeStub::Poll CeStub::poll(const lb::JobId& job, TimePoint at) const
{
    Poll p;
    std::string text;
    try {
        text = fs::read_file(dir_ / job.str());
    } catch (const StorageError&) {
        return p;
    }
    auto f = read_fields(text);
    p.resource = f["resource"];
    if (f["lost"] == "1") {
        p.status = Status::Lost;
        return p;
    }
    auto submitted = parse_rfc3339(f["submitted"]);
    if (!submitted)
        return p;
    auto end = *submitted + std::chrono::milliseconds{to_ll(f["runtime_ms"])};
    if (at < end) {
        p.status = Status::Running;
        return p;
    }
    p.status = Status::Done;
    p.exit_code = static_cast<int>(to_ll(f["exit"]));
    return p;
}

bool CeStub::cancel(const lb::JobId& job) { return fs::unlink_if_exists(dir_ / job.str()); }

} // namespace wms::pipeline
