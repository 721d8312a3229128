#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wms::pipeline {

/// One line per worker action: `ts|worker|station|entry|action|outcome`.
struct RunLogLine {
    std::string ts;
    std::string worker;
    std::string station;
    std::string entry;
    std::string action;
    std::string outcome;
};

class RunLog {
public:
    /// An empty path discards everything.
    explicit RunLog(std::filesystem::path path);
    ~RunLog();
    RunLog(const RunLog&) = delete;
    RunLog& operator=(const RunLog&) = delete;

    void write(std::string_view worker, std::string_view station, std::string_view entry,
               std::string_view action, std::string_view outcome);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::mutex mu_;
    int fd_ = -1;
};

std::optional<RunLogLine> parse_run_log_line(std::string_view line);
std::vector<RunLogLine> read_run_log(const std::filesystem::path& path);

} // namespace wms::pipeline
