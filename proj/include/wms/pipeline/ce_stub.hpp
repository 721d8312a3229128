#pragma once

#include "wms/lb/event.hpp"
#include "wms/util/time.hpp"

#include <chrono>
#include <filesystem>
#include <string>

namespace wms::pipeline {

/// A computing element stand-in. Dispatch writes `<dir>/<jobid>`; the job
/// then "runs" for its run time and finishes with its exit code. A job
/// marked lost never reports back.
class CeStub {
public:
    struct Job {
        std::string resource;
        TimePoint submitted{};
        std::chrono::milliseconds runtime{0};
        int exit_code = 0;
        bool lost = false;
    };

    enum class Status { Unknown, Running, Done, Lost };

    struct Poll {
        Status status = Status::Unknown;
        int exit_code = 0;
        std::string resource;
    };

    explicit CeStub(std::filesystem::path dir);

    /// Idempotent: re-dispatching the same job keeps the first submission.
    void dispatch(const lb::JobId& job, const Job& spec);
    Poll poll(const lb::JobId& job, TimePoint at = now()) const;
    /// Kills the job. False if the CE did not know it.
    bool cancel(const lb::JobId& job);

private:
    std::filesystem::path dir_;
};

} // namespace wms::pipeline
