#pragma once

#include "wms/jdl/ad.hpp"
#include "wms/lb/event.hpp"
#include "wms/util/time.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wms::broker {

/// Malformed snapshot or catalog text.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A resource ad without a usable `Id`, or two ads sharing one.
class MissingId : public ParseError {
public:
    using ParseError::ParseError;
};

/// The snapshot is older than its ttl; no match was attempted.
class StaleSnapshot : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ResourceAd {
    std::string id;
    jdl::Ad ad;
};

struct InfoSnapshot {
    std::vector<ResourceAd> resources;
    TimePoint taken_at{};
    std::chrono::seconds ttl{300};

    bool fresh(TimePoint at) const { return at - taken_at <= ttl; }
    const ResourceAd* find(std::string_view id) const;
};

/// Format:
///   taken-at <rfc3339>
///   [ttl <seconds>]
///   [ Id = "ce-a"; Arch = "x86_64"; FreeCPUs = 4; ... ]
///   [ Id = "ce-b"; ... ]
/// Without a `ttl` line the snapshot gets `default_ttl`.
InfoSnapshot parse_snapshot(std::string_view text, std::chrono::seconds default_ttl = std::chrono::seconds{300});
InfoSnapshot load_snapshot(const std::filesystem::path& path,
                           std::chrono::seconds default_ttl = std::chrono::seconds{300});

/// Logical file name -> storage elements holding a replica.
using ReplicaCatalog = std::map<std::string, std::vector<std::string>>;

/// One `lfn se1,se2,...` per line; blank lines and `#` comments skipped.
ReplicaCatalog parse_catalog(std::string_view text);
ReplicaCatalog load_catalog(const std::filesystem::path& path);

/// Maps every InputData lfn of the job (a string or a list of strings) to its
/// replicas. Unknown lfns map to an empty list.
std::map<std::string, std::vector<std::string>> resolve_data(const jdl::Ad& job,
                                                            const ReplicaCatalog& catalog);

enum class DataPolicy { RequireCloseReplica, IgnoreData };

const char* policy_name(DataPolicy p);
std::optional<DataPolicy> policy_from_name(std::string_view name);

struct Candidate {
    std::string id;
    double rank = 0.0;
};

struct MatchResult {
    lb::JobId job;
    std::optional<std::string> chosen;
    std::string reason; // why nothing was chosen
    std::vector<Candidate> candidates; // in snapshot order
    std::vector<std::string> warnings;
};

/// Candidates are the resources that match the job symmetrically and satisfy
/// the data policy; the chosen one has the highest Rank, ties going to the
/// lexicographically smallest id. Pure: no I/O, no state.
MatchResult match_job(const lb::JobId& job, const jdl::Ad& job_ad, const InfoSnapshot& snap,
                      const ReplicaCatalog& catalog, DataPolicy policy);

/// As above, refusing with StaleSnapshot when the snapshot has aged past its ttl at `at`.
MatchResult match_job(const lb::JobId& job, const jdl::Ad& job_ad, const InfoSnapshot& snap,
                      const ReplicaCatalog& catalog, DataPolicy policy, TimePoint at);

/// Matched(<resource>) or Aborted(no-match: <reason>).
lb::Event match_event(const MatchResult& r, std::string source, std::uint64_t seq);

} // namespace wms::broker
