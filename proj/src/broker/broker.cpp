#include "wms/broker/broker.hpp"

#include "wms/jdl/eval.hpp"
#include "wms/jdl/parser.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/strings.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace wms::broker {

namespace {

const jdl::Ad kEmpty{jdl::AdRole::Resource};

std::vector<std::string> string_items(const jdl::Value& v)
{
    std::vector<std::string> out;
    if (v.is_string()) {
        out.push_back(v.as_string());
    } else if (v.is_list()) {
        for (const auto& item : v.as_list())
            if (item.is_string())
                out.push_back(item.as_string());
    }
    return out;
}

std::vector<std::string> attr_strings(const jdl::Ad& ad, std::string_view name)
{
    const jdl::Expr* e = ad.find(name);
    if (!e)
        return {};
    return string_items(jdl::evaluate(*e, ad, kEmpty));
}

// Position just past the end of line `pos` starts on.
std::size_t next_line(std::string_view text, std::size_t pos)
{
    auto nl = text.find('\n', pos);
    return nl == std::string_view::npos ? text.size() : nl + 1;
}

} // namespace

const ResourceAd* InfoSnapshot::find(std::string_view id) const
{
    for (const auto& r : resources)
        if (r.id == id)
            return &r;
    return nullptr;
}

InfoSnapshot parse_snapshot(std::string_view text, std::chrono::seconds default_ttl)
{
    InfoSnapshot snap;
    snap.ttl = default_ttl;

    std::size_t pos = next_line(text, 0);
    std::string_view header = trim(text.substr(0, pos));
    if (!starts_with(header, "taken-at "))
        throw ParseError("snapshot must start with 'taken-at <rfc3339>'");
    auto taken = parse_rfc3339(trim(header.substr(9)));
    if (!taken)
        throw ParseError("bad taken-at timestamp '" + std::string(header.substr(9)) + "'");
    snap.taken_at = *taken;

    std::size_t after = next_line(text, pos);
    std::string_view second = trim(text.substr(pos, after - pos));
    if (starts_with(second, "ttl ")) {
        std::string_view n = trim(second.substr(4));
        long long secs = 0;
        auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), secs);
        if (ec != std::errc{} || p != n.data() + n.size() || secs <= 0)
            throw ParseError("bad ttl '" + std::string(n) + "'");
        snap.ttl = std::chrono::seconds{secs};
        pos = after;
    }

    std::vector<jdl::Ad> ads;
    try {
        ads = jdl::parse_ads(text.substr(pos), jdl::AdRole::Resource);
    } catch (const jdl::SyntaxError& e) {
        throw ParseError(std::string("snapshot ad: ") + e.what());
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ads.size(); ++i) {
        const jdl::Expr* id_expr = ads[i].find("Id");
        jdl::Value id = id_expr ? jdl::evaluate(*id_expr, ads[i], kEmpty) : jdl::Value::undefined();
        if (!id.is_string() || id.as_string().empty())
            throw MissingId("resource ad #" + std::to_string(i + 1) + " has no string Id");
        if (!seen.insert(id.as_string()).second)
            throw MissingId("duplicate resource id '" + id.as_string() + "'");
        snap.resources.push_back({id.as_string(), std::move(ads[i])});
    }
    return snap;
}

InfoSnapshot load_snapshot(const std::filesystem::path& path, std::chrono::seconds default_ttl)
{
    std::string text = fs::read_file(path);
    try {
        return parse_snapshot(text, default_ttl);
    } catch (const MissingId& e) {
        throw MissingId(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

ReplicaCatalog parse_catalog(std::string_view text)
{
    ReplicaCatalog cat;
    int lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line[0] == '#')
            continue;
        auto sp = line.find_first_of(" \t");
        if (sp == std::string_view::npos)
            throw ParseError("catalog line " + std::to_string(lineno) + ": missing replica list");
        std::string lfn(line.substr(0, sp));
        std::vector<std::string> ses;
        for (const auto& se : split(trim(line.substr(sp)), ','))
            if (!trim(se).empty())
                ses.emplace_back(trim(se));
        if (ses.empty())
            throw ParseError("catalog line " + std::to_string(lineno) + ": empty replica list");
        if (!cat.emplace(lfn, std::move(ses)).second)
            throw ParseError("catalog line " + std::to_string(lineno) + ": duplicate lfn '" + lfn + "'");
    }
    return cat;
}

ReplicaCatalog load_catalog(const std::filesystem::path& path)
{
    try {
        return parse_catalog(fs::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::map<std::string, std::vector<std::string>> resolve_data(const jdl::Ad& job,
                                                            const ReplicaCatalog& catalog)
{
    std::map<std::string, std::vector<std::string>> out;
    for (auto& lfn : attr_strings(job, "InputData")) {
        auto it = catalog.find(lfn);
        out[lfn] = it == catalog.end() ? std::vector<std::string>{} : it->second;
    }
    return out;
}

const char* policy_name(DataPolicy p)
{
    return p == DataPolicy::RequireCloseReplica ? "require-close-replica" : "ignore-data";
}

std::optional<DataPolicy> policy_from_name(std::string_view name)
{
    if (name == "require-close-replica")
        return DataPolicy::RequireCloseReplica;
    if (name == "ignore-data")
        return DataPolicy::IgnoreData;
    return std::nullopt;
}

MatchResult match_job(const lb::JobId& job, const jdl::Ad& job_ad, const InfoSnapshot& snap,
                      const ReplicaCatalog& catalog, DataPolicy policy)
{
    MatchResult result;
    result.job = job;

    auto data = resolve_data(job_ad, catalog);
    if (policy == DataPolicy::RequireCloseReplica) {
        for (const auto& [lfn, ses] : data) {
            if (ses.empty()) {
                result.reason = "no replica for " + lfn;
                return result;
            }
        }
    }

    bool any_requirements_match = false;
    for (const auto& res : snap.resources) {
        if (!jdl::match_ads(job_ad, res.ad))
            continue;
        any_requirements_match = true;
        if (policy == DataPolicy::RequireCloseReplica && !data.empty()) {
            auto close = attr_strings(res.ad, "CloseSEs");
            bool ok = std::all_of(data.begin(), data.end(), [&](const auto& entry) {
                return std::any_of(entry.second.begin(), entry.second.end(), [&](const std::string& se) {
                    return std::find(close.begin(), close.end(), se) != close.end();
                });
            });
            if (!ok)
                continue;
        }
        auto r = jdl::rank(job_ad, res.ad);
        if (r.warning)
            result.warnings.push_back(res.id + ": " + *r.warning);
        result.candidates.push_back({res.id, r.value});
    }

    const Candidate* best = nullptr;
    for (const auto& c : result.candidates)
        if (!best || c.rank > best->rank || (c.rank == best->rank && c.id < best->id))
            best = &c;
    if (best)
        result.chosen = best->id;
    else if (any_requirements_match)
        result.reason = "no matching resource close to the input data";
    else
        result.reason = "no matching resource";
    return result;
}

MatchResult match_job(const lb::JobId& job, const jdl::Ad& job_ad, const InfoSnapshot& snap,
                      const ReplicaCatalog& catalog, DataPolicy policy, TimePoint at)
{
    if (!snap.fresh(at))
        throw StaleSnapshot("snapshot taken at " + format_rfc3339(snap.taken_at) + " is older than its ttl of " +
                            std::to_string(snap.ttl.count()) + "s");
    return match_job(job, job_ad, snap, catalog, policy);
}

lb::Event match_event(const MatchResult& r, std::string source, std::uint64_t seq)
{
    lb::Event e;
    e.job = r.job;
    e.source = std::move(source);
    e.seq = seq;
    e.timestamp = now();
    if (r.chosen) {
        e.kind = lb::EventKind::Matched;
        e.arg = *r.chosen;
    } else {
        e.kind = lb::EventKind::Aborted;
        e.arg = "no-match: " + r.reason;
    }
    return e;
}

} // namespace wms::broker
