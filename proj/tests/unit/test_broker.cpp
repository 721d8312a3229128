#include "support/match_instance.hpp"
#include "support/tempdir.hpp"

#include "wms/broker/broker.hpp"
#include "wms/jdl/eval.hpp"
#include "wms/jdl/parser.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/random.hpp"
#include "wms/util/strings.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace wms::broker;
using wms::jdl::AdRole;
using wms::jdl::parse_ad;
using wms::lb::JobId;

namespace {

std::filesystem::path testdata()
{
    const char* env = std::getenv("WMS_TESTDATA");
    return env ? env : "testdata";
}

const JobId kJob = JobId::parse("wms-20260101T000000Z-0123456789ab");

InfoSnapshot snap_of(const std::string& ads, const std::string& taken = "2026-01-01T00:00:00Z")
{
    return parse_snapshot("taken-at " + taken + "\n" + ads);
}

wms::jdl::Value literal_of(const std::string& type, const std::string& text)
{
    if (type == "string" || type == "real" || type == "int" || type == "bool")
        return wms::jdl::evaluate(wms::jdl::parse_expr(text), {}, {});
    // list: JSON array of strings, which is also valid list syntax once the
    // brackets become braces.
    return wms::jdl::evaluate(wms::jdl::parse_expr("{" + text.substr(1, text.size() - 2) + "}"), {}, {});
}

} // namespace

TEST_CASE("load_snapshot: three CE ads")
{
    testing::TempDir dir;
    wms::fs::write_new_file(dir / "s.txt", "taken-at 2026-02-03T04:05:06Z\n"
                                           "[ Id = \"ce1\"; FreeCPUs = 1 ]\n"
                                           "[ Id = \"ce2\"; FreeCPUs = 2 ]\n"
                                           "[ Id = \"ce3\"; FreeCPUs = 3 ]\n");
    auto s = load_snapshot(dir / "s.txt");
    REQUIRE(s.resources.size() == 3);
    CHECK(s.resources[2].id == "ce3");
    CHECK(wms::format_rfc3339(s.taken_at) == "2026-02-03T04:05:06.000000Z");
    CHECK(s.ttl == std::chrono::seconds{300});
    CHECK(s.resources[0].ad.role() == AdRole::Resource);
    CHECK(s.find("ce2") == &s.resources[1]);
    CHECK(s.find("nope") == nullptr);
}

TEST_CASE("load_snapshot: validation errors")
{
    CHECK_THROWS_WITH_AS(snap_of("[ Id = \"a\" ] [ Id = \"b\" ] [ Id = \"a\" ]"),
                         doctest::Contains("'a'"), MissingId);
    CHECK_THROWS_AS(snap_of("[ FreeCPUs = 1 ]"), MissingId);
    CHECK_THROWS_AS(snap_of("[ Id = 7 ]"), MissingId);
    CHECK_THROWS_AS(snap_of("[ Id = \"a\"; ]]"), ParseError);
    CHECK_THROWS_AS(parse_snapshot("[ Id = \"a\" ]"), ParseError);
    CHECK_THROWS_AS(parse_snapshot("taken-at yesterday\n"), ParseError);
    CHECK_THROWS_AS(parse_snapshot("taken-at 2026-01-01T00:00:00Z\nttl -4\n"), ParseError);
    CHECK(snap_of("").resources.empty());
}

TEST_CASE("golden snapshot fixture equals its manifest attribute for attribute")
{
    auto snap = load_snapshot(testdata() / "broker/snapshot.txt");
    std::ifstream in(testdata() / "broker/snapshot.manifest");
    REQUIRE(in);
    std::string line;
    const ResourceAd* cur = nullptr;
    std::size_t index = 0, resources = 0;
    while (std::getline(in, line)) {
        CAPTURE(line);
        if (wms::starts_with(line, "taken-at ")) {
            CHECK(wms::format_rfc3339(snap.taken_at) == line.substr(9));
            continue;
        }
        if (wms::starts_with(line, "ttl ")) {
            CHECK(snap.ttl.count() == std::stoll(line.substr(4)));
            continue;
        }
        if (wms::starts_with(line, "resource ")) {
            if (cur)
                CHECK(index == cur->ad.size());
            REQUIRE(resources < snap.resources.size());
            cur = &snap.resources[resources++];
            CHECK(cur->id == line.substr(9));
            index = 0;
            continue;
        }
        REQUIRE(cur);
        auto sp1 = line.find(' ');
        auto sp2 = line.find(' ', sp1 + 1);
        std::string name = line.substr(0, sp1);
        std::string type = line.substr(sp1 + 1, sp2 - sp1 - 1);
        std::string text = line.substr(sp2 + 1);
        REQUIRE(index < cur->ad.size());
        const auto& attr = cur->ad.attributes()[index++];
        CHECK(attr.name == name);
        if (type == "expr") {
            CHECK(wms::jdl::structurally_equal(attr.value, wms::jdl::parse_expr(text)));
        } else {
            auto got = wms::jdl::evaluate(attr.value, cur->ad, {});
            CHECK(got.to_string() == literal_of(type, text).to_string());
        }
    }
    CHECK(resources == snap.resources.size());
    CHECK(index == cur->ad.size());
}

TEST_CASE("replica catalog parsing")
{
    auto cat = parse_catalog("# c\nf1 se1,se2\n\n  f2   se3 , se4 \n");
    CHECK(cat.size() == 2);
    CHECK(cat["f1"] == std::vector<std::string>{"se1", "se2"});
    CHECK(cat["f2"] == std::vector<std::string>{"se3", "se4"});
    CHECK_THROWS_AS(parse_catalog("f1\n"), ParseError);
    CHECK_THROWS_AS(parse_catalog("f1 ,\n"), ParseError);
    CHECK_THROWS_AS(parse_catalog("f1 a\nf1 b\n"), ParseError);
    CHECK(load_catalog(testdata() / "broker/catalog.txt").size() == 3);
}

TEST_CASE("resolve_data")
{
    ReplicaCatalog cat{{"f1", {"se1", "se2"}}};
    CHECK(resolve_data(parse_ad("[ Executable = \"x\" ]", AdRole::Job), cat).empty());
    auto one = resolve_data(parse_ad("[ InputData = { \"f1\" } ]", AdRole::Job), cat);
    CHECK(one == std::map<std::string, std::vector<std::string>>{{"f1", {"se1", "se2"}}});
    auto bare = resolve_data(parse_ad("[ InputData = \"f1\" ]", AdRole::Job), cat);
    CHECK(bare == one);
    auto missing = resolve_data(parse_ad("[ InputData = { \"f1\", \"zz\" } ]", AdRole::Job), cat);
    CHECK(missing.size() == 2);
    CHECK(missing["zz"].empty());
}

TEST_CASE("resolve_data equals direct catalog lookup on a random catalog")
{
    wms::Rng rng(7);
    ReplicaCatalog cat;
    for (int f = 0; f < 10; ++f) {
        std::vector<std::string> ses;
        for (int s = 0; s < 4; ++s)
            if (rng.bernoulli(0.5))
                ses.push_back("se" + std::to_string(s));
        if (!ses.empty())
            cat["f" + std::to_string(f)] = ses;
    }
    std::string list;
    for (int f = 0; f < 10; ++f)
        list += (f ? ", \"f" : "\"f") + std::to_string(f) + "\"";
    auto got = resolve_data(parse_ad("[ InputData = {" + list + "} ]", AdRole::Job), cat);
    REQUIRE(got.size() == 10);
    for (int f = 0; f < 10; ++f) {
        std::string lfn = "f" + std::to_string(f);
        auto it = cat.find(lfn);
        CHECK(got[lfn] == (it == cat.end() ? std::vector<std::string>{} : it->second));
    }
}

TEST_CASE("match_job: contract examples")
{
    auto job = parse_ad("[ Requirements = other.FreeCPUs > 0; Rank = other.FreeCPUs ]", AdRole::Job);

    SUBCASE("single satisfying CE is chosen")
    {
        auto r = match_job(kJob, job, snap_of("[ Id = \"only\"; FreeCPUs = 2 ]"), {},
                           DataPolicy::RequireCloseReplica);
        CHECK(r.job == kJob);
        CHECK(r.chosen == "only");
        REQUIRE(r.candidates.size() == 1);
        CHECK(r.candidates[0].rank == 2.0);
    }
    SUBCASE("equal ranks go to the smallest id")
    {
        auto r = match_job(kJob, job,
                           snap_of("[ Id = \"ce-b\"; FreeCPUs = 4 ] [ Id = \"ce-a\"; FreeCPUs = 4 ] "
                                   "[ Id = \"ce-c\"; FreeCPUs = 1 ]"),
                           {}, DataPolicy::IgnoreData);
        CHECK(r.chosen == "ce-a");
        CHECK(r.candidates.size() == 3);
        CHECK(r.candidates[0].id == "ce-b");
    }
    SUBCASE("no match")
    {
        auto r = match_job(kJob, job, snap_of("[ Id = \"x\"; FreeCPUs = 0 ]"), {}, DataPolicy::IgnoreData);
        CHECK_FALSE(r.chosen);
        CHECK(r.reason == "no matching resource");
        auto ev = match_event(r, "broker", 33);
        CHECK(ev.kind == wms::lb::EventKind::Aborted);
        CHECK(ev.arg == "no-match: no matching resource");
        CHECK(ev.seq == 33);
    }
    SUBCASE("resource requirements count too")
    {
        auto r = match_job(kJob, job, snap_of("[ Id = \"x\"; FreeCPUs = 5; Requirements = other.VO == \"cms\" ]"),
                           {}, DataPolicy::IgnoreData);
        CHECK_FALSE(r.chosen);
    }
    SUBCASE("non-numeric rank warns and counts as zero")
    {
        auto j = parse_ad("[ Rank = other.Name ]", AdRole::Job);
        auto r = match_job(kJob, j, snap_of("[ Id = \"x\"; Name = \"n\" ]"), {}, DataPolicy::IgnoreData);
        CHECK(r.chosen == "x");
        CHECK(r.warnings.size() == 1);
    }
}

TEST_CASE("match_job: data policies")
{
    auto snap = snap_of("[ Id = \"near\"; CloseSEs = { \"se1\" }; FreeCPUs = 1 ] "
                        "[ Id = \"far\"; CloseSEs = { \"se9\" }; FreeCPUs = 9 ]");
    ReplicaCatalog cat{{"f1", {"se1", "se2"}}};
    auto job = parse_ad("[ InputData = { \"f1\" }; Rank = other.FreeCPUs ]", AdRole::Job);

    CHECK(match_job(kJob, job, snap, cat, DataPolicy::RequireCloseReplica).chosen == "near");
    CHECK(match_job(kJob, job, snap, cat, DataPolicy::IgnoreData).chosen == "far");

    auto lost = parse_ad("[ InputData = { \"f1\", \"gone\" } ]", AdRole::Job);
    auto r = match_job(kJob, lost, snap, cat, DataPolicy::RequireCloseReplica);
    CHECK_FALSE(r.chosen);
    CHECK(r.reason == "no replica for gone");
    CHECK(match_job(kJob, lost, snap, cat, DataPolicy::IgnoreData).chosen == "far");

    ReplicaCatalog elsewhere{{"f1", {"se5"}}};
    auto none = match_job(kJob, job, snap, elsewhere, DataPolicy::RequireCloseReplica);
    CHECK_FALSE(none.chosen);
    CHECK(none.reason == "no matching resource close to the input data");

    CHECK(policy_from_name("ignore-data") == DataPolicy::IgnoreData);
    CHECK(policy_from_name(policy_name(DataPolicy::RequireCloseReplica)) == DataPolicy::RequireCloseReplica);
    CHECK_FALSE(policy_from_name("whatever"));
}

TEST_CASE("match_job: stale snapshots are refused")
{
    auto snap = parse_snapshot("taken-at 2026-01-01T00:00:00Z\nttl 60\n[ Id = \"a\" ]");
    auto job = parse_ad("[ Rank = 1 ]", AdRole::Job);
    auto t0 = snap.taken_at;
    CHECK(match_job(kJob, job, snap, {}, DataPolicy::IgnoreData, t0 + std::chrono::seconds{60}).chosen == "a");
    CHECK_THROWS_AS(match_job(kJob, job, snap, {}, DataPolicy::IgnoreData, t0 + std::chrono::seconds{61}),
                    StaleSnapshot);
}

TEST_CASE("randomized 20x10 instances equal the brute-force matcher")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto inst = testing::random_instance(seed);
        int chosen = 0, ties = 0;
        for (auto policy : {DataPolicy::RequireCloseReplica, DataPolicy::IgnoreData}) {
            for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
                CAPTURE(seed);
                CAPTURE(inst.job_texts[j]);
                auto r = match_job(kJob, inst.jobs[j], inst.snapshot, inst.catalog, policy);
                auto want = testing::brute_force_match(inst.jobs[j], inst.snapshot, inst.catalog, policy);
                CHECK(r.chosen == want);
                chosen += r.chosen.has_value();
                if (r.chosen) {
                    int top = 0;
                    double best = 0;
                    for (auto& c : r.candidates)
                        if (c.id == *r.chosen)
                            best = c.rank;
                    for (auto& c : r.candidates)
                        top += c.rank == best;
                    ties += top > 1;
                }
            }
        }
        // The generator must exercise both outcomes and the tie-break.
        CHECK(chosen > 0);
        CHECK(chosen < 40);
        CHECK(ties > 0);
    }
}

TEST_CASE("scaling every Rank by a positive constant keeps the choice")
{
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
        auto inst = testing::random_instance(seed);
        for (const auto& text : inst.job_texts) {
            auto job = parse_ad(text, AdRole::Job);
            auto base = match_job(kJob, job, inst.snapshot, inst.catalog, DataPolicy::IgnoreData);
            for (const char* k : {"2", "3", "0.25", "1024"}) {
                auto scaled = job;
                const auto* r = job.rank();
                scaled.set("Rank", r ? wms::jdl::parse_expr("(" + wms::jdl::to_string(*r) + ") * " + k)
                                     : wms::jdl::parse_expr("0 * " + std::string(k)));
                CHECK(match_job(kJob, scaled, inst.snapshot, inst.catalog, DataPolicy::IgnoreData).chosen ==
                      base.chosen);
            }
        }
    }
}

TEST_CASE("matching is deterministic and stateless")
{
    auto inst = testing::random_instance(99);
    for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
        auto a = match_job(kJob, inst.jobs[j], inst.snapshot, inst.catalog, DataPolicy::RequireCloseReplica);
        // A freshly loaded copy of the inputs stands in for a restarted broker.
        auto again = parse_ad(inst.job_texts[j], AdRole::Job);
        auto b = match_job(kJob, again, inst.snapshot, inst.catalog, DataPolicy::RequireCloseReplica);
        CHECK(a.chosen == b.chosen);
        CHECK(a.reason == b.reason);
        REQUIRE(a.candidates.size() == b.candidates.size());
        for (std::size_t i = 0; i < a.candidates.size(); ++i) {
            CHECK(a.candidates[i].id == b.candidates[i].id);
            CHECK(a.candidates[i].rank == b.candidates[i].rank);
        }
    }
}

TEST_CASE("match_event for a chosen resource")
{
    MatchResult r;
    r.job = kJob;
    r.chosen = "ce-7";
    auto ev = match_event(r, "match", 2);
    CHECK(ev.kind == wms::lb::EventKind::Matched);
    CHECK(ev.arg == "ce-7");
    CHECK(ev.source == "match");
    CHECK(ev.job == kJob);
}
