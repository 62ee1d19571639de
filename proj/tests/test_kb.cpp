#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>
#include <unistd.h>

#include "ragent/error.hpp"
#include "ragent/io.hpp"
#include "ragent/kb.hpp"
#include "ragent/kb_store.hpp"
#include "test_util.hpp"

using namespace ragent;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const LabelSet kLabels = LabelSet::defaults();
const Vocabulary kVocab = Vocabulary::defaults();

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("ragent_kb_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    return p;
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::IoError;
}

ScriptRecord vote(const std::string& clip, int k, const std::string& label)
{
    return {"annotate/" + clip + "/video/" + std::to_string(k), "",
            fenced({{"label", label}, {"evidence", canonical_profile(label)}}), ""};
}

ScriptRecord cues(const std::string& seg, const std::string& pattern, const std::string& motion)
{
    return {"annotate/" + seg + "/radar", "",
            fenced({{"description", "maps"}, {"temporal_pattern", pattern}, {"range_motion", motion}}), ""};
}

std::vector<ScriptRecord> votes(const std::string& clip, const std::vector<std::string>& seq)
{
    std::vector<ScriptRecord> out;
    for (std::size_t k = 0; k < seq.size(); ++k) out.push_back(vote(clip, static_cast<int>(k), seq[k]));
    return out;
}

}  // namespace

TEST_CASE("channel A stops once the leader is unbeatable")
{
    ScriptedBackend b(votes("c", {"Jumping", "Jumping", "Jumping", "Waving", "Waving"}));
    const auto r = channel_a_vote("c", b, kLabels, kVocab, ConsistencyTable::defaults());
    CHECK(r.label == "Jumping");
    CHECK(r.votes_cast == 3);
    CHECK(r.s_ann == 1.0);
}

TEST_CASE("channel A consensus on A,A,B,A,A")
{
    const std::vector<std::string> seq = {"Walking", "Walking", "Waving", "Walking", "Walking", "Walking", "Walking"};
    {
        // Early stopping ends after four votes (lead 2 > 1 remaining): 3 of 4.
        ScriptedBackend b(votes("c", seq));
        const auto r = channel_a_vote("c", b, kLabels, kVocab, ConsistencyTable::defaults(), {5});
        CHECK(r.votes_cast == 4);
        CHECK(r.s_ann == doctest::Approx(0.75));
    }
    {
        // With a budget of seven the stop comes after all five scripted votes: 4 of 5.
        ScriptedBackend b(votes("c", seq));
        const auto r = channel_a_vote("c", b, kLabels, kVocab, ConsistencyTable::defaults(), {7});
        CHECK(r.votes_cast == 5);
        CHECK(r.s_ann == doctest::Approx(0.8));
        CHECK(accept_entry(r.s_ann, true) == AcceptStatus::StrongAccept);
    }
}

TEST_CASE("early stopping never changes the winner")
{
    const std::vector<std::string> pool = {"Walking", "Waving", "Jumping"};
    // Every sequence of five votes over three labels.
    for (int code = 0; code < 243; ++code) {
        std::vector<std::string> seq;
        for (int k = 0, c = code; k < 5; ++k, c /= 3) seq.push_back(pool[c % 3]);
        std::map<std::string, int> tally;
        for (const auto& s : seq) ++tally[s];
        std::string full;
        int best = 0;
        for (const auto& l : kLabels.names())
            if (tally[l] > best) best = tally[l], full = l;
        // Only unique full-run winners are well-defined targets.
        int at_best = 0;
        for (const auto& [l, n] : tally) at_best += n == best;
        if (at_best > 1) continue;
        ScriptedBackend b(votes("c", seq));
        const auto r = channel_a_vote("c", b, kLabels, kVocab, ConsistencyTable::defaults());
        CHECK(r.label == full);
        CHECK(r.s_ann >= 0.0);
        CHECK(r.s_ann <= 1.0);
    }
}

TEST_CASE("channel A invalid votes and profile consistency")
{
    std::vector<ScriptRecord> bad;
    for (int k = 0; k < 5; ++k)
        bad.push_back({"annotate/c/video/" + std::to_string(k), "", fenced({{"label", "Walking"}, {"arm_action", "flailing"}}), ""});
    ScriptedBackend b(bad);
    CHECK(code_of([&] { channel_a_vote("c", b, kLabels, kVocab, ConsistencyTable::defaults()); }) == ErrorCode::NoValidVotes);

    auto p = canonical_profile("Walking");
    CHECK(label_profile_consistent("Walking", p, kLabels));
    p.displacement = "none";
    CHECK(!label_profile_consistent("Walking", p, kLabels));
    CHECK(code_of([&] { label_profile_consistent("Moonwalk", p, kLabels); }) == ErrorCode::UnknownLabel);

    // A profile contradicting its label is an invalid vote, not a vote for the label.
    std::vector<ScriptRecord> mixed = votes("d", {"Waving", "Waving", "Waving"});
    mixed[0].response = fenced({{"label", "Waving"}, {"evidence", canonical_profile("Walking")}});
    ScriptedBackend m(mixed);
    const auto r = channel_a_vote("d", m, kLabels, kVocab, ConsistencyTable::defaults(), {3});
    CHECK(r.valid_votes == 2);
    CHECK(r.s_ann == 1.0);
}

TEST_CASE("channel B and the compatibility table")
{
    ScriptedBackend b({cues("s", "periodic", "stationary"),
                       {"annotate/t/radar", "", fenced({{"description", "x"}, {"temporal_pattern", "periodic"}}), ""}});
    const auto r = channel_b_describe("s", Matrix(4, 8, 1.0), Matrix(4, 3, 1.0), b, kLabels, kVocab);
    CHECK(r.temporal_pattern == "periodic");
    CHECK(r.range_motion == "stationary");
    CHECK(r.description == "maps");
    CHECK(code_of([&] { channel_b_describe("t", Matrix(4, 8, 1.0), Matrix(4, 3, 1.0), b, kLabels, kVocab); }) ==
          ErrorCode::ParseError);

    CHECK(!compatibility_check("Walking", {"", "periodic", "stationary"}));
    CHECK(compatibility_check("Waving", {"", "periodic", "stationary"}));
    for (const auto& l : kLabels.names()) CHECK(compatibility_check(l, {"", "periodic", "drifting"}));
}

TEST_CASE("acceptance thresholds")
{
    CHECK(accept_entry(1.0, true) == AcceptStatus::StrongAccept);
    CHECK(accept_entry(0.9, false) == AcceptStatus::Reject);
    CHECK(accept_entry(0.7, true) == AcceptStatus::Accept);
    CHECK(accept_entry(0.5, true) == AcceptStatus::Reject);
    CHECK(status_from_string(to_string(AcceptStatus::Accept)) == AcceptStatus::Accept);
}

TEST_CASE("build_kb over a scripted corpus")
{
    CHECK(build_kb({}, *std::make_shared<ScriptedBackend>(std::vector<ScriptRecord>{})).kb.entries.empty());

    std::mt19937_64 rng(41);
    std::vector<CorpusSegment> corpus;
    std::vector<ScriptRecord> script;
    const std::vector<std::string> classes = {"Walking", "Waving"};
    for (int k = 0; k < 20; ++k) {
        CorpusSegment s;
        s.segment_id = "seg-" + std::to_string(k);
        s.clip_id = "clip-" + std::to_string(k);
        s.dtm = testutil::random_matrix(rng, 10, 16);
        s.rtm = testutil::random_matrix(rng, 10, 5);
        const std::string& label = classes[k % 2];
        corpus.push_back(s);
        const auto v = votes(s.clip_id, {label, label, label});
        script.insert(script.end(), v.begin(), v.end());
        // Segment 6 is Walking but its radar cues say it stands still.
        script.push_back(cues(s.segment_id, "periodic", k == 6 ? "stationary" : (label == "Walking" ? "directional" : "stationary")));
    }
    BuildConfig cfg;
    cfg.jobs = 3;
    ScriptedBackend b(script);
    const auto res = build_kb(corpus, b, cfg);
    CHECK(res.summary.segments == 20);
    CHECK(res.summary.strong_accept == 19);
    CHECK(res.summary.reject == 1);
    CHECK(res.summary.failed == 0);
    CHECK(res.kb.accepted_count() == 19);
    CHECK(res.kb.entries[6].status == AcceptStatus::Reject);
    for (const auto& e : res.kb.index()) CHECK(e.id != "seg-6");
    CHECK(res.summary.to_text().find("strong_accept=19") != std::string::npos);

    // A missing transcript record fails that segment only.
    script.erase(std::remove_if(script.begin(), script.end(), [](const ScriptRecord& r) { return r.request_id == "annotate/seg-3/radar"; }),
                 script.end());
    ScriptedBackend partial(script);
    const auto res2 = build_kb(corpus, partial, cfg);
    CHECK(res2.summary.failed == 1);
    CHECK(res2.kb.entries.size() == 19);
}

TEST_CASE("matrix file layout")
{
    Matrix m(3, 4);
    for (std::size_t k = 0; k < 12; ++k) m.data()[k] = static_cast<double>(k) + 0.5;
    const auto bytes = io::encode_matrix(m);
    REQUIRE(bytes.size() == 12 + 3 * 4 * 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "RGM1");
    CHECK(bytes[4] == 3);
    CHECK(bytes[5] == 0);
    CHECK(bytes[8] == 4);
    float first = 0.0f;
    std::memcpy(&first, bytes.data() + 12, 4);
    CHECK(first == 0.5f);
}

TEST_CASE("KB store round-trip, corruption, versioning and locking")
{
    std::mt19937_64 rng(42);
    KnowledgeBase kb;
    for (int k = 0; k < 6; ++k) {
        KnowledgeBaseEntry e;
        e.entry_id = "e" + std::to_string(k);
        e.dtm = testutil::random_matrix(rng, 8, 16);
        e.rtm = testutil::random_matrix(rng, 8, 5);
        e.dtm.round_to_float();
        e.rtm.round_to_float();
        e.features = extract_features(e.dtm, e.rtm, {});
        e.pseudo_label = k % 2 ? "Walking" : "Waving";
        e.s_ann = 1.0;
        e.valid_votes = e.votes_cast = 3;
        e.evidence = canonical_profile(e.pseudo_label);
        e.cues = canonical_cues(e.pseudo_label);
        e.radar_description = e.cues.description;
        e.status = k == 5 ? AcceptStatus::Reject : AcceptStatus::StrongAccept;
        e.domain = {"lab", "s" + std::to_string(k), "2024-01-01"};
        kb.entries.push_back(e);
    }
    fit_retrieval(kb, 15);
    CHECK(kb.subspace.k() == 15);

    const auto dir = scratch("store");
    save_kb(kb, dir);
    const auto before = fs::last_write_time(dir / "manifest.json");
    const auto back = load_kb(dir);
    CHECK(fs::last_write_time(dir / "manifest.json") == before);
    CHECK(!fs::exists(dir / ".lock"));
    REQUIRE(back.entries.size() == kb.entries.size());
    for (std::size_t k = 0; k < kb.entries.size(); ++k) CHECK(back.entries[k] == kb.entries[k]);
    CHECK(back.standardizer == kb.standardizer);
    CHECK(back.subspace == kb.subspace);
    CHECK(manifest_json(back) == manifest_json(kb));
    CHECK(manifest_json(back)["entry_count"] == 6);

    const auto dir2 = scratch("store2");
    save_kb(back, dir2);
    for (const auto& e : kb.entries)
        for (const char* ext : {".dtm.rgm", ".rtm.rgm"})
            CHECK(io::read_bytes(dir / (e.entry_id + ext)) == io::read_bytes(dir2 / (e.entry_id + ext)));

    SUBCASE("empty KB")
    {
        const auto d = scratch("empty");
        save_kb(KnowledgeBase{}, d);
        CHECK(json::parse(io::read_text(d / "manifest.json"))["entry_count"] == 0);
        CHECK(io::read_text(d / "entries.jsonl").empty());
        CHECK(load_kb(d).entries.empty());
    }
    SUBCASE("corrupted magic")
    {
        auto bytes = io::read_bytes(dir2 / "e0.dtm.rgm");
        bytes[1] = 'X';
        io::write_bytes(dir2 / "e0.dtm.rgm", bytes);
        CHECK(code_of([&] { load_kb(dir2); }) == ErrorCode::FormatError);
    }
    SUBCASE("schema and format version")
    {
        auto m = json::parse(io::read_text(dir2 / "manifest.json"));
        m["feature_schema"]["version"] = "physics-25/v2";
        io::write_text(dir2 / "manifest.json", m.dump(2));
        try {
            load_kb(dir2);
            FAIL("expected VersionError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::VersionError);
            CHECK(std::string(e.what()).find("physics-25/v2") != std::string::npos);
            CHECK(std::string(e.what()).find("physics-25/v1") != std::string::npos);
        }
        m["feature_schema"]["version"] = "physics-25/v1";
        m["format_version"] = 2;
        io::write_text(dir2 / "manifest.json", m.dump(2));
        CHECK(code_of([&] { load_kb(dir2); }) == ErrorCode::VersionError);
    }
    SUBCASE("entry count mismatch")
    {
        auto m = json::parse(io::read_text(dir2 / "manifest.json"));
        m["entry_count"] = 7;
        io::write_text(dir2 / "manifest.json", m.dump(2));
        CHECK(code_of([&] { load_kb(dir2); }) == ErrorCode::FormatError);
    }
    SUBCASE("lock excludes a second writer")
    {
        KbLock held(dir2);
        CHECK(code_of([&] { save_kb(kb, dir2); }) == ErrorCode::LockError);
        std::atomic<int> lock_errors{0};
        std::vector<std::thread> writers;
        for (int t = 0; t < 4; ++t)
            writers.emplace_back([&] {
                try {
                    KbLock again(dir2);
                } catch (const Error& e) {
                    lock_errors += e.code() == ErrorCode::LockError;
                }
            });
        for (auto& w : writers) w.join();
        CHECK(lock_errors == 4);
    }
    CHECK(!fs::exists(dir2 / ".lock"));
    CHECK(code_of([] { load_kb("/nonexistent/ragent/kb"); }) == ErrorCode::IoError);
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("retrieval fit degrades gracefully")
{
    KnowledgeBase kb;
    KnowledgeBaseEntry e;
    e.entry_id = "a";
    e.pseudo_label = "Walking";
    e.status = AcceptStatus::Accept;
    e.features.values.fill(2.0);
    kb.entries.push_back(e);
    fit_retrieval(kb, 5);
    CHECK(kb.subspace.k() == 25);
    CHECK(kb.standardizer.stddev()[0] == 1.0);

    e.entry_id = "b";
    e.features.values.fill(4.0);
    kb.entries.push_back(e);
    fit_retrieval(kb, 5);
    CHECK(kb.subspace.k() == 25);
    CHECK(kb.standardizer.mean()[0] == doctest::Approx(3.0));
}
