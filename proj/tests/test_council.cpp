#include "doctest.h"

#include <cmath>
#include <random>

#include "ragent/council.hpp"
#include "ragent/error.hpp"

using namespace ragent;
using nlohmann::json;

namespace {

const LabelSet kLabels = LabelSet::defaults();

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

NeighborSet neighbors(std::initializer_list<std::pair<double, const char*>> items)
{
    NeighborSet out;
    int k = 0;
    for (const auto& [d, l] : items) out.push_back({"n" + std::to_string(k++), d, l});
    return out;
}

RetrievalPrior prior_of(std::map<std::string, double> pi)
{
    RetrievalPrior p;
    p.labels = kLabels.names();
    for (const auto& l : p.labels) p.support.push_back(pi.count(l) ? pi[l] : 0.0);
    return p;
}

PhysicistReport feasible_only(std::vector<std::string> feasible)
{
    PhysicistReport r;
    for (const auto& l : kLabels.names())
        (std::find(feasible.begin(), feasible.end(), l) != feasible.end() ? r.feasible : r.vetoed).push_back(l);
    return r;
}

ObserverReport obs(std::vector<std::string> h, std::string ambiguity)
{
    ObserverReport r;
    r.hypotheses = std::move(h);
    r.ambiguity = std::move(ambiguity);
    return r;
}

PhysicsFeatureVector calm_features()
{
    PhysicsFeatureVector x;
    x[Feature::total_displacement_m] = 1.0;
    x[Feature::range_drift_std_m] = 0.1;
    x[Feature::duration_s] = 1.0;
    x[Feature::spectral_spread_mean] = 10.0;
    return x;
}

}  // namespace

TEST_CASE("historian weights")
{
    const auto all_a = historian(neighbors({{0.3, "Walking"}, {0.5, "Walking"}, {2.0, "Walking"}}), kLabels);
    CHECK(all_a("Walking") == doctest::Approx(1.0));
    CHECK(all_a.leading() == "Walking");

    const auto even = historian(neighbors({{1.0, "Walking"}, {1.0, "Running"}}), kLabels);
    CHECK(even("Walking") == doctest::Approx(0.5));
    CHECK(even("Running") == doctest::Approx(0.5));
    CHECK(even.leading() == "Walking");

    const auto hand = historian(neighbors({{1.0, "Waving"}, {1.0, "Waving"}, {3.0, "Jumping"}}), kLabels, 0.0);
    CHECK(std::abs(hand("Waving") - 6.0 / 7.0) <= 1e-9);
    CHECK(std::abs(hand("Jumping") - 1.0 / 7.0) <= 1e-9);

    CHECK(code_of([] { historian({}, kLabels); }) == ErrorCode::EmptyNeighbors);
    CHECK(code_of([] { historian(neighbors({{1.0, "Moonwalk"}}), kLabels); }) == ErrorCode::UnknownLabel);
    CHECK(historian(neighbors({{0.0, "Falling"}}), kLabels)("Falling") == doctest::Approx(1.0));
}

TEST_CASE("historian is scale invariant and normalized")
{
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> d(1e-3, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        NeighborSet n;
        const std::size_t m = 1 + rng() % 10;
        for (std::size_t k = 0; k < m; ++k) n.push_back({"e" + std::to_string(k), d(rng), kLabels.names()[rng() % 12]});
        const auto p = historian(n, kLabels, 0.0);
        double sum = 0.0;
        for (double s : p.support) sum += s;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        auto scaled = n;
        for (auto& e : scaled) e.distance *= 7.5;
        const auto q = historian(scaled, kLabels, 0.0);
        for (std::size_t k = 0; k < 12; ++k) CHECK(std::abs(p.support[k] - q.support[k]) <= 1e-12);
        CHECK(historian(scaled, kLabels).leading() == historian(n, kLabels).leading());
    }
}

TEST_CASE("physicist rules")
{
    auto rules = RuleTable::defaults();
    CHECK_THROWS_AS(rules.validate(kLabels), Error);  // percentile not yet resolved
    std::vector<PhysicsFeatureVector> kb(10);
    for (std::size_t k = 0; k < 10; ++k) kb[k][Feature::spectral_spread_mean] = static_cast<double>(k);
    rules = rules.resolved(kb);
    CHECK(rules.rules[3].threshold == doctest::Approx(5.4));  // 60th percentile of 0..9 by interpolation
    CHECK_NOTHROW(rules.validate(kLabels));

    auto x = calm_features();
    auto all = physicist(x, rules, kLabels);
    CHECK(all.feasible == kLabels.names());
    CHECK(all.vetoed.empty());
    CHECK(!all.fallback);

    x[Feature::total_displacement_m] = 0.02;
    const auto r = physicist(x, rules, kLabels);
    CHECK(r.vetoed == std::vector<std::string>{"Walking", "Running"});
    CHECK(!r.is_feasible("Walking"));
    REQUIRE(r.fired_rules.size() == 2);
    CHECK(r.fired_rules[0].rule_id == "locomotion_min_displacement");
    CHECK(r.fired_rules[0].value == doctest::Approx(0.02));

    RuleTable strict;
    strict.rules.push_back({"impossible", kLabels.names(), "duration_s", "ge", 1e9, std::nullopt});
    const auto fb = physicist(x, strict, kLabels);
    CHECK(fb.fallback);
    CHECK(fb.feasible == kLabels.names());
    CHECK(fb.vetoed.empty());

    RuleTable bad;
    bad.rules.push_back({"x", {"Moonwalk"}, "duration_s", "ge", 1.0, std::nullopt});
    CHECK(code_of([&] { bad.validate(kLabels); }) == ErrorCode::BadRuleTable);
    bad.rules[0] = {"x", {"Walking"}, "no_such_feature", "ge", 1.0, std::nullopt};
    CHECK(code_of([&] { bad.validate(kLabels); }) == ErrorCode::BadRuleTable);
    bad.rules[0] = {"x", {"Walking"}, "duration_s", "gt", 1.0, std::nullopt};
    CHECK(code_of([&] { bad.validate(kLabels); }) == ErrorCode::BadRuleTable);

    const json j = RuleTable::defaults();
    CHECK(j.dump().find("kb_percentile:60") != std::string::npos);
    const RuleTable round = j.get<RuleTable>();
    CHECK(round.rules.size() == 4);
    CHECK(round.rules[3].kb_percentile == 60.0);
}

TEST_CASE("judge arbitration examples")
{
    const auto only_walk = judge(prior_of({{"Running", 0.9}, {"Walking", 0.1}}), feasible_only({"Walking"}),
                                 obs({"Running"}, "low"));
    CHECK(only_walk.label == "Walking");

    const auto step3 = judge(prior_of({{"Walking", 0.6}, {"Running", 0.4}}), feasible_only({"Walking", "Running"}),
                             obs({"Walking"}, "low"));
    CHECK(step3.label == "Walking");
    REQUIRE(step3.trace.size() == 3);
    CHECK(step3.trace[2].rfind("step3: accept Walking", 0) == 0);

    const auto backoff = judge(prior_of({{"Jumping", 0.6}, {"Waving", 0.3}, {"Squatting and Rising", 0.1}}),
                               feasible_only({"Waving", "Squatting and Rising"}), obs({"Waving"}, "high"));
    CHECK(backoff.label == "Waving");
    CHECK(backoff.trace.back().rfind("step4:", 0) == 0);

    // The observer may override the retrieval leader when its label carries enough support.
    const auto override = judge(prior_of({{"Walking", 0.7}, {"Running", 0.3}}), feasible_only({"Walking", "Running"}),
                                obs({"Running"}, "medium"));
    CHECK(override.label == "Running");
    const auto too_weak = judge(prior_of({{"Walking", 0.9}, {"Running", 0.1}}), feasible_only({"Walking", "Running"}),
                                obs({"Running"}, "low"));
    CHECK(too_weak.label == "Walking");

    // Ties fall to label-set order.
    const auto tie = judge(prior_of({{"Waving", 0.5}, {"Walking", 0.5}}), feasible_only({"Walking", "Waving"}),
                           degraded_observer());
    CHECK(tie.label == "Walking");
}

TEST_CASE("judge never returns a vetoed label and is replayable")
{
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const char* amb[] = {"low", "medium", "high"};
    for (int trial = 0; trial < 2000; ++trial) {
        std::map<std::string, double> pi;
        double total = 0.0;
        for (const auto& l : kLabels.names())
            if (u(rng) < 0.4) total += pi[l] = u(rng);
        if (total == 0.0) pi["Walking"] = total = 1.0;
        for (auto& [l, v] : pi) v /= total;
        std::vector<std::string> feas;
        for (const auto& l : kLabels.names())
            if (u(rng) < 0.5) feas.push_back(l);
        if (feas.empty()) feas.push_back(kLabels.names()[rng() % 12]);
        std::vector<std::string> hyp;
        for (int k = 0; k < 3; ++k)
            if (u(rng) < 0.6) hyp.push_back(kLabels.names()[rng() % 12]);
        const auto prior = prior_of(pi);
        const auto phys = feasible_only(feas);
        const auto o = obs(hyp, amb[rng() % 3]);
        const auto a = judge(prior, phys, o), b = judge(prior, phys, o);
        CHECK(phys.is_feasible(a.label));
        CHECK(a.trace == b.trace);
    }
}

TEST_CASE("confidence formula")
{
    const auto unanimous = prior_of({{"Walking", 1.0}});
    CHECK(confidence(unanimous, "Walking", feasible_only({"Walking"}), obs({"Walking"}, "low")) == doctest::Approx(1.0));
    const auto split = prior_of({{"Walking", 0.5}, {"Running", 0.5}});
    CHECK(confidence(split, "Walking", feasible_only({"Walking", "Running"}), obs({"Running"}, "low")) ==
          doctest::Approx(0.375));
    PhysicistReport fb = feasible_only(kLabels.names());
    fb.fallback = true;
    const auto p = prior_of({{"Walking", 0.7}, {"Running", 0.3}});
    CHECK(confidence(p, "Walking", fb, degraded_observer()) == doctest::Approx(0.5 * 0.7 + 0.25 * 0.4));
}

TEST_CASE("observer requests are blind and parse scripted answers")
{
    ScriptedBackend b({{"observer/v0001/q1", "", fenced({{"hypotheses", {"Jumping", "Kicking"}}, {"ambiguity", "low"}}), ""},
                       {"observer/q2", "", fenced({{"hypotheses", {"Waving"}}, {"ambiguity", "medium"}}), ""},
                       {"observer/q3", "", "", "timeout"}});
    const Matrix m(6, 8, 1.0), r(6, 3, 1.0);
    const auto a = observe("q1", m, r, b, "Look closely.", "v0001", kLabels, Vocabulary::defaults());
    CHECK(a.hypotheses == std::vector<std::string>{"Jumping", "Kicking"});
    CHECK(a.ambiguity == "low");
    CHECK(observe("q2", m, r, b, "Look.", "v0001", kLabels, Vocabulary::defaults()).hypotheses[0] == "Waving");
    CHECK(code_of([&] { observe("q3", m, r, b, "Look.", "v0001", kLabels, Vocabulary::defaults()); }) == ErrorCode::Timeout);
    CHECK(code_of([&] { observe("q1", m, r, b, "Is it Jumping?", "v0001", kLabels, Vocabulary::defaults()); }) ==
          ErrorCode::BlindProtocolViolation);
    const auto d = degraded_observer();
    CHECK(d.hypotheses.empty());
    CHECK(d.ambiguity == "high");
}

TEST_CASE("verdict record")
{
    Verdict v;
    v.query_id = "q";
    v.label = "Walking";
    v.confidence = 0.9;
    v.prior = prior_of({{"Walking", 1.0}});
    v.neighbors = neighbors({{0.5, "Walking"}});
    v.physics = feasible_only({"Walking"});
    v.observer = obs({"Walking"}, "low");
    v.trace = {"step1", "step2"};
    const auto j = verdict_json(v);
    CHECK(j["query_id"] == "q");
    CHECK(j["label"] == "Walking");
    CHECK(j["confidence"].get<double>() == doctest::Approx(0.9));
    CHECK(j["trace"].size() == 2);
    CHECK(j.dump().find("Running") != std::string::npos);  // prior lists every class
}
