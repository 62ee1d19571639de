#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "ragent/retrieval.hpp"

using namespace ragent;

namespace {

FeatureArray vec(std::initializer_list<double> head)
{
    FeatureArray a{};
    std::copy(head.begin(), head.end(), a.begin());
    return a;
}

std::vector<IndexedEntry> random_kb(std::mt19937_64& rng, std::size_t n)
{
    std::normal_distribution<double> g;
    std::vector<IndexedEntry> kb(n);
    for (std::size_t k = 0; k < n; ++k) {
        char id[16];
        std::snprintf(id, sizeof id, "e%04zu", k);
        kb[k].id = id;
        kb[k].label = "c" + std::to_string(k % 3);
        for (double& v : kb[k].z) v = g(rng);
    }
    return kb;
}

}  // namespace

TEST_CASE("ANOVA scores on crafted classes")
{
    std::vector<FeatureArray> x = {vec({0, 7}), vec({2, 7}), vec({4, 7}), vec({6, 7})};
    const std::vector<std::string> y = {"a", "a", "b", "b"};
    const auto f = anova_scores(x, y);
    CHECK(f[0] == doctest::Approx(4.0 / (1.0 + kAnovaEpsilon)).epsilon(1e-12));
    CHECK(f[1] == 0.0);

    std::vector<FeatureArray> sep = {vec({1}), vec({1}), vec({3}), vec({3})};
    const auto g = anova_scores(sep, y);
    CHECK(g[0] == doctest::Approx(1.0 / kAnovaEpsilon));
    CHECK(std::isfinite(g[0]));

    std::vector<FeatureArray> perm = {x[2], x[0], x[3], x[1]};
    const std::vector<std::string> py = {"b", "a", "b", "a"};
    CHECK(anova_scores(perm, py) == f);
}

TEST_CASE("subspace selection ranks by F with index tie-break")
{
    CHECK(select_subspace(vec({3, 1, 2}), 2).selected == std::vector<std::size_t>{0, 2});
    CHECK(select_subspace(vec({5, 5, 1}), 1).selected == std::vector<std::size_t>{0});
    const auto all = select_subspace(vec({}), 25);
    CHECK(all.k() == 25);
    CHECK(full_subspace().k() == 25);
    CHECK_THROWS(select_subspace(vec({}), 0));
    CHECK_THROWS(select_subspace(vec({}), 26));
}

TEST_CASE("knn on hand distances")
{
    std::vector<IndexedEntry> kb = {{"A", "x", vec({0, 1})}, {"B", "y", vec({1, 1})}, {"C", "x", vec({3, 0})}};
    const auto nn = knn(vec({0, 0}), kb, full_subspace(), 2);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0].entry_id == "A");
    CHECK(nn[0].distance == doctest::Approx(1.0));
    CHECK(nn[1].entry_id == "B");
    CHECK(nn[1].distance == doctest::Approx(std::sqrt(2.0)));

    const auto self = knn(kb[2].z, kb, full_subspace(), 1);
    CHECK(self[0].entry_id == "C");
    CHECK(self[0].distance == 0.0);
    CHECK(knn(vec({}), kb, full_subspace(), 10).size() == 3);
}

TEST_CASE("knn equals exhaustive sort, is order-invariant and prefix-consistent")
{
    std::mt19937_64 rng(31);
    auto kb = random_kb(rng, 200);
    std::normal_distribution<double> g;
    std::vector<FeatureArray> zs;
    std::vector<std::string> ys;
    for (const auto& e : kb) {
        zs.push_back(e.z);
        ys.push_back(e.label);
    }
    const auto sub = select_subspace(anova_scores(zs, ys), 10);
    for (int q = 0; q < 20; ++q) {
        FeatureArray z{};
        for (double& v : z) v = g(rng);
        std::vector<Neighbor> brute;
        for (const auto& e : kb) brute.push_back({e.id, subspace_distance(z, e.z, sub.selected), e.label});
        std::sort(brute.begin(), brute.end(), [](const Neighbor& a, const Neighbor& b) {
            return a.distance != b.distance ? a.distance < b.distance : a.entry_id < b.entry_id;
        });
        const auto nn = knn(z, kb, sub, 10);
        for (std::size_t k = 0; k < 10; ++k) CHECK(nn[k] == brute[k]);

        auto shuffled = kb;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(knn(z, shuffled, sub, 10) == nn);
        for (std::size_t m = 1; m < 10; ++m) {
            const auto head = knn(z, kb, sub, m);
            CHECK(std::equal(head.begin(), head.end(), nn.begin()));
        }
        CHECK(subspace_distance(z, kb[0].z, sub.selected) <= subspace_distance(z, kb[0].z, full_subspace().selected));
    }
}
