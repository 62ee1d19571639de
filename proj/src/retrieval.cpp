#include "ragent/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ragent/error.hpp"

namespace ragent {

FeatureArray anova_scores(std::span<const FeatureArray> features, std::span<const std::string> labels, double epsilon)
{
    if (features.size() != labels.size()) throw Error(ErrorCode::InsufficientData, "features and labels differ in length");
    std::map<std::string, std::vector<std::size_t>> classes;
    for (std::size_t s = 0; s < labels.size(); ++s) classes[labels[s]].push_back(s);
    if (classes.size() < 2) throw Error(ErrorCode::SingleClass, "ANOVA ranking needs at least two classes");

    const double total = static_cast<double>(features.size());
    FeatureArray f{};
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
        double grand = 0.0;
        for (const auto& x : features) grand += x[j];
        grand /= total;
        double between = 0.0, within = 0.0;
        for (const auto& [label, members] : classes) {
            const double nc = static_cast<double>(members.size());
            double mu = 0.0;
            for (std::size_t s : members) mu += features[s][j];
            mu /= nc;
            double var = 0.0;
            for (std::size_t s : members) var += (features[s][j] - mu) * (features[s][j] - mu);
            var /= nc;
            between += nc / total * (mu - grand) * (mu - grand);
            within += nc / total * var;
        }
        f[j] = between / (within + epsilon);
    }
    return f;
}

SubspaceSelection select_subspace(const FeatureArray& f_scores, std::size_t k, double epsilon)
{
    if (k < 1 || k > kFeatureDim) throw Error(ErrorCode::BadK, "K must lie in [1, 25], got " + std::to_string(k));
    std::vector<std::size_t> order(kFeatureDim);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f_scores[a] > f_scores[b]; });
    order.resize(k);
    return {f_scores, std::move(order), epsilon};
}

SubspaceSelection full_subspace()
{
    SubspaceSelection s;
    s.selected.resize(kFeatureDim);
    std::iota(s.selected.begin(), s.selected.end(), 0);
    return s;
}

double subspace_distance(const FeatureArray& a, const FeatureArray& b, std::span<const std::size_t> dims)
{
    double s = 0.0;
    for (std::size_t j : dims) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

NeighborSet knn(const FeatureArray& query_z, std::span<const IndexedEntry> kb, const SubspaceSelection& subspace,
                std::size_t m)
{
    if (kb.empty()) throw Error(ErrorCode::EmptyKB, "knowledge base has no retrievable entries");
    NeighborSet all;
    all.reserve(kb.size());
    for (const IndexedEntry& e : kb) all.push_back({e.id, subspace_distance(query_z, e.z, subspace.selected), e.label});
    const auto less = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.entry_id < b.entry_id;
    };
    const std::size_t keep = std::min(m, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), less);
    all.resize(keep);
    return all;
}

}  // namespace ragent
