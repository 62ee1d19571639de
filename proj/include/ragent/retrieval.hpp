#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ragent/features.hpp"

namespace ragent {

inline constexpr double kAnovaEpsilon = 1e-8;

struct SubspaceSelection {
    FeatureArray f_scores{};
    std::vector<std::size_t> selected;  ///< descending F, ties -> smaller index
    double epsilon = kAnovaEpsilon;

    std::size_t k() const noexcept { return selected.size(); }
    friend bool operator==(const SubspaceSelection&, const SubspaceSelection&) = default;
};

/// F_j = between-class variance / (within-class variance + eps), population weights n_c / N.
FeatureArray anova_scores(std::span<const FeatureArray> features, std::span<const std::string> labels,
                          double epsilon = kAnovaEpsilon);

SubspaceSelection select_subspace(const FeatureArray& f_scores, std::size_t k, double epsilon = kAnovaEpsilon);

/// Subspace spanning every dimension in index order, used when no class structure is available.
SubspaceSelection full_subspace();

/// One retrievable precedent in standardized coordinates.
struct IndexedEntry {
    std::string id;
    std::string label;
    FeatureArray z{};
};

struct Neighbor {
    std::string entry_id;
    double distance = 0.0;
    std::string label;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

using NeighborSet = std::vector<Neighbor>;

double subspace_distance(const FeatureArray& a, const FeatureArray& b, std::span<const std::size_t> dims);

/// Exact top-M by Euclidean distance over the selected dimensions; ties by entry id.
NeighborSet knn(const FeatureArray& query_z, std::span<const IndexedEntry> kb, const SubspaceSelection& subspace,
                std::size_t m);

}  // namespace ragent
