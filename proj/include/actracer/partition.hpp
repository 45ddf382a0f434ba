#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "actracer/reduce.hpp"

namespace actracer {

// Size-balanced clustering: cluster sizes differ by at most one, every
// cluster non-empty. objective is the total squared distance of each point
// to its assigned center.
struct Partition {
    int k = 0;
    std::vector<int> assignments; // length D, values in [0, k)
    Eigen::MatrixXd centers;      // k x dim
    double objective = 0.0;
};

// (cluster_count, inertia) evaluations collected by the cluster-count search.
struct SearchHistory {
    std::vector<std::pair<int, double>> evaluated; // sorted by cluster_count, counts unique
    int lb = 0;
    int ub = 0;

    void add(int cluster_count, double inertia_value);
    bool contains(int cluster_count) const;
};

// Capacity-constrained minimum-cost assignment via an epsilon-scaling
// auction. cost is D x k, capacities sum to D. The result satisfies
// eps-complementary slackness at the terminal scale, so its total cost is
// within eps*D of the optimal transportation cost.
std::vector<int> balanced_assign(const Eigen::MatrixXd& cost, const std::vector<int>& capacities);

// Lloyd iterations alternating capacity-constrained assignment (capacities
// ceil(D/k) / floor(D/k), lower cluster indices take the larger size) with
// mean center updates. Seeded k-means++ initialization; the objective is
// non-increasing across iterations by construction.
Partition balanced_kmeans(const FeatureMatrix& features, int k, std::uint64_t seed, int max_iter = 50);

// Sum over points of the squared distance to the nearest center (the
// minimum ranges over all centers, not the balanced assignment).
double inertia(const FeatureMatrix& features, const Eigen::MatrixXd& centers);

// Next cluster count to evaluate: bisect the adjacent-pair interval with the
// largest normalized diagonal length sqrt(dx^2 + dy^2), both axes scaled to
// [0,1] over the history range. Intervals of width <= 1 are skipped; ties go
// to the leftmost interval. nullopt when nothing is splittable.
std::optional<int> adaptive_next(const SearchHistory& history);

// Kneedle knee of the cluster-count/inertia curve (sensitivity 1,
// convex-decreasing mode) after isotonic cleanup. nullopt when the curve has
// no knee (e.g. it is linear).
std::optional<int> find_elbow(const SearchHistory& history);

// Evaluates (count, inertia) at lb, ub and w-2 adaptively chosen counts,
// then returns the elbow; falls back to lb when no elbow exists.
int clusearch(const FeatureMatrix& features, int w, int lb, int ub, std::uint64_t seed,
              SearchHistory* history_out = nullptr);

} // namespace actracer
