#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "actracer/confidence.hpp"
#include "actracer/distance.hpp"
#include "actracer/partition.hpp"
#include "actracer/pool.hpp"
#include "actracer/reduce.hpp"

namespace actracer {

enum class Method { AcTracer, Random, CS };
enum class InterRule { McUcb, Random };
enum class IntraRule { Greedy, Random };

std::string to_string(Method m);
std::string to_string(InterRule r);
std::string to_string(IntraRule r);
Method method_from_string(const std::string& s);
InterRule inter_from_string(const std::string& s);
IntraRule intra_from_string(const std::string& s);

struct SamplerConfig {
    Method method = Method::AcTracer;
    InterRule inter = InterRule::McUcb;
    IntraRule intra = IntraRule::Greedy;
    std::optional<int> fixed_k;                       // bypasses the cluster-count search
    std::optional<AggregationMethod> agg;             // nullopt = entropy-selected
    std::optional<DistanceMetric> dist;               // nullopt = dip-selected
    int bins = 10;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    std::optional<std::size_t> min_budget;            // smallest budget in the experiment;
                                                      // bounds the cluster-count search
    int clusearch_w = 20;
    int clusearch_lb = 2;
    int dip_replicates = 2000;
    double dip_alpha = 0.05;
};

// Live bandit state for one cluster. Mean and standard deviation are
// recomputed exactly from the stored labels after every update.
struct ClusterState {
    std::vector<std::size_t> members;       // pool indices, ascending
    std::vector<double> member_conf_sorted; // confidences of all members
    std::vector<std::size_t> sampled;       // pool indices in draw order
    std::vector<double> sampled_conf_sorted;
    std::vector<double> labels;
    double mean = 0.0;
    double stddev = 0.0; // population form (divide by T)
    double weight = 0.0; // |C_k| / |P|

    std::size_t count() const { return sampled.size(); }
    bool exhausted() const { return sampled.size() == members.size(); }
    void recompute_moments();
};

struct Estimate {
    double value = 0.0;
    std::vector<double> cluster_means;
    std::vector<double> weights;
};

struct TraceStep {
    std::size_t t = 0; // 1-based draw index
    int cluster = -1;  // stratum/bin index, -1 when the method has none
    std::string id;
    double label = 0.0;
};

struct SampleTrace {
    std::vector<TraceStep> steps;
    Estimate estimate;
    int k = 0;                              // strata count used (0 for plain random)
    std::vector<int> cluster_sizes;         // partition sizes, when a partition exists
    std::optional<AggregationMethod> agg;   // resolved aggregation, when used
    std::optional<DistanceMetric> dist;     // resolved distance, when used
    std::optional<DipResult> dip;           // dip test behind an auto distance choice
    std::array<double, 4> entropy_table{};  // per-method entropies, when computed
};

// Exploration coefficient sqrt(log(2 * n^(9/2))), natural log.
double ucb_beta(std::size_t n);

// Upper-confidence scores (w_k / T_k) * (stddev_k + 2*beta / sqrt(T_k));
// exhausted clusters score -infinity. Requires two samples per live cluster.
std::vector<double> mcucb_scores(const std::vector<ClusterState>& clusters, double beta);

// Greedy pick: the candidate whose insertion into the selected sample
// minimizes the distance to the cluster's confidence distribution; ties
// resolve to the lowest pool index. Candidates are (pool index, confidence)
// pairs; selected_sorted is the current selection's confidences, ascending.
std::size_t intra_select(std::span<const double> cluster_conf_sorted, std::span<const double> selected_conf_sorted,
                         std::span<const std::pair<std::size_t, double>> candidates, DistanceMetric metric);

SampleTrace run_actracer(const PoolView& pool, const FeatureMatrix& reduced, const SamplerConfig& config,
                         LabelOracle& oracle);

SampleTrace run_random(const PoolView& pool, LabelOracle& oracle, std::size_t budget, std::uint64_t seed);

// Confidence-stratified baseline: equal-width bins over [0,1] of the
// entropy-selected aggregated confidences, proportional allocation with
// largest-remainder rounding, uniform sampling within bins.
SampleTrace run_cs_sampling(const PoolView& pool, LabelOracle& oracle, std::size_t budget, int bins,
                            std::uint64_t seed);

// Dispatch on config.method; reduced may be empty for random/cs.
SampleTrace run_sampler(const PoolView& pool, const FeatureMatrix& reduced, const SamplerConfig& config,
                        LabelOracle& oracle);

} // namespace actracer
