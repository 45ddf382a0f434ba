#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "actracer/pool.hpp"
#include "actracer/reduce.hpp"
#include "actracer/sampler.hpp"

namespace actracer {

struct CurvePoint {
    double proportion = 0.0;
    std::size_t budget = 0;
    double median_error = 0.0;
    std::vector<double> raw_errors; // by repeat index
};

struct Curve {
    std::vector<CurvePoint> points; // proportions strictly increasing
    int repeats = 0;
};

struct EstimateReport {
    std::string method;
    std::string pool_name;
    std::size_t pool_size = 0;
    SamplerConfig config;            // seed field holds the base seed
    std::array<double, 4> entropy_table{};
    std::optional<AggregationMethod> resolved_agg;
    std::optional<DistanceMetric> resolved_dist;
    std::optional<DipResult> dip;
    bool absolute_error = false;     // true when true_value == 0
    double true_value = 0.0;
    Curve curve;
    double auc = 0.0;
};

// Parses "start:stop:step" (e.g. "0.05:0.50:0.03") into a strictly
// increasing proportion grid; also accepts a single value.
std::vector<double> parse_proportions(const std::string& literal);

// round-half-away-from-zero of proportion * D.
std::size_t budget_for(double proportion, std::size_t pool_size);

double relative_error(double estimate, double truth, bool* absolute_used = nullptr);

// Called once per completed run (serialized under a lock when jobs > 1).
using TraceObserver = std::function<void(std::size_t proportion_index, int repeat, const SampleTrace&)>;

// One sampler run per (proportion, repeat); repeat r uses seed base_seed + r
// (the same seed set at every proportion). Auto aggregation/distance choices
// are resolved once per pool with the base seed and pinned for all runs;
// clustering is recomputed inside each run with the run's seed. jobs > 1
// executes independent runs on a small thread pool.
Curve error_curve(const TestPool& pool, const FeatureMatrix& reduced, const SamplerConfig& base_config,
                  const std::vector<double>& proportions, int repeats, std::uint64_t base_seed, int jobs = 1,
                  const TraceObserver& observer = {});

// Trapezoidal integral of the median-error curve over the proportion axis.
double auc(const Curve& curve);

EstimateReport build_report(const TestPool& pool, const FeatureMatrix& reduced, const SamplerConfig& base_config,
                            const std::vector<double>& proportions, int repeats, std::uint64_t base_seed,
                            int jobs = 1);

void save_report(const EstimateReport& report, const std::filesystem::path& path);
EstimateReport load_report(const std::filesystem::path& path);

// Side-by-side AUC table; the minimum-AUC method(s) are marked best.
struct ComparisonRow {
    std::string method;
    double auc = 0.0;
    bool best = false;
    std::vector<double> median_errors;
};

struct Comparison {
    std::vector<double> proportions;
    std::vector<ComparisonRow> rows;
};

Comparison compare(const std::vector<EstimateReport>& reports);
void save_comparison_csv(const Comparison& comparison, const std::filesystem::path& path);

} // namespace actracer
