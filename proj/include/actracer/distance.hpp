#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace actracer {

enum class DistanceMetric { KS, WD };

std::string to_string(DistanceMetric m);
DistanceMetric distance_from_string(const std::string& s);

struct DipResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    int replicates = 0;
};

// Two-sample Kolmogorov-Smirnov statistic: sup |ECDF_a - ECDF_b| by a
// merged-sort sweep.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// 1-D Wasserstein distance between empirical distributions:
// integral of |ECDF_a - ECDF_b| over the merged support.
double wasserstein1(std::span<const double> a, std::span<const double> b);

// Kernels for callers that already hold sorted samples.
double ks_sorted(std::span<const double> a_sorted, std::span<const double> b_sorted);
double wasserstein1_sorted(std::span<const double> a_sorted, std::span<const double> b_sorted);

// Same kernels with one extra value virtually inserted into b; used by the
// greedy intra-cluster selection to score candidates without copying.
double ks_sorted_plus(std::span<const double> a_sorted, std::span<const double> b_sorted, double extra);
double wasserstein1_sorted_plus(std::span<const double> a_sorted, std::span<const double> b_sorted, double extra);

// Hartigan & Hartigan dip statistic: half the maximum deviation of the ECDF
// from the nearest unimodal CDF, via the iterated greatest-convex-minorant /
// least-concave-majorant fit. Requires n >= 4.
double dip_statistic(std::vector<double> values);

// Monte Carlo null distribution of the dip for uniform samples of size n;
// replicate r draws from derive_seed(seed, "dip_null", r), so the p-value is
// independent of evaluation order.
class DipNull {
public:
    DipNull(std::size_t n, int replicates, std::uint64_t seed);
    double pvalue(double statistic) const;
    int replicates() const { return static_cast<int>(dips_.size()); }

private:
    std::vector<double> dips_; // sorted ascending
};

double dip_pvalue(double statistic, std::size_t n, int replicates, std::uint64_t seed);

DipResult dip_test(std::span<const double> values, int replicates, std::uint64_t seed);

// Dip p-value below alpha reads as multimodal -> Wasserstein; otherwise K-S.
// Samples too small for the dip (n < 4) fall back to K-S.
DistanceMetric select_metric(std::span<const double> values, double alpha = 0.05, int replicates = 2000,
                             std::uint64_t seed = 0);

} // namespace actracer
