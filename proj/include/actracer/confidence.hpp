#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "actracer/pool.hpp"

namespace actracer {

enum class AggregationMethod { First, Max, Mean, GMean };

// Enumeration order doubles as the tie-break order for entropy selection.
constexpr std::array<AggregationMethod, 4> kAggregationMethods = {
    AggregationMethod::First, AggregationMethod::Max, AggregationMethod::Mean, AggregationMethod::GMean};

std::string to_string(AggregationMethod m);
AggregationMethod aggregation_from_string(const std::string& s);

// One aggregated confidence per pool point, in pool order, plus the
// per-method entropies that drove (or would drive) the selection.
struct ConfidenceProfile {
    AggregationMethod method = AggregationMethod::First;
    std::vector<double> values;
    std::array<double, 4> entropy_table{}; // indexed by kAggregationMethods order
};

// first -> trace[0]; max/mean as named; gmean is (prod t_i)^(1/m), defined
// as 0 whenever the trace contains a 0.
double aggregate(std::span<const double> trace, AggregationMethod method);

// Shannon entropy (base 2) of an equal-width histogram over the fixed range
// [0,1]; the last bin is right-closed. Empty bins contribute nothing.
double histogram_entropy(std::span<const double> values, int bins);

// argmax-entropy choice with ties broken in enumeration order.
AggregationMethod select_by_entropy(const std::array<double, 4>& entropy_table);

ConfidenceProfile select_aggregation(const PoolView& pool, int bins = 10);
ConfidenceProfile select_aggregation(const TestPool& pool, int bins = 10);

// Profile for one fixed method (entropy table still populated for reports).
ConfidenceProfile profile_for_method(const PoolView& pool, AggregationMethod method, int bins = 10);

} // namespace actracer
