#include "actracer/confidence.hpp"

#include <algorithm>
#include <cmath>

#include "actracer/errors.hpp"

namespace actracer {

std::string to_string(AggregationMethod m) {
    switch (m) {
    case AggregationMethod::First: return "first";
    case AggregationMethod::Max: return "max";
    case AggregationMethod::Mean: return "mean";
    case AggregationMethod::GMean: return "gmean";
    }
    return "first";
}

AggregationMethod aggregation_from_string(const std::string& s) {
    if (s == "first") return AggregationMethod::First;
    if (s == "max") return AggregationMethod::Max;
    if (s == "mean") return AggregationMethod::Mean;
    if (s == "gmean") return AggregationMethod::GMean;
    throw UsageError("unknown aggregation method '" + s + "' (expected first|max|mean|gmean)");
}

double aggregate(std::span<const double> trace, AggregationMethod method) {
    if (trace.empty()) throw DataError("aggregate: empty trace");
    switch (method) {
    case AggregationMethod::First:
        return trace[0];
    case AggregationMethod::Max:
        return *std::max_element(trace.begin(), trace.end());
    case AggregationMethod::Mean: {
        double s = 0.0;
        for (double t : trace) s += t;
        return s / static_cast<double>(trace.size());
    }
    case AggregationMethod::GMean: {
        double logsum = 0.0;
        for (double t : trace) {
            if (t == 0.0) return 0.0;
            logsum += std::log(t);
        }
        return std::exp(logsum / static_cast<double>(trace.size()));
    }
    }
    return 0.0;
}

double histogram_entropy(std::span<const double> values, int bins) {
    if (values.empty()) throw DataError("histogram_entropy: empty values");
    if (bins < 1) throw DataError("histogram_entropy: bins must be positive");
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        int b = static_cast<int>(v * bins);
        if (b >= bins) b = bins - 1; // v == 1.0 lands in the last bin
        if (b < 0) b = 0;
        ++counts[static_cast<std::size_t>(b)];
    }
    const double n = static_cast<double>(values.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

AggregationMethod select_by_entropy(const std::array<double, 4>& entropy_table) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < entropy_table.size(); ++i)
        if (entropy_table[i] > entropy_table[best]) best = i;
    return kAggregationMethods[best];
}

namespace {

std::vector<double> values_for(const PoolView& pool, AggregationMethod method) {
    std::vector<double> values(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) values[i] = aggregate(pool.trace(i), method);
    return values;
}

} // namespace

ConfidenceProfile select_aggregation(const PoolView& pool, int bins) {
    if (pool.size() == 0) throw DataError("select_aggregation: empty pool");
    std::array<std::vector<double>, 4> all;
    std::array<double, 4> entropies{};
    for (std::size_t i = 0; i < kAggregationMethods.size(); ++i) {
        all[i] = values_for(pool, kAggregationMethods[i]);
        entropies[i] = histogram_entropy(all[i], bins);
    }
    const AggregationMethod method = select_by_entropy(entropies);
    ConfidenceProfile profile;
    profile.method = method;
    profile.entropy_table = entropies;
    profile.values = std::move(all[static_cast<std::size_t>(std::distance(
        kAggregationMethods.begin(), std::find(kAggregationMethods.begin(), kAggregationMethods.end(), method)))]);
    return profile;
}

ConfidenceProfile select_aggregation(const TestPool& pool, int bins) {
    return select_aggregation(PoolView(pool), bins);
}

ConfidenceProfile profile_for_method(const PoolView& pool, AggregationMethod method, int bins) {
    if (pool.size() == 0) throw DataError("profile_for_method: empty pool");
    ConfidenceProfile profile;
    profile.method = method;
    for (std::size_t i = 0; i < kAggregationMethods.size(); ++i) {
        auto values = values_for(pool, kAggregationMethods[i]);
        profile.entropy_table[i] = histogram_entropy(values, bins);
        if (kAggregationMethods[i] == method) profile.values = std::move(values);
    }
    return profile;
}

} // namespace actracer
