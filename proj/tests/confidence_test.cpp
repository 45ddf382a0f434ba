#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "actracer/confidence.hpp"
#include "actracer/errors.hpp"
#include "actracer/rng.hpp"

using namespace actracer;

namespace {

TestPool pool_from_traces(std::vector<std::vector<double>> traces) {
    std::vector<DataPoint> pts;
    for (std::size_t i = 0; i < traces.size(); ++i)
        pts.push_back({"p" + std::to_string(i), {0.0}, std::move(traces[i]), 0.5});
    return TestPool("conf", "acc", 1, std::move(pts));
}

} // namespace

TEST_CASE("aggregate: exact arithmetic on a hand trace") {
    const std::vector<double> trace = {0.2, 0.4, 0.8};
    CHECK(aggregate(trace, AggregationMethod::First) == 0.2);
    CHECK(aggregate(trace, AggregationMethod::Max) == 0.8);
    CHECK(aggregate(trace, AggregationMethod::Mean) == doctest::Approx(1.4 / 3.0).epsilon(1e-15));
    CHECK(aggregate(trace, AggregationMethod::GMean) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("aggregate: singleton trace and zero annihilator") {
    const std::vector<double> single = {0.5};
    for (auto m : kAggregationMethods) CHECK(aggregate(single, m) == 0.5);

    const std::vector<double> with_zero = {0.0, 0.6, 0.9};
    CHECK(aggregate(with_zero, AggregationMethod::GMean) == 0.0);
    CHECK(aggregate(with_zero, AggregationMethod::Mean) > 0.0);
    CHECK_THROWS_AS(aggregate(std::vector<double>{}, AggregationMethod::Mean), DataError);
}

TEST_CASE("gmean <= mean pointwise (AM-GM)") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> trace(1 + rng.next_below(10));
        for (double& t : trace) t = rng.next_unit();
        CHECK(aggregate(trace, AggregationMethod::GMean) <= aggregate(trace, AggregationMethod::Mean) + 1e-12);
    }
}

TEST_CASE("aggregate is permutation invariant except for first") {
    Rng rng(6);
    std::vector<double> trace(8);
    for (double& t : trace) t = rng.next_unit();
    std::vector<double> shuffled = trace;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(aggregate(trace, AggregationMethod::Max) == aggregate(shuffled, AggregationMethod::Max));
    CHECK(aggregate(trace, AggregationMethod::Mean) == doctest::Approx(aggregate(shuffled, AggregationMethod::Mean)));
    CHECK(aggregate(trace, AggregationMethod::GMean) ==
          doctest::Approx(aggregate(shuffled, AggregationMethod::GMean)));
    CHECK(aggregate(trace, AggregationMethod::First) == trace[0]);
}

TEST_CASE("histogram_entropy: degenerate, uniform, and two-bin cases") {
    std::vector<double> same(25, 0.71);
    CHECK(histogram_entropy(same, 10) == 0.0);

    std::vector<double> one_per_bin;
    for (int b = 0; b < 10; ++b) one_per_bin.push_back(0.05 + 0.1 * b);
    CHECK(histogram_entropy(one_per_bin, 10) == doctest::Approx(std::log2(10.0)).epsilon(1e-12));

    std::vector<double> coin;
    for (int i = 0; i < 5; ++i) coin.push_back(0.05);
    for (int i = 0; i < 5; ++i) coin.push_back(0.95);
    CHECK(histogram_entropy(coin, 10) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("histogram_entropy: v = 1.0 lands in the right-closed last bin") {
    const std::vector<double> vals = {1.0, 1.0, 1.0};
    CHECK(histogram_entropy(vals, 10) == 0.0);
    CHECK(histogram_entropy(vals, 10) <= std::log2(10.0));
}

TEST_CASE("select_by_entropy picks the argmax with enumeration-order ties") {
    // first, max, mean, gmean
    CHECK(select_by_entropy({2.121, 0.645, 2.634, 2.725}) == AggregationMethod::GMean);
    CHECK(select_by_entropy({0.0, 0.0, 0.0, 0.0}) == AggregationMethod::First);
    CHECK(select_by_entropy({1.0, 1.0, 0.5, 0.5}) == AggregationMethod::First);
}

TEST_CASE("select_aggregation: constant traces tie to first") {
    const TestPool pool = pool_from_traces({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}});
    const ConfidenceProfile p = select_aggregation(pool, 10);
    CHECK(p.method == AggregationMethod::First);
    for (double e : p.entropy_table) CHECK(e == 0.0);
}

TEST_CASE("select_aggregation: mean separates populations that first/max cannot") {
    // Two populations share first token 0.5 and max 0.9; their means differ.
    std::vector<std::vector<double>> traces;
    for (int i = 0; i < 10; ++i) traces.push_back({0.5, 0.9, 0.05, 0.05});
    for (int i = 0; i < 10; ++i) traces.push_back({0.5, 0.9, 0.85, 0.85});
    const TestPool pool = pool_from_traces(std::move(traces));
    const ConfidenceProfile p = select_aggregation(pool, 10);

    const std::size_t first_i = 0, max_i = 1, mean_i = 2;
    CHECK(p.entropy_table[first_i] == 0.0);
    CHECK(p.entropy_table[max_i] == 0.0);
    CHECK(p.entropy_table[mean_i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((p.method == AggregationMethod::Mean || p.method == AggregationMethod::GMean));
    // Direct histogram count: two equally filled bins -> 1 bit.
    CHECK(histogram_entropy(p.values, 10) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("select_aggregation is invariant to pool reordering") {
    Rng rng(9);
    std::vector<std::vector<double>> traces;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> t(1 + rng.next_below(6));
        for (double& v : t) v = rng.next_unit();
        traces.push_back(std::move(t));
    }
    auto reversed = traces;
    std::reverse(reversed.begin(), reversed.end());
    const ConfidenceProfile a = select_aggregation(pool_from_traces(std::move(traces)), 10);
    const ConfidenceProfile b = select_aggregation(pool_from_traces(std::move(reversed)), 10);
    CHECK(a.method == b.method);
    CHECK(a.entropy_table == b.entropy_table);
}

TEST_CASE("entropy bounds hold on random values") {
    Rng rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> vals(1 + rng.next_below(100));
        for (double& v : vals) v = rng.next_unit();
        const double h = histogram_entropy(vals, 10);
        CHECK(h >= 0.0);
        CHECK(h <= std::log2(10.0) + 1e-12);
    }
}
