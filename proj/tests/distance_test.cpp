#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "actracer/distance.hpp"
#include "actracer/errors.hpp"
#include "actracer/rng.hpp"
#include "oracles.hpp"

using namespace actracer;

namespace {

std::vector<double> random_sample(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = lo + (hi - lo) * rng.next_unit();
    return v;
}

} // namespace

TEST_CASE("ks_statistic: hand values") {
    const std::vector<double> a = {1, 2, 3, 4};
    CHECK(ks_statistic(a, a) == 0.0);
    CHECK(ks_statistic(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
    CHECK(ks_statistic(a, std::vector<double>{3, 4, 5, 6}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("wasserstein1: hand values") {
    const std::vector<double> a = {0.3, 0.7};
    CHECK(wasserstein1(a, a) == 0.0);
    CHECK(wasserstein1(std::vector<double>{0}, std::vector<double>{1}) == doctest::Approx(1.0));
    CHECK(wasserstein1(std::vector<double>{1, 2}, std::vector<double>{3, 4}) == doctest::Approx(2.0));
}

TEST_CASE("distances match brute-force references on random pairs") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_sample(rng, 1 + rng.next_below(50), -2.0, 3.0);
        const auto b = random_sample(rng, 1 + rng.next_below(50), -2.0, 3.0);
        CHECK(ks_statistic(a, b) == doctest::Approx(oracles::ks_bruteforce(a, b)).epsilon(1e-12));
        CHECK(wasserstein1(a, b) == doctest::Approx(oracles::w1_bruteforce(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("distance properties: symmetry, W1 equal sizes, translation and scale") {
    Rng rng(4);
    const auto a = random_sample(rng, 20);
    const auto b = random_sample(rng, 20);
    CHECK(ks_statistic(a, b) == ks_statistic(b, a));
    CHECK(wasserstein1(a, b) == doctest::Approx(wasserstein1(b, a)).epsilon(1e-12));

    // Equal sizes: W1 equals the mean absolute difference of sorted samples.
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double pair_sum = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) pair_sum += std::abs(sa[i] - sb[i]);
    CHECK(wasserstein1(a, b) == doctest::Approx(pair_sum / sa.size()).epsilon(1e-12));

    auto shift = [](std::vector<double> v, double c) {
        for (double& x : v) x += c;
        return v;
    };
    auto scale = [](std::vector<double> v, double c) {
        for (double& x : v) x *= c;
        return v;
    };
    CHECK(wasserstein1(shift(a, 2.5), shift(b, 2.5)) == doctest::Approx(wasserstein1(a, b)).epsilon(1e-12));
    CHECK(wasserstein1(scale(a, 3.0), scale(b, 3.0)) == doctest::Approx(3.0 * wasserstein1(a, b)).epsilon(1e-12));

    // Triangle inequality spot-check on random triples.
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_sample(rng, 1 + rng.next_below(15));
        const auto y = random_sample(rng, 1 + rng.next_below(15));
        const auto z = random_sample(rng, 1 + rng.next_below(15));
        CHECK(wasserstein1(x, z) <= wasserstein1(x, y) + wasserstein1(y, z) + 1e-12);
    }
}

TEST_CASE("sorted kernels agree with the public functions, including the plus-one view") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto a = random_sample(rng, 1 + rng.next_below(30));
        auto b = random_sample(rng, 1 + rng.next_below(30));
        const double extra = rng.next_unit();
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        auto b_plus = b;
        b_plus.insert(std::upper_bound(b_plus.begin(), b_plus.end(), extra), extra);
        CHECK(ks_sorted_plus(a, b, extra) == ks_sorted(a, b_plus));
        CHECK(wasserstein1_sorted_plus(a, b, extra) == doctest::Approx(wasserstein1_sorted(a, b_plus)).epsilon(1e-14));
    }
}

TEST_CASE("empty samples are rejected") {
    const std::vector<double> a = {0.5};
    CHECK_THROWS_AS(ks_statistic(a, {}), DataError);
    CHECK_THROWS_AS(wasserstein1({}, a), DataError);
}

TEST_CASE("dip: equally spaced samples sit at the 1/(2n) floor, matching the modal-fit oracle") {
    for (std::size_t n : {4, 5, 8, 12}) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
        const double d = dip_statistic(v);
        CHECK(d == doctest::Approx(0.5 / static_cast<double>(n)).epsilon(1e-9));
        CHECK(d == doctest::Approx(oracles::dip_bruteforce(v)).epsilon(1e-6));
    }
}

TEST_CASE("dip: balanced two-point masses reach the 0.25 ceiling") {
    std::vector<double> v;
    for (int i = 0; i < 50; ++i) v.push_back(0.0);
    for (int i = 0; i < 50; ++i) v.push_back(1.0);
    const double two_mass = dip_statistic(v);
    CHECK(two_mass == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(two_mass == doctest::Approx(oracles::dip_bruteforce(v)).epsilon(1e-6));

    std::vector<double> spaced(100);
    for (int i = 0; i < 100; ++i) spaced[static_cast<std::size_t>(i)] = i;
    CHECK(two_mass > dip_statistic(spaced));
}

TEST_CASE("dip is invariant under increasing affine transforms") {
    Rng rng(6);
    const auto v = random_sample(rng, 60);
    std::vector<double> w(v);
    for (double& x : w) x = 3.7 * x - 11.0;
    CHECK(dip_statistic(v) == doctest::Approx(dip_statistic(w)).epsilon(1e-12));
}

TEST_CASE("dip properties: floor 1/(2n) and the brute-force lower bound") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 4 + rng.next_below(9); // n in [4, 12]
        const auto v = random_sample(rng, n);
        const double d = dip_statistic(v);
        CHECK(d >= 0.5 / static_cast<double>(n) - 1e-12);
        CHECK(d <= 0.25 + 1e-12);
        // The relaxed modal-interval search can only report less.
        CHECK(d >= oracles::dip_bruteforce(v) - 1e-6);
    }
}

TEST_CASE("dip rejects tiny samples") {
    CHECK_THROWS_AS(dip_statistic({0.1, 0.2, 0.3}), DataError);
}

TEST_CASE("dip_pvalue: edge statistics and determinism") {
    CHECK(dip_pvalue(0.0, 50, 200, 9) == 1.0);
    CHECK(dip_pvalue(0.5, 50, 200, 9) == 0.0); // above every replicate
    CHECK(dip_pvalue(0.03, 50, 200, 9) == dip_pvalue(0.03, 50, 200, 9));
    CHECK_THROWS_AS(dip_pvalue(0.1, 50, 50, 9), DataError);
}

TEST_CASE("select_metric: unimodal -> KS, bimodal -> WD, alpha 0 -> always KS") {
    Rng rng(8);
    std::vector<double> unimodal(400);
    for (double& x : unimodal) x = rng.next_normal();
    CHECK(select_metric(unimodal, 0.05, 500, 3) == DistanceMetric::KS);

    std::vector<double> bimodal(400);
    for (std::size_t i = 0; i < bimodal.size(); ++i)
        bimodal[i] = rng.next_normal() + (i % 2 == 0 ? -4.0 : 4.0);
    CHECK(select_metric(bimodal, 0.05, 500, 3) == DistanceMetric::WD);
    CHECK(select_metric(bimodal, 0.0, 500, 3) == DistanceMetric::KS);
}
