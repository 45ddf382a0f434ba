#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "actracer/errors.hpp"
#include "actracer/harness.hpp"
#include "actracer/synth.hpp"

using namespace actracer;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "actracer_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

SynthSpec small_spec(std::uint64_t seed) {
    SynthSpec s;
    s.name = "harness";
    s.true_k = 2;
    s.dims = 2;
    s.points_per_cluster = 50;
    s.cluster_separation = 8.0;
    s.accuracies = {0.8, 0.2};
    s.trace_alpha = {3.0, 2.0};
    s.trace_beta = {2.0, 3.0};
    s.trace_len_min = 1;
    s.trace_len_max = 5;
    s.seed = seed;
    return s;
}

Curve constant_curve(std::vector<double> props, double err) {
    Curve c;
    c.repeats = 1;
    for (double p : props) c.points.push_back({p, 0, err, {err}});
    return c;
}

} // namespace

TEST_CASE("parse_proportions: grid literal and single value") {
    const auto grid = parse_proportions("0.05:0.50:0.03");
    CHECK(grid.size() == 16);
    CHECK(grid.front() == doctest::Approx(0.05));
    CHECK(grid.back() == doctest::Approx(0.50));
    CHECK(parse_proportions("0.3").size() == 1);
    CHECK_THROWS_AS(parse_proportions("0.5:0.1:0.1"), UsageError);
    CHECK_THROWS_AS(parse_proportions("0:0.5:0.1"), UsageError);
    CHECK_THROWS_AS(parse_proportions("abc"), UsageError);
}

TEST_CASE("budget_for rounds half away from zero") {
    CHECK(budget_for(0.05, 1000) == 50);
    CHECK(budget_for(0.05, 810) == 41); // 40.5 rounds up
    CHECK(budget_for(1.0, 77) == 77);
}

TEST_CASE("auc: rectangle, zero, triangle, and linearity") {
    const std::vector<double> grid = parse_proportions("0.05:0.50:0.03");
    CHECK(auc(constant_curve(grid, 0.2)) == doctest::Approx(0.45 * 0.2).epsilon(1e-12));
    CHECK(auc(constant_curve(grid, 0.0)) == 0.0);

    Curve tri;
    tri.repeats = 1;
    tri.points.push_back({0.05, 0, 0.1, {0.1}});
    tri.points.push_back({0.50, 0, 0.0, {0.0}});
    CHECK(auc(tri) == doctest::Approx(0.0225).epsilon(1e-12));

    Curve scaled = constant_curve(grid, 0.2);
    for (auto& p : scaled.points) p.median_error *= 3.0;
    CHECK(auc(scaled) == doctest::Approx(3.0 * auc(constant_curve(grid, 0.2))).epsilon(1e-12));

    Curve one;
    one.points.push_back({0.5, 0, 0.1, {0.1}});
    CHECK_THROWS_AS(auc(one), DataError);
}

TEST_CASE("error_curve: determinism, repeats=1 median, and full-pool exactness") {
    const TestPool pool = gen_pool(small_spec(3));
    const FeatureMatrix reduced = feature_matrix(pool);
    SamplerConfig config;
    config.method = Method::Random;

    const std::vector<double> props = {0.2, 0.6, 1.0};
    const Curve a = error_curve(pool, reduced, config, props, 1, 42);
    const Curve b = error_curve(pool, reduced, config, props, 1, 42);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].median_error == b.points[i].median_error);
        CHECK(a.points[i].raw_errors == b.points[i].raw_errors);
        CHECK(a.points[i].raw_errors.size() == 1);
        CHECK(a.points[i].median_error == a.points[i].raw_errors[0]);
    }
    CHECK(a.points.back().median_error <= 1e-12); // proportion 1.0
    CHECK(a.points[0].budget == 20);
}

TEST_CASE("error_curve: parallel jobs reproduce the serial result") {
    const TestPool pool = gen_pool(small_spec(4));
    const FeatureMatrix reduced = feature_matrix(pool);
    SamplerConfig config;
    config.method = Method::Random;
    const std::vector<double> props = {0.1, 0.3, 0.5};
    const Curve serial = error_curve(pool, reduced, config, props, 4, 7, 1);
    const Curve parallel = error_curve(pool, reduced, config, props, 4, 7, 4);
    for (std::size_t i = 0; i < serial.points.size(); ++i)
        CHECK(serial.points[i].raw_errors == parallel.points[i].raw_errors);
}

TEST_CASE("random sampling error shrinks with the budget") {
    SynthSpec s = small_spec(5);
    s.points_per_cluster = 500;
    s.accuracies = {0.5, 0.5};
    const TestPool pool = gen_pool(s);
    const FeatureMatrix reduced;
    SamplerConfig config;
    config.method = Method::Random;
    int wins = 0;
    for (std::uint64_t h = 0; h < 10; ++h) {
        const Curve c = error_curve(pool, reduced, config, {0.05, 0.5}, 10, 1000 + 10 * h);
        if (c.points[1].median_error <= c.points[0].median_error) ++wins;
    }
    CHECK(wins >= 9);
}

TEST_CASE("build_report + save/load round trip") {
    const auto dir = temp_dir("report");
    const TestPool pool = gen_pool(small_spec(6));
    const FeatureMatrix reduced = feature_matrix(pool);
    SamplerConfig config;
    config.method = Method::AcTracer;
    config.fixed_k = 2;
    config.dip_replicates = 200;

    const EstimateReport report = build_report(pool, reduced, config, {0.2, 0.4}, 2, 11);
    CHECK(report.method == "actracer");
    CHECK(report.resolved_agg.has_value());
    CHECK(report.resolved_dist.has_value());
    CHECK(report.curve.points.size() == 2);
    CHECK(report.auc >= 0.0);

    save_report(report, dir / "r.json");
    const EstimateReport loaded = load_report(dir / "r.json");
    CHECK(loaded.method == report.method);
    CHECK(loaded.auc == report.auc);
    CHECK(loaded.curve.points.size() == 2);
    CHECK(loaded.curve.points[1].median_error == report.curve.points[1].median_error);

    // Byte-identical serialization for identical inputs.
    save_report(report, dir / "r2.json");
    CHECK(read_file(dir / "r.json") == read_file(dir / "r2.json"));
}

TEST_CASE("compare: best marking, ties, and grid mismatch") {
    EstimateReport a;
    a.method = "actracer";
    a.pool_name = "p";
    a.pool_size = 10;
    a.curve = constant_curve({0.1, 0.2}, 0.03);
    a.auc = 0.03;
    EstimateReport b = a;
    b.method = "random";
    b.auc = 0.05;

    const Comparison cmp = compare({a, b});
    CHECK(cmp.rows[0].best);
    CHECK_FALSE(cmp.rows[1].best);

    EstimateReport tie = a;
    tie.method = "cs";
    const Comparison cmp2 = compare({a, tie});
    CHECK(cmp2.rows[0].best);
    CHECK(cmp2.rows[1].best);

    EstimateReport off = a;
    off.curve = constant_curve({0.1, 0.3}, 0.03);
    CHECK_THROWS_AS(compare({a, off}), DataError);

    const Comparison single = compare({a});
    CHECK(single.rows[0].best);
}

TEST_CASE("gen_pool: determinism and file round trip") {
    const auto dir = temp_dir("synth");
    const SynthSpec spec = small_spec(9);
    const TestPool a = gen_pool(spec);
    const TestPool b = gen_pool(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.point(i).id == b.point(i).id);
        CHECK(a.point(i).features == b.point(i).features);
        CHECK(a.point(i).trace == b.point(i).trace);
        CHECK(a.point(i).metric == b.point(i).metric);
    }

    const auto manifest = gen_pool_files(spec, dir);
    const TestPool loaded = load_pool(manifest);
    REQUIRE(loaded.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(loaded.point(i).id == a.point(i).id);
        CHECK(loaded.point(i).metric == a.point(i).metric);
        CHECK(loaded.point(i).trace == a.point(i).trace);
    }
    CHECK(validate(loaded).ok);
}

TEST_CASE("gen_pool: two-cluster accuracies concentrate around the spec") {
    SynthSpec s;
    s.true_k = 2;
    s.dims = 2;
    s.points_per_cluster = 5000;
    s.cluster_separation = 8.0;
    s.accuracies = {0.9, 0.1};
    s.trace_alpha = {2.0, 2.0};
    s.trace_beta = {2.0, 2.0};
    s.trace_len_min = 1;
    s.trace_len_max = 3;
    s.seed = 12;
    const TestPool pool = gen_pool(s);
    for (int c = 0; c < 2; ++c) {
        double sum = 0.0;
        for (int i = 0; i < 5000; ++i) sum += pool.point(static_cast<std::size_t>(c * 5000 + i)).metric;
        const double p = s.accuracies[static_cast<std::size_t>(c)];
        const double bound = 3.0 * std::sqrt(p * (1.0 - p) / 5000.0);
        CHECK(std::abs(sum / 5000.0 - p) <= bound);
    }
}

TEST_CASE("gen_pool rejects invalid specs naming the field") {
    SynthSpec s = small_spec(1);
    s.accuracies = {1.5, 0.2};
    CHECK_THROWS_WITH_AS(gen_pool(s), doctest::Contains("accuracies"), DataError);
    s = small_spec(1);
    s.cluster_separation = -1.0;
    CHECK_THROWS_WITH_AS(gen_pool(s), doctest::Contains("separation"), DataError);
    s = small_spec(1);
    s.trace_len_max = 0;
    CHECK_THROWS_AS(gen_pool(s), DataError);
}

TEST_CASE("relative_error: zero truth switches to absolute") {
    bool absolute = false;
    CHECK(relative_error(0.55, 0.5, &absolute) == doctest::Approx(0.1));
    CHECK_FALSE(absolute);
    CHECK(relative_error(0.07, 0.0, &absolute) == doctest::Approx(0.07));
    CHECK(absolute);
}
