#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "actracer/errors.hpp"
#include "actracer/pool.hpp"
#include "actracer/rng.hpp"

using namespace actracer;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "actracer_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_pool_files(const fs::path& dir, const std::string& points) {
    write_file(dir / "manifest.json",
               R"({"name":"t","metric_name":"acc","feature_dim":2,"points_file":"points.jsonl"})");
    write_file(dir / "points.jsonl", points);
    return dir / "manifest.json";
}

} // namespace

TEST_CASE("load_pool reads well-formed records in file order") {
    const auto dir = temp_dir("load_ok");
    const auto manifest = write_pool_files(dir, R"({"id":"a","features":[0,1],"trace":[0.5],"metric":1.0}
{"id":"b","features":[1,0],"trace":[0.2,0.4],"metric":0.0}
{"id":"c","features":[1,1],"trace":[0.9],"metric":0.5}
)");
    const TestPool pool = load_pool(manifest);
    CHECK(pool.size() == 3);
    CHECK(pool.feature_dim() == 2);
    CHECK(pool.point(0).id == "a");
    CHECK(pool.point(2).id == "c");
    CHECK(pool.index_of("b") == 1);
    CHECK(pool.index_of("zz") == -1);
}

TEST_CASE("load_pool rejects out-of-range metric naming the id") {
    const auto dir = temp_dir("load_metric");
    const auto manifest = write_pool_files(dir, R"({"id":"a","features":[0,1],"trace":[0.5],"metric":1.2}
)");
    CHECK_THROWS_WITH_AS(load_pool(manifest), doctest::Contains("'a'"), DataError);
    CHECK_THROWS_WITH_AS(load_pool(manifest), doctest::Contains("metric"), DataError);
}

TEST_CASE("load_pool rejects duplicate ids with the line number") {
    const auto dir = temp_dir("load_dup");
    const auto manifest = write_pool_files(dir, R"({"id":"a","features":[0,1],"trace":[0.5],"metric":0.5}
{"id":"a","features":[1,0],"trace":[0.5],"metric":0.5}
)");
    CHECK_THROWS_WITH_AS(load_pool(manifest), doctest::Contains(":2:"), DataError);
}

TEST_CASE("load_pool rejects dimension mismatch and missing files") {
    const auto dir = temp_dir("load_dim");
    const auto manifest = write_pool_files(dir, R"({"id":"a","features":[0,1,2],"trace":[0.5],"metric":0.5}
)");
    CHECK_THROWS_AS(load_pool(manifest), DataError);
    CHECK_THROWS_AS(load_pool(dir / "nope.json"), DataError);
}

TEST_CASE("canonical write/load round-trips byte-identically") {
    const auto dir = temp_dir("roundtrip");
    std::vector<DataPoint> pts;
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        DataPoint p;
        p.id = "p" + std::to_string(i);
        p.features = {rng.next_normal(), rng.next_normal(), rng.next_unit()};
        p.trace = {rng.next_unit(), rng.next_unit()};
        p.metric = rng.next_unit();
        pts.push_back(std::move(p));
    }
    const TestPool pool("rt", "acc", 3, std::move(pts));
    write_pool(pool, dir / "manifest.json");
    const std::string manifest_bytes = read_file(dir / "manifest.json");
    const std::string points_bytes = read_file(dir / "points.jsonl");

    const TestPool reloaded = load_pool(dir / "manifest.json");
    const auto dir2 = temp_dir("roundtrip2");
    write_pool(reloaded, dir2 / "manifest.json");
    CHECK(read_file(dir2 / "manifest.json") == manifest_bytes);
    CHECK(read_file(dir2 / "points.jsonl") == points_bytes);
}

TEST_CASE("validate enumerates violations without mutating") {
    std::vector<DataPoint> pts;
    pts.push_back({"a", {0.0, 1.0}, {0.5}, 0.5});
    pts.push_back({"b", {std::nan(""), 1.0}, {0.5}, 0.5});
    pts.push_back({"c", {0.0, 1.0}, {}, 0.5});
    const TestPool pool("v", "acc", 2, std::move(pts));
    const ValidationReport r = validate(pool);
    CHECK_FALSE(r.ok);
    CHECK(r.issues.size() == 2);

    std::vector<DataPoint> good;
    good.push_back({"a", {0.0, 1.0}, {0.5}, 0.5});
    CHECK(validate(TestPool("g", "acc", 2, std::move(good))).ok);
}

TEST_CASE("label oracle enforces budget and is idempotent") {
    std::vector<DataPoint> pts;
    pts.push_back({"a", {0.0}, {0.5}, 0.25});
    pts.push_back({"b", {1.0}, {0.5}, 0.75});
    pts.push_back({"c", {2.0}, {0.5}, 1.0});
    const TestPool pool("o", "acc", 1, std::move(pts));

    SUBCASE("distinct queries consume budget") {
        LabelOracle oracle(pool, 2);
        CHECK(oracle.query_label("a") == 0.25);
        CHECK(oracle.query_label("b") == 0.75);
        CHECK_THROWS_AS(oracle.query_label("c"), DataError);
        CHECK(oracle.spent() == 2);
    }
    SUBCASE("repeat queries are free") {
        LabelOracle oracle(pool, 1);
        CHECK(oracle.query_label("a") == 0.25);
        CHECK(oracle.query_label("a") == 0.25);
        CHECK(oracle.spent() == 1);
    }
    SUBCASE("unknown id") {
        LabelOracle oracle(pool, 1);
        CHECK_THROWS_AS(oracle.query_label("zz"), DataError);
    }
}

TEST_CASE("true_mean is the exact average") {
    std::vector<DataPoint> pts;
    pts.push_back({"a", {0.0}, {0.5}, 0.0});
    pts.push_back({"b", {1.0}, {0.5}, 1.0});
    const TestPool pool("m", "acc", 1, std::move(pts));
    CHECK(true_mean(pool) == doctest::Approx(0.5).epsilon(1e-15));

    // 100 Bernoulli metrics: mean must equal the exact count / 100.
    Rng rng(11);
    std::vector<DataPoint> bern;
    int ones = 0;
    for (int i = 0; i < 100; ++i) {
        const double m = rng.next_unit() < 0.3 ? 1.0 : 0.0;
        ones += m == 1.0;
        bern.push_back({"p" + std::to_string(i), {0.0}, {0.5}, m});
    }
    const TestPool bpool("b", "acc", 1, std::move(bern));
    CHECK(true_mean(bpool) == static_cast<double>(ones) / 100.0);
}
