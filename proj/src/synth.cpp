#include "actracer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "actracer/errors.hpp"
#include "actracer/rng.hpp"

namespace actracer {

using ordered_json = nlohmann::ordered_json;

SynthSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open synth spec: " + path.string());
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed synth spec " + path.string() + ": " + e.what());
    }
    SynthSpec s;
    try {
        s.name = j.value("name", s.name);
        s.metric_name = j.value("metric_name", s.metric_name);
        s.true_k = j.at("true_k").get<int>();
        s.dims = j.at("dims").get<int>();
        s.points_per_cluster = j.at("points_per_cluster").get<int>();
        s.cluster_separation = j.at("cluster_separation").get<double>();
        s.accuracies = j.at("accuracies").get<std::vector<double>>();
        s.trace_alpha = j.at("trace_alpha").get<std::vector<double>>();
        s.trace_beta = j.at("trace_beta").get<std::vector<double>>();
        s.trace_len_min = j.at("trace_len_min").get<int>();
        s.trace_len_max = j.at("trace_len_max").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("synth spec " + path.string() + " missing or mistyped field: " + e.what());
    }
    return s;
}

void save_synth_spec(const SynthSpec& s, const std::filesystem::path& path) {
    ordered_json j;
    j["name"] = s.name;
    j["metric_name"] = s.metric_name;
    j["true_k"] = s.true_k;
    j["dims"] = s.dims;
    j["points_per_cluster"] = s.points_per_cluster;
    j["cluster_separation"] = s.cluster_separation;
    j["accuracies"] = s.accuracies;
    j["trace_alpha"] = s.trace_alpha;
    j["trace_beta"] = s.trace_beta;
    j["trace_len_min"] = s.trace_len_min;
    j["trace_len_max"] = s.trace_len_max;
    j["seed"] = s.seed;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write synth spec: " + path.string());
    f << j.dump(2) << "\n";
}

void validate_synth_spec(const SynthSpec& s) {
    if (s.true_k < 1) throw DataError("synth spec: true_k must be at least 1");
    if (s.dims < 1) throw DataError("synth spec: dims must be at least 1");
    if (s.points_per_cluster < 1) throw DataError("synth spec: points_per_cluster must be at least 1");
    if (!(s.cluster_separation > 0.0)) throw DataError("synth spec: cluster_separation must be positive");
    if (static_cast<int>(s.accuracies.size()) != s.true_k)
        throw DataError("synth spec: accuracies must list one value per cluster");
    for (double a : s.accuracies)
        if (!(a >= 0.0 && a <= 1.0))
            throw DataError("synth spec: accuracies value " + std::to_string(a) + " outside [0,1]");
    if (static_cast<int>(s.trace_alpha.size()) != s.true_k || static_cast<int>(s.trace_beta.size()) != s.true_k)
        throw DataError("synth spec: trace_alpha/trace_beta must list one value per cluster");
    for (double a : s.trace_alpha)
        if (!(a > 0.0)) throw DataError("synth spec: trace_alpha values must be positive");
    for (double b : s.trace_beta)
        if (!(b > 0.0)) throw DataError("synth spec: trace_beta values must be positive");
    if (s.trace_len_min < 1) throw DataError("synth spec: trace_len_min must be at least 1");
    if (s.trace_len_max < s.trace_len_min) throw DataError("synth spec: trace_len_max below trace_len_min");
}

TestPool gen_pool(const SynthSpec& spec) {
    validate_synth_spec(spec);
    Rng rng(derive_seed(spec.seed, "synth"));

    // Axis-aligned center layout guarantees pairwise spacing of at least
    // cluster_separation (within-cluster sigma is 1).
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.true_k),
                                             std::vector<double>(static_cast<std::size_t>(spec.dims), 0.0));
    for (int c = 0; c < spec.true_k; ++c) {
        const int axis = c % spec.dims;
        const double level = static_cast<double>(1 + c / spec.dims);
        centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(axis)] = spec.cluster_separation * level;
    }

    const std::size_t total = static_cast<std::size_t>(spec.true_k) * static_cast<std::size_t>(spec.points_per_cluster);
    int id_width = 1;
    for (std::size_t v = total; v >= 10; v /= 10) ++id_width;

    std::vector<DataPoint> points;
    points.reserve(total);
    std::size_t serial = 0;
    for (int c = 0; c < spec.true_k; ++c) {
        const auto& center = centers[static_cast<std::size_t>(c)];
        const double accuracy = spec.accuracies[static_cast<std::size_t>(c)];
        const double alpha = spec.trace_alpha[static_cast<std::size_t>(c)];
        const double beta = spec.trace_beta[static_cast<std::size_t>(c)];
        for (int i = 0; i < spec.points_per_cluster; ++i, ++serial) {
            DataPoint p;
            std::string num = std::to_string(serial);
            p.id = "p" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;
            p.features.resize(static_cast<std::size_t>(spec.dims));
            for (int d = 0; d < spec.dims; ++d)
                p.features[static_cast<std::size_t>(d)] = center[static_cast<std::size_t>(d)] + rng.next_normal();
            const int len =
                spec.trace_len_min + static_cast<int>(rng.next_below(
                                         static_cast<std::uint64_t>(spec.trace_len_max - spec.trace_len_min + 1)));
            p.trace.resize(static_cast<std::size_t>(len));
            for (double& t : p.trace) t = std::clamp(rng.next_beta(alpha, beta), 0.0, 1.0);
            p.metric = rng.next_unit() < accuracy ? 1.0 : 0.0;
            points.push_back(std::move(p));
        }
    }
    return TestPool(spec.name, spec.metric_name, spec.dims, std::move(points));
}

std::filesystem::path gen_pool_files(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    const TestPool pool = gen_pool(spec);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path manifest = out_dir / "manifest.json";
    write_pool(pool, manifest, "points.jsonl");
    return manifest;
}

} // namespace actracer
