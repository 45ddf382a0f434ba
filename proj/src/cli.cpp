#include "actracer/cli.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "actracer/errors.hpp"
#include "actracer/synth.hpp"

namespace actracer {

using ordered_json = nlohmann::ordered_json;

RunManifest load_run_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open run manifest: " + path.string());
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed run manifest " + path.string() + ": " + e.what());
    }
    RunManifest m;
    try {
        m.pool = j.at("pool").get<std::string>();
        m.method = method_from_string(j.value("method", "actracer"));
        m.inter = inter_from_string(j.value("inter", "mcucb"));
        m.intra = intra_from_string(j.value("intra", "greedy"));
        if (j.contains("fixed_k") && !j.at("fixed_k").is_null()) m.fixed_k = j.at("fixed_k").get<int>();
        m.agg = j.value("agg", "auto");
        m.dist = j.value("dist", "auto");
        m.bins = j.value("bins", 10);
        m.seed = j.value("seed", std::uint64_t{0});
        m.proportions = j.value("proportions", std::string("0.05:0.50:0.03"));
        m.repeats = j.value("repeats", 10);
        m.out_dir = j.value("out", std::string("."));
        m.jobs = j.value("jobs", 1);
        if (j.contains("target_dim") && !j.at("target_dim").is_null()) m.target_dim = j.at("target_dim").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("run manifest " + path.string() + " missing or mistyped field: " + e.what());
    }
    // Relative pool paths resolve against the manifest location.
    if (m.pool.is_relative()) m.pool = path.parent_path() / m.pool;
    return m;
}

SamplerConfig sampler_config_from(const RunManifest& manifest) {
    SamplerConfig config;
    config.method = manifest.method;
    config.inter = manifest.inter;
    config.intra = manifest.intra;
    config.fixed_k = manifest.fixed_k;
    if (manifest.agg != "auto") config.agg = aggregation_from_string(manifest.agg);
    if (manifest.dist != "auto") config.dist = distance_from_string(manifest.dist);
    config.bins = manifest.bins;
    config.seed = manifest.seed;
    return config;
}

std::filesystem::path cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir) {
    const SynthSpec spec = load_synth_spec(spec_path);
    return gen_pool_files(spec, out_dir);
}

namespace {

FeatureMatrix reduce_pool(const TestPool& pool, std::optional<int> target_dim) {
    const FeatureMatrix raw = feature_matrix(pool);
    const int dim = target_dim.value_or(default_target_dim(pool.feature_dim(), static_cast<int>(pool.size())));
    if (dim >= pool.feature_dim()) return raw; // nothing to reduce
    const PcaModel model = fit_pca(raw, dim);
    return transform(model, raw);
}

} // namespace

CluSearchOutcome cmd_clusearch(const std::filesystem::path& pool_manifest, std::size_t min_budget, int w, int lb,
                               std::uint64_t seed, std::optional<int> target_dim) {
    const TestPool pool = load_pool(pool_manifest);
    const FeatureMatrix reduced = reduce_pool(pool, target_dim);
    const int n = static_cast<int>(pool.size());
    int ub = std::max(lb + 1, static_cast<int>(min_budget / 4));
    ub = std::min(ub, n);
    if (n < 4 || ub <= lb) throw DataError("clusearch: pool or budget too small to search");
    CluSearchOutcome outcome;
    outcome.k_star = clusearch(reduced, w, lb, ub, seed, &outcome.history);
    return outcome;
}

std::filesystem::path cmd_run(const RunManifest& manifest, EstimateReport* report_out) {
    const TestPool pool = load_pool(manifest.pool);
    const ValidationReport vr = validate(pool);
    if (!vr.ok)
        throw DataError("pool failed validation: " + vr.issues.front().second + " (point '" +
                        vr.issues.front().first + "')");

    const std::vector<double> proportions = parse_proportions(manifest.proportions);
    FeatureMatrix reduced;
    if (manifest.method == Method::AcTracer) reduced = reduce_pool(pool, manifest.target_dim);

    const SamplerConfig config = sampler_config_from(manifest);
    EstimateReport report =
        build_report(pool, reduced, config, proportions, manifest.repeats, manifest.seed, manifest.jobs);

    const std::filesystem::path path = manifest.out_dir / ("report_" + report.method + ".json");
    save_report(report, path);
    if (report_out) *report_out = std::move(report);
    return path;
}

std::string cmd_evaluate(const std::vector<std::filesystem::path>& report_paths,
                         const std::filesystem::path& csv_path) {
    if (report_paths.empty()) throw UsageError("evaluate: need at least one report");
    std::vector<EstimateReport> reports;
    reports.reserve(report_paths.size());
    for (const auto& p : report_paths) reports.push_back(load_report(p));
    const Comparison cmp = compare(reports);
    save_comparison_csv(cmp, csv_path);
    for (const ComparisonRow& row : cmp.rows)
        if (row.best) return row.method;
    return cmp.rows.front().method;
}

} // namespace actracer
