#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "actracer/harness.hpp"
#include "actracer/sampler.hpp"

namespace actracer {

// Everything a `run` invocation needs; loadable from JSON so whole pipelines
// replay from one file plus one seed.
struct RunManifest {
    std::filesystem::path pool;
    Method method = Method::AcTracer;
    InterRule inter = InterRule::McUcb;
    IntraRule intra = IntraRule::Greedy;
    std::optional<int> fixed_k;
    std::string agg = "auto";  // auto|first|max|mean|gmean
    std::string dist = "auto"; // auto|ks|wd
    int bins = 10;
    std::uint64_t seed = 0;
    std::string proportions = "0.05:0.50:0.03";
    int repeats = 10;
    std::filesystem::path out_dir = ".";
    int jobs = 1;
    std::optional<int> target_dim; // PCA output size; default min(64, dim, D)
};

RunManifest load_run_manifest(const std::filesystem::path& path);

SamplerConfig sampler_config_from(const RunManifest& manifest);

// synth: spec JSON -> manifest + points files under out_dir.
std::filesystem::path cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir);

struct CluSearchOutcome {
    int k_star = 0;
    SearchHistory history;
};

CluSearchOutcome cmd_clusearch(const std::filesystem::path& pool_manifest, std::size_t min_budget, int w, int lb,
                               std::uint64_t seed, std::optional<int> target_dim = std::nullopt);

// run: executes the proportion grid and writes report_<method>.json into
// out_dir. Returns the report path; AUC is echoed by the caller.
std::filesystem::path cmd_run(const RunManifest& manifest, EstimateReport* report_out = nullptr);

// evaluate: merges reports into a comparison CSV; returns the best method.
std::string cmd_evaluate(const std::vector<std::filesystem::path>& report_paths,
                         const std::filesystem::path& csv_path);

} // namespace actracer
