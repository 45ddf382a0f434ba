#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "actracer/pool.hpp"

namespace actracer {

// Recipe for a synthetic pool: Gaussian blobs with unit within-cluster
// sigma, per-cluster Bernoulli metrics, and per-cluster Beta token-confidence
// traces. Everything is deterministic given the seed.
struct SynthSpec {
    std::string name = "synthetic";
    std::string metric_name = "accuracy";
    int true_k = 1;
    int dims = 2;
    int points_per_cluster = 100;
    double cluster_separation = 8.0;     // center spacing in within-cluster sigmas
    std::vector<double> accuracies;      // per-cluster Bernoulli success probability
    std::vector<double> trace_alpha;     // per-cluster Beta parameters
    std::vector<double> trace_beta;
    int trace_len_min = 1;
    int trace_len_max = 8;
    std::uint64_t seed = 0;
};

SynthSpec load_synth_spec(const std::filesystem::path& path);
void save_synth_spec(const SynthSpec& spec, const std::filesystem::path& path);

// Throws DataError naming the offending field.
void validate_synth_spec(const SynthSpec& spec);

TestPool gen_pool(const SynthSpec& spec);

// gen_pool plus canonical manifest/points files under out_dir; returns the
// manifest path.
std::filesystem::path gen_pool_files(const SynthSpec& spec, const std::filesystem::path& out_dir);

} // namespace actracer
