#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actracer/cli.hpp"
#include "actracer/errors.hpp"

namespace {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
int dispatch(int argc, char** argv) {
    CLI::App app{"Pool-based active-testing engine: estimates a bounded metric's pool average "
                 "from a small adaptively labeled subset"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic pool from a spec file");
    std::string synth_spec, synth_out;
    synth->add_option("--spec", synth_spec, "Synth spec JSON")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    // ---- clusearch ----
    auto* clu = app.add_subcommand("clusearch", "Search for the cluster count on a pool");
    std::string clu_pool;
    std::size_t clu_budget = 0;
    int clu_w = 20, clu_lb = 2;
    std::uint64_t clu_seed = 0;
    std::optional<int> clu_dim;
    clu->add_option("--pool", clu_pool, "Pool manifest JSON")->required();
    clu->add_option("--min-budget", clu_budget, "Smallest label budget the search must support")->required();
    clu->add_option("--w", clu_w, "Search budget (clustering fits)");
    clu->add_option("--lb", clu_lb, "Search lower bound");
    clu->add_option("--seed", clu_seed, "Seed");
    clu->add_option("--target-dim", clu_dim, "PCA target dimension");

    // ---- run ----
    auto* run = app.add_subcommand("run", "Run a sampler over a proportion grid and write a report");
    std::string run_manifest_path;
    actracer::RunManifest m;
    std::string run_pool, run_method, run_inter, run_intra, run_agg, run_dist, run_props, run_out;
    std::optional<int> run_fixed_k, run_bins, run_repeats, run_jobs, run_dim;
    std::optional<std::uint64_t> run_seed;
    std::optional<double> run_proportion;
    std::optional<std::size_t> run_budget;
    run->add_option("--manifest", run_manifest_path, "Run manifest JSON (flags override its fields)");
    run->add_option("--pool", run_pool, "Pool manifest JSON");
    run->add_option("--method", run_method, "actracer|random|cs");
    run->add_option("--inter", run_inter, "Cluster selection: mcucb|random");
    run->add_option("--intra", run_intra, "Within-cluster selection: greedy|random");
    run->add_option("--fixed-k", run_fixed_k, "Bypass the cluster-count search with a fixed count");
    run->add_option("--agg", run_agg, "auto|first|max|mean|gmean");
    run->add_option("--dist", run_dist, "auto|ks|wd");
    run->add_option("--bins", run_bins, "Histogram bins (entropy selection and cs baseline)");
    run->add_option("--seed", run_seed, "Base seed");
    run->add_option("--proportions", run_props, "Grid literal start:stop:step (e.g. 0.05:0.50:0.03)");
    run->add_option("--proportion", run_proportion, "Single proportion");
    run->add_option("--budget", run_budget, "Single absolute budget");
    run->add_option("--repeats", run_repeats, "Repeats per proportion");
    run->add_option("--out", run_out, "Output directory");
    run->add_option("--jobs", run_jobs, "Parallel (proportion, repeat) runs");
    run->add_option("--target-dim", run_dim, "PCA target dimension");

    // ---- evaluate ----
    auto* eval = app.add_subcommand("evaluate", "Merge reports into a comparison CSV");
    std::vector<std::string> eval_reports;
    std::string eval_out = "comparison.csv";
    eval->add_option("--reports", eval_reports, "Report JSON files")->required()->expected(-1);
    eval->add_option("--out", eval_out, "Comparison CSV path");

    CLI11_PARSE(app, argc, argv);

    if (*synth) {
        const auto manifest = actracer::cmd_synth(synth_spec, synth_out);
        std::cout << "pool written: " << manifest.string() << "\n";
        return 0;
    }

    if (*clu) {
        const auto outcome = actracer::cmd_clusearch(clu_pool, clu_budget, clu_w, clu_lb, clu_seed, clu_dim);
        std::cout << "k* = " << outcome.k_star << "\n";
        std::cout << "history (count, inertia):\n";
        for (const auto& [count, inert] : outcome.history.evaluated)
            std::cout << "  " << count << "  " << inert << "\n";
        return 0;
    }

    if (*run) {
        if (!run_manifest_path.empty()) m = actracer::load_run_manifest(run_manifest_path);
        else if (run_pool.empty())
            throw actracer::UsageError("run: provide --manifest or --pool");
        if (!run_pool.empty()) m.pool = run_pool;
        if (!run_method.empty()) m.method = actracer::method_from_string(run_method);
        if (!run_inter.empty()) m.inter = actracer::inter_from_string(run_inter);
        if (!run_intra.empty()) m.intra = actracer::intra_from_string(run_intra);
        if (run_fixed_k) m.fixed_k = run_fixed_k;
        if (!run_agg.empty()) m.agg = run_agg;
        if (!run_dist.empty()) m.dist = run_dist;
        if (run_bins) m.bins = *run_bins;
        if (run_seed) m.seed = *run_seed;
        if (!run_props.empty()) m.proportions = run_props;
        if (run_proportion) m.proportions = std::to_string(*run_proportion);
        if (run_repeats) m.repeats = *run_repeats;
        if (!run_out.empty()) m.out_dir = run_out;
        if (run_jobs) m.jobs = *run_jobs;
        if (run_dim) m.target_dim = run_dim;
        if (run_budget) {
            // Absolute budget: convert to a proportion of this pool.
            const auto pool = actracer::load_pool(m.pool);
            m.proportions = std::to_string(static_cast<double>(*run_budget) / static_cast<double>(pool.size()));
        }

        const auto start = std::chrono::steady_clock::now();
        actracer::EstimateReport report;
        const auto path = actracer::cmd_run(m, &report);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        std::cout << "report written: " << path.string() << "\n";
        std::cout << "auc = " << report.auc << "\n";
        std::cerr << "runtime_seconds = " << elapsed.count() << "\n";
        return 0;
    }

    if (*eval) {
        std::vector<std::filesystem::path> paths(eval_reports.begin(), eval_reports.end());
        const std::string best = actracer::cmd_evaluate(paths, eval_out);
        std::cout << "comparison written: " << eval_out << "\n";
        std::cout << "best method: " << best << "\n";
        return 0;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const actracer::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const actracer::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
