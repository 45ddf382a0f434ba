#include "actracer/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actracer/errors.hpp"
#include "actracer/rng.hpp"

namespace actracer {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(Method m) {
    switch (m) {
    case Method::AcTracer: return "actracer";
    case Method::Random: return "random";
    case Method::CS: return "cs";
    }
    return "actracer";
}

std::string to_string(InterRule r) { return r == InterRule::McUcb ? "mcucb" : "random"; }
std::string to_string(IntraRule r) { return r == IntraRule::Greedy ? "greedy" : "random"; }

Method method_from_string(const std::string& s) {
    if (s == "actracer") return Method::AcTracer;
    if (s == "random") return Method::Random;
    if (s == "cs") return Method::CS;
    throw UsageError("unknown method '" + s + "' (expected actracer|random|cs)");
}

InterRule inter_from_string(const std::string& s) {
    if (s == "mcucb") return InterRule::McUcb;
    if (s == "random") return InterRule::Random;
    throw UsageError("unknown inter rule '" + s + "' (expected mcucb|random)");
}

IntraRule intra_from_string(const std::string& s) {
    if (s == "greedy") return IntraRule::Greedy;
    if (s == "random") return IntraRule::Random;
    throw UsageError("unknown intra rule '" + s + "' (expected greedy|random)");
}

void ClusterState::recompute_moments() {
    const std::size_t t = labels.size();
    if (t == 0) {
        mean = 0.0;
        stddev = 0.0;
        return;
    }
    KahanSum s;
    for (double v : labels) s.add(v);
    mean = s.value() / static_cast<double>(t);
    KahanSum sq;
    for (double v : labels) sq.add((v - mean) * (v - mean));
    stddev = std::sqrt(std::max(0.0, sq.value() / static_cast<double>(t)));
}

double ucb_beta(std::size_t n) {
    if (n < 1) throw DataError("ucb_beta: budget must be at least 1");
    return std::sqrt(std::log(2.0) + 4.5 * std::log(static_cast<double>(n)));
}

std::vector<double> mcucb_scores(const std::vector<ClusterState>& clusters, double beta) {
    std::vector<double> scores(clusters.size(), -kInf);
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        const ClusterState& c = clusters[k];
        if (c.exhausted()) continue;
        if (c.count() < 2) throw DataError("mcucb_scores: cluster not initialized (needs two samples)");
        const double t = static_cast<double>(c.count());
        scores[k] = (c.weight / t) * (c.stddev + 2.0 * beta / std::sqrt(t));
    }
    return scores;
}

std::size_t intra_select(std::span<const double> cluster_conf_sorted, std::span<const double> selected_conf_sorted,
                         std::span<const std::pair<std::size_t, double>> candidates, DistanceMetric metric) {
    if (candidates.empty()) throw DataError("intra_select: no candidates");
    std::size_t best_index = candidates[0].first;
    double best_dist = kInf;
    for (const auto& [index, conf] : candidates) {
        const double d = metric == DistanceMetric::KS
                             ? ks_sorted_plus(cluster_conf_sorted, selected_conf_sorted, conf)
                             : wasserstein1_sorted_plus(cluster_conf_sorted, selected_conf_sorted, conf);
        if (d < best_dist) {
            best_dist = d;
            best_index = index;
        }
    }
    return best_index;
}

namespace {

struct RunState {
    std::vector<ClusterState> clusters;
    std::vector<char> taken; // per pool index
    SampleTrace trace;
    std::size_t t = 0;

    void draw(std::size_t k, std::size_t pool_index, const PoolView& pool, LabelOracle& oracle, double conf) {
        const double label = oracle.query_index(pool_index);
        ClusterState& c = clusters[k];
        c.sampled.push_back(pool_index);
        c.labels.push_back(label);
        c.sampled_conf_sorted.insert(
            std::upper_bound(c.sampled_conf_sorted.begin(), c.sampled_conf_sorted.end(), conf), conf);
        c.recompute_moments();
        taken[pool_index] = 1;
        ++t;
        trace.steps.push_back({t, static_cast<int>(k), pool.id(pool_index), label});
    }
};

std::vector<std::pair<std::size_t, double>> unsampled_members(const ClusterState& c, const std::vector<char>& taken,
                                                              const std::vector<double>& conf) {
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(c.members.size() - c.sampled.size());
    for (std::size_t idx : c.members)
        if (!taken[idx]) out.emplace_back(idx, conf[idx]);
    return out;
}

Estimate stratified_estimate(const std::vector<ClusterState>& clusters) {
    Estimate e;
    KahanSum total;
    for (const ClusterState& c : clusters) {
        e.cluster_means.push_back(c.mean);
        e.weights.push_back(c.weight);
        total.add(c.weight * c.mean);
    }
    e.value = total.value();
    return e;
}

} // namespace

SampleTrace run_actracer(const PoolView& pool, const FeatureMatrix& reduced, const SamplerConfig& config,
                         LabelOracle& oracle) {
    const std::size_t n_points = pool.size();
    const std::size_t budget = config.budget;
    if (budget < 1 || budget > n_points) throw DataError("run_actracer: budget must be in [1, |pool|]");
    if (static_cast<std::size_t>(reduced.rows()) != n_points)
        throw DataError("run_actracer: reduced features do not match pool size");

    SampleTrace out;

    // External confidence signal: entropy-selected aggregation unless fixed.
    ConfidenceProfile profile = config.agg ? profile_for_method(pool, *config.agg, config.bins)
                                           : select_aggregation(pool, config.bins);
    out.agg = profile.method;
    out.entropy_table = profile.entropy_table;

    // The distance metric only matters for greedy picks; the dip test is
    // skipped entirely under the random-intra ablation.
    DistanceMetric metric = DistanceMetric::KS;
    if (config.dist) {
        metric = *config.dist;
    } else if (config.intra == IntraRule::Greedy && profile.values.size() >= 4) {
        DipResult dip = dip_test(profile.values, config.dip_replicates, derive_seed(config.seed, "dip"));
        metric = dip.p_value < config.dip_alpha ? DistanceMetric::WD : DistanceMetric::KS;
        out.dip = dip;
    }
    if (config.intra == IntraRule::Greedy || config.dist) out.dist = metric;

    // Stratification: fixed count or elbow search bounded by the smallest
    // budget this experiment will run (k <= n_min / 4).
    int k_star;
    if (config.fixed_k) {
        k_star = *config.fixed_k;
        if (k_star < 1 || static_cast<std::size_t>(k_star) > n_points)
            throw DataError("run_actracer: fixed_k out of range");
    } else {
        const std::size_t n_min = config.min_budget.value_or(budget);
        const int lb = config.clusearch_lb;
        int ub = std::max(lb + 1, static_cast<int>(n_min / 4));
        ub = std::min<int>(ub, static_cast<int>(n_points));
        if (static_cast<int>(n_points) < 4 || ub <= lb)
            k_star = 1;
        else
            k_star = clusearch(reduced, config.clusearch_w, lb, ub, derive_seed(config.seed, "clusearch"));
    }
    if (budget < 2 * static_cast<std::size_t>(k_star))
        throw DataError("run_actracer: budget " + std::to_string(budget) + " infeasible for k = " +
                        std::to_string(k_star) + " (initialization needs 2 per cluster)");
    out.k = k_star;

    std::vector<int> assignments;
    if (k_star == 1) {
        assignments.assign(n_points, 0);
    } else {
        Partition part = balanced_kmeans(reduced, k_star, derive_seed(config.seed, "partition"));
        assignments = std::move(part.assignments);
    }

    RunState state;
    state.taken.assign(n_points, 0);
    state.clusters.resize(static_cast<std::size_t>(k_star));
    for (std::size_t i = 0; i < n_points; ++i)
        state.clusters[static_cast<std::size_t>(assignments[i])].members.push_back(i);
    for (ClusterState& c : state.clusters) {
        c.weight = static_cast<double>(c.members.size()) / static_cast<double>(n_points);
        c.member_conf_sorted.reserve(c.members.size());
        for (std::size_t idx : c.members) c.member_conf_sorted.push_back(profile.values[idx]);
        std::sort(c.member_conf_sorted.begin(), c.member_conf_sorted.end());
        out.cluster_sizes.push_back(static_cast<int>(c.members.size()));
    }

    Rng rng_intra(derive_seed(config.seed, "intra"));
    Rng rng_inter(derive_seed(config.seed, "inter"));

    // Random picks draw from per-cluster swap-remove pools instead of
    // rescanning members each step.
    std::vector<std::vector<std::size_t>> remaining;
    if (config.intra == IntraRule::Random) {
        remaining.resize(state.clusters.size());
        for (std::size_t k = 0; k < state.clusters.size(); ++k) remaining[k] = state.clusters[k].members;
    }

    auto pick_point = [&](std::size_t k) {
        ClusterState& c = state.clusters[k];
        std::size_t index;
        if (config.intra == IntraRule::Greedy) {
            const auto candidates = unsampled_members(c, state.taken, profile.values);
            index = intra_select(c.member_conf_sorted, c.sampled_conf_sorted, candidates, metric);
        } else {
            auto& pool_k = remaining[k];
            const std::size_t r = static_cast<std::size_t>(rng_intra.next_below(pool_k.size()));
            index = pool_k[r];
            pool_k[r] = pool_k.back();
            pool_k.pop_back();
        }
        state.draw(k, index, pool, oracle, profile.values[index]);
    };

    // Two samples per cluster before any bandit scoring.
    for (std::size_t k = 0; k < state.clusters.size(); ++k) {
        pick_point(k);
        pick_point(k);
    }

    const double beta = ucb_beta(budget);
    while (state.t < budget) {
        std::size_t chosen;
        if (config.inter == InterRule::McUcb) {
            const auto scores = mcucb_scores(state.clusters, beta);
            std::size_t best = 0;
            for (std::size_t k = 1; k < scores.size(); ++k)
                if (scores[k] > scores[best]) best = k;
            if (scores[best] == -kInf) break; // everything exhausted
            chosen = best;
        } else {
            std::vector<std::size_t> live;
            for (std::size_t k = 0; k < state.clusters.size(); ++k)
                if (!state.clusters[k].exhausted()) live.push_back(k);
            if (live.empty()) break;
            chosen = live[static_cast<std::size_t>(rng_inter.next_below(live.size()))];
        }
        pick_point(chosen);
    }

    out.estimate = stratified_estimate(state.clusters);
    out.steps = std::move(state.trace.steps);
    return out;
}

SampleTrace run_random(const PoolView& pool, LabelOracle& oracle, std::size_t budget, std::uint64_t seed) {
    const std::size_t n = pool.size();
    if (budget < 1 || budget > n) throw DataError("run_random: budget must be in [1, |pool|]");

    Rng rng(derive_seed(seed, "random"));
    const auto picks = sample_without_replacement(rng, n, budget);

    SampleTrace out;
    out.k = 0;
    KahanSum sum;
    std::size_t t = 0;
    for (std::size_t idx : picks) {
        const double label = oracle.query_index(idx);
        sum.add(label);
        out.steps.push_back({++t, -1, pool.id(idx), label});
    }
    out.estimate.value = sum.value() / static_cast<double>(budget);
    out.estimate.cluster_means = {out.estimate.value};
    out.estimate.weights = {1.0};
    return out;
}

SampleTrace run_cs_sampling(const PoolView& pool, LabelOracle& oracle, std::size_t budget, int bins,
                            std::uint64_t seed) {
    const std::size_t n = pool.size();
    if (budget < 1 || budget > n) throw DataError("run_cs_sampling: budget must be in [1, |pool|]");
    if (bins < 1) throw DataError("run_cs_sampling: bins must be positive");

    ConfidenceProfile profile = select_aggregation(pool, bins);

    std::vector<std::vector<std::size_t>> bin_members(static_cast<std::size_t>(bins));
    for (std::size_t i = 0; i < n; ++i) {
        int b = static_cast<int>(profile.values[i] * bins);
        if (b >= bins) b = bins - 1;
        if (b < 0) b = 0;
        bin_members[static_cast<std::size_t>(b)].push_back(i);
    }

    // Proportional quotas with largest-remainder rounding.
    std::vector<std::size_t> alloc(static_cast<std::size_t>(bins), 0);
    std::vector<std::pair<double, int>> remainders;
    std::size_t assigned = 0;
    for (int b = 0; b < bins; ++b) {
        const double quota =
            static_cast<double>(budget) * static_cast<double>(bin_members[static_cast<std::size_t>(b)].size()) /
            static_cast<double>(n);
        const auto base = static_cast<std::size_t>(std::floor(quota));
        alloc[static_cast<std::size_t>(b)] = base;
        assigned += base;
        remainders.emplace_back(quota - static_cast<double>(base), b);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < budget; r = (r + 1) % remainders.size()) {
        const auto b = static_cast<std::size_t>(remainders[r].second);
        if (alloc[b] < bin_members[b].size()) {
            ++alloc[b];
            ++assigned;
        }
    }

    SampleTrace out;
    out.k = bins;
    out.agg = profile.method;
    out.entropy_table = profile.entropy_table;

    Rng rng(derive_seed(seed, "cs"));
    std::size_t t = 0;
    double sampled_population = 0.0;
    KahanSum weighted;
    for (int b = 0; b < bins; ++b) {
        const auto& members = bin_members[static_cast<std::size_t>(b)];
        const std::size_t take = alloc[static_cast<std::size_t>(b)];
        if (take == 0) continue;
        const auto picks = sample_without_replacement(rng, members.size(), take);
        KahanSum bin_sum;
        for (std::size_t p : picks) {
            const std::size_t idx = members[p];
            const double label = oracle.query_index(idx);
            bin_sum.add(label);
            out.steps.push_back({++t, b, pool.id(idx), label});
        }
        const double bin_mean = bin_sum.value() / static_cast<double>(take);
        out.estimate.cluster_means.push_back(bin_mean);
        out.estimate.weights.push_back(static_cast<double>(members.size()));
        weighted.add(static_cast<double>(members.size()) * bin_mean);
        sampled_population += static_cast<double>(members.size());
    }
    // Bins too small to earn a draw fold into the sampled-population weight.
    out.estimate.value = weighted.value() / sampled_population;
    for (double& w : out.estimate.weights) w /= sampled_population;
    return out;
}

SampleTrace run_sampler(const PoolView& pool, const FeatureMatrix& reduced, const SamplerConfig& config,
                        LabelOracle& oracle) {
    switch (config.method) {
    case Method::AcTracer: return run_actracer(pool, reduced, config, oracle);
    case Method::Random: return run_random(pool, oracle, config.budget, config.seed);
    case Method::CS: return run_cs_sampling(pool, oracle, config.budget, config.bins, config.seed);
    }
    throw DataError("run_sampler: unknown method");
}

} // namespace actracer
