#include "actracer/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "actracer/errors.hpp"
#include "actracer/rng.hpp"

namespace actracer {

using ordered_json = nlohmann::ordered_json;

std::vector<double> parse_proportions(const std::string& literal) {
    std::vector<double> parts;
    std::stringstream ss(literal);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
        try {
            parts.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError("invalid proportion literal '" + literal + "'");
        }
    }
    std::vector<double> grid;
    if (parts.size() == 1) {
        grid.push_back(parts[0]);
    } else if (parts.size() == 3) {
        const double start = parts[0], stop = parts[1], step = parts[2];
        if (!(step > 0.0)) throw UsageError("proportion step must be positive");
        for (int i = 0;; ++i) {
            const double p = start + step * i;
            if (p > stop + 1e-9) break;
            grid.push_back(p);
        }
    } else {
        throw UsageError("proportion literal must be a value or start:stop:step");
    }
    if (grid.empty()) throw UsageError("empty proportion grid");
    for (double p : grid)
        if (!(p > 0.0 && p <= 1.0)) throw UsageError("proportions must lie in (0,1]");
    return grid;
}

std::size_t budget_for(double proportion, std::size_t pool_size) {
    const auto b = static_cast<std::size_t>(std::llround(proportion * static_cast<double>(pool_size)));
    return b;
}

double relative_error(double estimate, double truth, bool* absolute_used) {
    if (truth == 0.0) {
        if (absolute_used) *absolute_used = true;
        return std::abs(estimate);
    }
    if (absolute_used) *absolute_used = false;
    return std::abs(estimate - truth) / truth;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

} // namespace

Curve error_curve(const TestPool& pool, const FeatureMatrix& reduced, const SamplerConfig& base_config,
                  const std::vector<double>& proportions, int repeats, std::uint64_t base_seed, int jobs,
                  const TraceObserver& observer) {
    if (repeats < 1) throw DataError("error_curve: repeats must be at least 1");
    for (std::size_t i = 1; i < proportions.size(); ++i)
        if (!(proportions[i] > proportions[i - 1])) throw DataError("error_curve: proportions must be strictly increasing");

    const std::size_t n = pool.size();
    std::vector<std::size_t> budgets;
    for (double p : proportions) {
        const std::size_t b = budget_for(p, n);
        if (b < 1 || b > n) throw DataError("error_curve: infeasible budget at proportion " + std::to_string(p));
        budgets.push_back(b);
    }

    SamplerConfig config = base_config;
    if (!config.min_budget) config.min_budget = *std::min_element(budgets.begin(), budgets.end());

    const double truth = true_mean(pool);
    const PoolView view(pool);

    const std::size_t total = proportions.size() * static_cast<std::size_t>(repeats);
    std::vector<double> errors(total, 0.0);

    std::atomic<std::size_t> next{0};
    std::mutex shared_mutex; // guards failure and the observer
    std::exception_ptr failure;

    auto worker = [&]() {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total) return;
            {
                std::lock_guard<std::mutex> lock(shared_mutex);
                if (failure) return;
            }
            try {
                const std::size_t pi = task / static_cast<std::size_t>(repeats);
                const std::size_t ri = task % static_cast<std::size_t>(repeats);
                SamplerConfig run_config = config;
                run_config.budget = budgets[pi];
                run_config.seed = base_seed + ri;
                LabelOracle oracle(pool, run_config.budget);
                const SampleTrace trace = run_sampler(view, reduced, run_config, oracle);
                if (oracle.spent() != run_config.budget)
                    throw DataError("sampler consumed " + std::to_string(oracle.spent()) + " labels for budget " +
                                    std::to_string(run_config.budget));
                errors[task] = relative_error(trace.estimate.value, truth);
                if (observer) {
                    std::lock_guard<std::mutex> lock(shared_mutex);
                    observer(pi, static_cast<int>(ri), trace);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(shared_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(nthreads));
        for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    Curve curve;
    curve.repeats = repeats;
    for (std::size_t pi = 0; pi < proportions.size(); ++pi) {
        CurvePoint pt;
        pt.proportion = proportions[pi];
        pt.budget = budgets[pi];
        pt.raw_errors.assign(errors.begin() + static_cast<std::ptrdiff_t>(pi * static_cast<std::size_t>(repeats)),
                             errors.begin() + static_cast<std::ptrdiff_t>((pi + 1) * static_cast<std::size_t>(repeats)));
        pt.median_error = median(pt.raw_errors);
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

double auc(const Curve& curve) {
    if (curve.points.size() < 2) throw DataError("auc: need at least 2 curve points");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        total += 0.5 * (a.median_error + b.median_error) * (b.proportion - a.proportion);
    }
    return total;
}

EstimateReport build_report(const TestPool& pool, const FeatureMatrix& reduced, const SamplerConfig& base_config,
                            const std::vector<double>& proportions, int repeats, std::uint64_t base_seed, int jobs) {
    EstimateReport report;
    report.method = to_string(base_config.method);
    report.pool_name = pool.name();
    report.pool_size = pool.size();
    report.config = base_config;
    report.config.seed = base_seed;

    SamplerConfig concrete = base_config;

    // Aggregation and distance choices are pool-level: resolve any "auto"
    // once with the base seed and pin the result for every run.
    if (base_config.method == Method::AcTracer || base_config.method == Method::CS) {
        ConfidenceProfile profile = base_config.agg && base_config.method == Method::AcTracer
                                        ? profile_for_method(PoolView(pool), *base_config.agg, base_config.bins)
                                        : select_aggregation(PoolView(pool), base_config.bins);
        report.entropy_table = profile.entropy_table;
        report.resolved_agg = base_config.agg && base_config.method == Method::AcTracer ? *base_config.agg : profile.method;
        if (base_config.method == Method::AcTracer) {
            concrete.agg = report.resolved_agg;
            if (base_config.dist) {
                report.resolved_dist = *base_config.dist;
            } else if (profile.values.size() >= 4) {
                const DipResult dip =
                    dip_test(profile.values, base_config.dip_replicates, derive_seed(base_seed, "dip"));
                report.dip = dip;
                report.resolved_dist =
                    dip.p_value < base_config.dip_alpha ? DistanceMetric::WD : DistanceMetric::KS;
            } else {
                report.resolved_dist = DistanceMetric::KS;
            }
            concrete.dist = report.resolved_dist;
        }
    }

    report.true_value = true_mean(pool);
    report.absolute_error = report.true_value == 0.0;
    report.curve = error_curve(pool, reduced, concrete, proportions, repeats, base_seed, jobs);
    report.auc = report.curve.points.size() >= 2 ? auc(report.curve) : 0.0;
    return report;
}

namespace {

ordered_json entropy_json(const std::array<double, 4>& table) {
    ordered_json j;
    for (std::size_t i = 0; i < kAggregationMethods.size(); ++i) j[to_string(kAggregationMethods[i])] = table[i];
    return j;
}

} // namespace

void save_report(const EstimateReport& report, const std::filesystem::path& path) {
    ordered_json j;
    j["method"] = report.method;
    j["pool"] = report.pool_name;
    j["pool_size"] = report.pool_size;

    ordered_json cfg;
    cfg["method"] = to_string(report.config.method);
    cfg["inter"] = to_string(report.config.inter);
    cfg["intra"] = to_string(report.config.intra);
    cfg["fixed_k"] = report.config.fixed_k ? ordered_json(*report.config.fixed_k) : ordered_json(nullptr);
    cfg["agg"] = report.config.agg ? to_string(*report.config.agg) : "auto";
    cfg["dist"] = report.config.dist ? to_string(*report.config.dist) : "auto";
    cfg["bins"] = report.config.bins;
    cfg["seed"] = report.config.seed;
    cfg["min_budget"] = report.config.min_budget ? ordered_json(*report.config.min_budget) : ordered_json(nullptr);
    cfg["clusearch_w"] = report.config.clusearch_w;
    cfg["clusearch_lb"] = report.config.clusearch_lb;
    cfg["dip_replicates"] = report.config.dip_replicates;
    cfg["dip_alpha"] = report.config.dip_alpha;
    j["config"] = cfg;

    // Selection diagnostics: the entropy table and dip result are always
    // echoed so a reader can audit (or dispute) the automatic choices.
    if (report.resolved_agg) {
        j["selection"] = ordered_json{{"rule", "aggregation by maximum histogram entropy; "
                                               "distance by dip test (p < alpha reads multimodal -> wd)"},
                                      {"entropy_table", entropy_json(report.entropy_table)},
                                      {"resolved_agg", to_string(*report.resolved_agg)}};
        if (report.resolved_dist) j["selection"]["resolved_dist"] = to_string(*report.resolved_dist);
        if (report.dip) {
            j["selection"]["dip"] = ordered_json{{"statistic", report.dip->statistic},
                                                 {"p_value", report.dip->p_value},
                                                 {"n", report.dip->n},
                                                 {"replicates", report.dip->replicates}};
        }
    }

    j["true_value"] = report.true_value;
    j["error_mode"] = report.absolute_error ? "absolute" : "relative";
    j["repeats"] = report.curve.repeats;
    ordered_json curve = ordered_json::array();
    for (const CurvePoint& pt : report.curve.points) {
        curve.push_back(ordered_json{{"proportion", pt.proportion},
                                     {"budget", pt.budget},
                                     {"median_relative_error", pt.median_error},
                                     {"raw_errors", pt.raw_errors}});
    }
    j["curve"] = curve;
    j["auc"] = report.auc;

    const std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write report: " + path.string());
    f << j.dump(2) << "\n";
}

EstimateReport load_report(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open report: " + path.string());
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed report " + path.string() + ": " + e.what());
    }
    EstimateReport r;
    try {
        r.method = j.at("method").get<std::string>();
        r.pool_name = j.at("pool").get<std::string>();
        r.pool_size = j.at("pool_size").get<std::size_t>();
        r.true_value = j.at("true_value").get<double>();
        r.absolute_error = j.at("error_mode").get<std::string>() == "absolute";
        r.curve.repeats = j.at("repeats").get<int>();
        for (const auto& pt : j.at("curve")) {
            CurvePoint p;
            p.proportion = pt.at("proportion").get<double>();
            p.budget = pt.at("budget").get<std::size_t>();
            p.median_error = pt.at("median_relative_error").get<double>();
            p.raw_errors = pt.at("raw_errors").get<std::vector<double>>();
            r.curve.points.push_back(std::move(p));
        }
        r.auc = j.at("auc").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("report " + path.string() + " missing field: " + e.what());
    }
    return r;
}

Comparison compare(const std::vector<EstimateReport>& reports) {
    if (reports.empty()) throw DataError("compare: need at least one report");
    Comparison cmp;
    for (const CurvePoint& pt : reports[0].curve.points) cmp.proportions.push_back(pt.proportion);
    for (const EstimateReport& r : reports) {
        if (r.pool_name != reports[0].pool_name || r.pool_size != reports[0].pool_size)
            throw DataError("compare: reports come from different pools");
        if (r.curve.points.size() != cmp.proportions.size())
            throw DataError("compare: proportion grids do not match");
        for (std::size_t i = 0; i < cmp.proportions.size(); ++i)
            if (r.curve.points[i].proportion != cmp.proportions[i])
                throw DataError("compare: proportion grids do not match");
        ComparisonRow row;
        row.method = r.method;
        row.auc = r.auc;
        for (const CurvePoint& pt : r.curve.points) row.median_errors.push_back(pt.median_error);
        cmp.rows.push_back(std::move(row));
    }
    double best = cmp.rows[0].auc;
    for (const ComparisonRow& row : cmp.rows) best = std::min(best, row.auc);
    for (ComparisonRow& row : cmp.rows) row.best = row.auc == best;
    return cmp;
}

void save_comparison_csv(const Comparison& cmp, const std::filesystem::path& path) {
    const std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write comparison csv: " + path.string());
    f << "method,auc,best";
    for (double p : cmp.proportions) {
        std::ostringstream col;
        col << "err_" << p;
        f << "," << col.str();
    }
    f << "\n";
    for (const ComparisonRow& row : cmp.rows) {
        std::ostringstream line;
        line.precision(12);
        line << row.method << "," << row.auc << "," << (row.best ? 1 : 0);
        for (double e : row.median_errors) line << "," << e;
        f << line.str() << "\n";
    }
}

} // namespace actracer
