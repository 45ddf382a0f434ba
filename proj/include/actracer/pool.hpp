#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace actracer {

// One test point: an internal-state feature vector, a per-token confidence
// trace in [0,1], and the hidden per-point metric value in [0,1]. The metric
// is only ever read through a LabelOracle (or the evaluation harness).
struct DataPoint {
    std::string id;
    std::vector<double> features;
    std::vector<double> trace;
    double metric = 0.0;
};

class TestPool {
public:
    TestPool() = default;
    TestPool(std::string name, std::string metric_name, int feature_dim, std::vector<DataPoint> points);

    const std::string& name() const { return name_; }
    const std::string& metric_name() const { return metric_name_; }
    int feature_dim() const { return feature_dim_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<DataPoint>& points() const { return points_; }
    const DataPoint& point(std::size_t i) const { return points_[i]; }

    // -1 if the id is unknown.
    std::ptrdiff_t index_of(const std::string& id) const;

private:
    std::string name_;
    std::string metric_name_;
    int feature_dim_ = 0;
    std::vector<DataPoint> points_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Metric-free view handed to samplers. Keeps label access confined to the
// oracle: this type exposes ids and traces but no metric.
class PoolView {
public:
    explicit PoolView(const TestPool& pool) : pool_(&pool) {}

    std::size_t size() const { return pool_->size(); }
    const std::string& id(std::size_t i) const { return pool_->point(i).id; }
    std::span<const double> trace(std::size_t i) const {
        const auto& t = pool_->point(i).trace;
        return {t.data(), t.size()};
    }
    const std::string& name() const { return pool_->name(); }

private:
    const TestPool* pool_;
};

// Budget-enforcing gateway to metric values. Re-querying an id is free.
class LabelOracle {
public:
    LabelOracle(const TestPool& pool, std::size_t budget) : pool_(&pool), budget_(budget) {}

    double query_label(const std::string& id);
    double query_index(std::size_t index);

    std::size_t budget() const { return budget_; }
    std::size_t spent() const { return queried_.size(); }
    std::size_t call_count() const { return calls_; }

private:
    const TestPool* pool_;
    std::size_t budget_;
    std::unordered_set<std::size_t> queried_;
    std::size_t calls_ = 0;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::pair<std::string, std::string>> issues; // (point id, message)
};

// Manifest JSON { name, metric_name, feature_dim, points_file } referencing
// a JSON Lines points file. Errors carry the offending line number.
TestPool load_pool(const std::filesystem::path& manifest_path);

// Canonical serialization; load_pool(write_pool(pool)) round-trips
// byte-identically for files in this form.
void write_pool(const TestPool& pool, const std::filesystem::path& manifest_path,
                const std::string& points_filename = "points.jsonl");

ValidationReport validate(const TestPool& pool);

// Harness-only ground truth; samplers must not call this.
double true_mean(const TestPool& pool);

} // namespace actracer
