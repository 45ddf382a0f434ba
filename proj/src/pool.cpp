#include "actracer/pool.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "actracer/errors.hpp"
#include "actracer/rng.hpp"

namespace actracer {

using ordered_json = nlohmann::ordered_json;

TestPool::TestPool(std::string name, std::string metric_name, int feature_dim, std::vector<DataPoint> points)
    : name_(std::move(name)), metric_name_(std::move(metric_name)), feature_dim_(feature_dim), points_(std::move(points)) {
    index_.reserve(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) index_.emplace(points_[i].id, i);
}

std::ptrdiff_t TestPool::index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

double LabelOracle::query_label(const std::string& id) {
    const std::ptrdiff_t idx = pool_->index_of(id);
    if (idx < 0) throw DataError("label oracle: unknown id '" + id + "'");
    return query_index(static_cast<std::size_t>(idx));
}

double LabelOracle::query_index(std::size_t index) {
    if (index >= pool_->size()) throw DataError("label oracle: index out of range");
    ++calls_;
    if (!queried_.contains(index)) {
        if (queried_.size() >= budget_) throw DataError("label oracle: budget exhausted");
        queried_.insert(index);
    }
    return pool_->point(index).metric;
}

namespace {

std::string line_msg(const std::filesystem::path& file, std::size_t line, const std::string& msg) {
    std::ostringstream os;
    os << file.string() << ":" << line << ": " << msg;
    return os.str();
}

DataPoint parse_point(const ordered_json& rec, const std::filesystem::path& file, std::size_t line, int feature_dim) {
    DataPoint p;
    if (!rec.is_object()) throw DataError(line_msg(file, line, "record is not a JSON object"));
    try {
        p.id = rec.at("id").get<std::string>();
        p.features = rec.at("features").get<std::vector<double>>();
        p.trace = rec.at("trace").get<std::vector<double>>();
        p.metric = rec.at("metric").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(line_msg(file, line, std::string("malformed record: ") + e.what()));
    }
    if (static_cast<int>(p.features.size()) != feature_dim)
        throw DataError(line_msg(file, line, "point '" + p.id + "': feature dimension " +
                                                 std::to_string(p.features.size()) + " does not match declared " +
                                                 std::to_string(feature_dim)));
    for (double f : p.features)
        if (!std::isfinite(f)) throw DataError(line_msg(file, line, "point '" + p.id + "': non-finite feature"));
    if (p.trace.empty()) throw DataError(line_msg(file, line, "point '" + p.id + "': empty trace"));
    for (double t : p.trace)
        if (!(t >= 0.0 && t <= 1.0))
            throw DataError(line_msg(file, line, "point '" + p.id + "': trace value " + std::to_string(t) + " outside [0,1]"));
    if (!(p.metric >= 0.0 && p.metric <= 1.0))
        throw DataError(line_msg(file, line, "point '" + p.id + "': metric " + std::to_string(p.metric) + " outside [0,1]"));
    return p;
}

} // namespace

TestPool load_pool(const std::filesystem::path& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) throw DataError("cannot open manifest: " + manifest_path.string());
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(mf);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    std::string name, metric_name, points_file;
    int feature_dim = 0;
    try {
        name = manifest.at("name").get<std::string>();
        metric_name = manifest.at("metric_name").get<std::string>();
        feature_dim = manifest.at("feature_dim").get<int>();
        points_file = manifest.at("points_file").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + manifest_path.string() + " missing field: " + e.what());
    }
    if (feature_dim <= 0) throw DataError("manifest " + manifest_path.string() + ": feature_dim must be positive");

    const std::filesystem::path points_path = manifest_path.parent_path() / points_file;
    std::ifstream pf(points_path);
    if (!pf) throw DataError("cannot open points file: " + points_path.string());

    std::vector<DataPoint> points;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(pf, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(line_msg(points_path, lineno, std::string("invalid JSON: ") + e.what()));
        }
        DataPoint p = parse_point(rec, points_path, lineno, feature_dim);
        if (!seen.insert(p.id).second)
            throw DataError(line_msg(points_path, lineno, "duplicate id '" + p.id + "'"));
        points.push_back(std::move(p));
    }
    if (points.empty()) throw DataError("points file " + points_path.string() + " contains no records");

    return TestPool(name, metric_name, feature_dim, std::move(points));
}

void write_pool(const TestPool& pool, const std::filesystem::path& manifest_path, const std::string& points_filename) {
    const std::filesystem::path dir = manifest_path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);

    ordered_json manifest;
    manifest["name"] = pool.name();
    manifest["metric_name"] = pool.metric_name();
    manifest["feature_dim"] = pool.feature_dim();
    manifest["points_file"] = points_filename;

    std::ofstream mf(manifest_path, std::ios::binary | std::ios::trunc);
    if (!mf) throw DataError("cannot write manifest: " + manifest_path.string());
    mf << manifest.dump(2) << "\n";

    const std::filesystem::path points_path = dir / points_filename;
    std::ofstream pf(points_path, std::ios::binary | std::ios::trunc);
    if (!pf) throw DataError("cannot write points file: " + points_path.string());
    for (const DataPoint& p : pool.points()) {
        ordered_json rec;
        rec["id"] = p.id;
        rec["features"] = p.features;
        rec["trace"] = p.trace;
        rec["metric"] = p.metric;
        pf << rec.dump() << "\n";
    }
}

ValidationReport validate(const TestPool& pool) {
    ValidationReport report;
    auto flag = [&](const std::string& id, std::string msg) {
        report.ok = false;
        report.issues.emplace_back(id, std::move(msg));
    };

    if (pool.size() == 0) flag("", "pool is empty");

    std::unordered_set<std::string> seen;
    for (const DataPoint& p : pool.points()) {
        if (!seen.insert(p.id).second) flag(p.id, "duplicate id");
        if (static_cast<int>(p.features.size()) != pool.feature_dim())
            flag(p.id, "feature dimension " + std::to_string(p.features.size()) + " != declared " +
                           std::to_string(pool.feature_dim()));
        for (double f : p.features)
            if (!std::isfinite(f)) {
                flag(p.id, "non-finite feature");
                break;
            }
        if (p.trace.empty()) flag(p.id, "empty trace");
        for (double t : p.trace)
            if (!(t >= 0.0 && t <= 1.0)) {
                flag(p.id, "trace value outside [0,1]");
                break;
            }
        if (!(p.metric >= 0.0 && p.metric <= 1.0)) flag(p.id, "metric outside [0,1]");
    }
    return report;
}

double true_mean(const TestPool& pool) {
    if (pool.size() == 0) throw DataError("true_mean: empty pool");
    KahanSum sum;
    for (const DataPoint& p : pool.points()) sum.add(p.metric);
    return sum.value() / static_cast<double>(pool.size());
}

} // namespace actracer
