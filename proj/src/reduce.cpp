#include "actracer/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "actracer/errors.hpp"

namespace actracer {

using ordered_json = nlohmann::ordered_json;

FeatureMatrix feature_matrix(const TestPool& pool) {
    FeatureMatrix m(static_cast<Eigen::Index>(pool.size()), pool.feature_dim());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& f = pool.point(i).features;
        for (int j = 0; j < pool.feature_dim(); ++j) m(static_cast<Eigen::Index>(i), j) = f[static_cast<std::size_t>(j)];
    }
    return m;
}

int default_target_dim(int feature_dim, int n_points) {
    return std::min({64, feature_dim, n_points});
}

PcaModel fit_pca(const FeatureMatrix& features, int target_dim) {
    const Eigen::Index n = features.rows();
    const Eigen::Index dim = features.cols();
    if (n < 2) throw DataError("fit_pca: need at least 2 points");
    if (target_dim < 1 || target_dim > std::min<Eigen::Index>(dim, n))
        throw DataError("fit_pca: target_dim must be in [1, min(feature_dim, D)]");
    if (!features.allFinite()) throw DataError("fit_pca: non-finite feature entries");

    PcaModel model;
    model.mean = features.colwise().mean();
    const Eigen::MatrixXd centered = features.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DataError("fit_pca: eigendecomposition failed");

    // Eigen reports eigenvalues ascending; take the top target_dim in
    // descending order and fix each component's sign.
    model.components.resize(target_dim, dim);
    model.explained_variance.resize(target_dim);
    for (int i = 0; i < target_dim; ++i) {
        const Eigen::Index src = dim - 1 - i;
        Eigen::VectorXd comp = solver.eigenvectors().col(src);
        Eigen::Index argmax = 0;
        double best = std::abs(comp(0));
        for (Eigen::Index j = 1; j < dim; ++j) {
            if (std::abs(comp(j)) > best) {
                best = std::abs(comp(j));
                argmax = j;
            }
        }
        if (comp(argmax) < 0.0) comp = -comp;
        model.components.row(i) = comp.transpose();
        model.explained_variance(i) = std::max(0.0, solver.eigenvalues()(src));
    }
    return model;
}

FeatureMatrix transform(const PcaModel& model, const FeatureMatrix& features) {
    if (features.cols() != model.mean.size())
        throw DataError("transform: feature dimension does not match PCA model");
    return (features.rowwise() - model.mean.transpose()) * model.components.transpose();
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
    ordered_json j;
    j["mean"] = std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size());
    std::vector<double> comps(model.components.size());
    for (Eigen::Index r = 0; r < model.components.rows(); ++r)
        for (Eigen::Index c = 0; c < model.components.cols(); ++c)
            comps[static_cast<std::size_t>(r * model.components.cols() + c)] = model.components(r, c);
    j["rows"] = model.components.rows();
    j["cols"] = model.components.cols();
    j["components"] = comps;
    j["explained_variance"] =
        std::vector<double>(model.explained_variance.data(), model.explained_variance.data() + model.explained_variance.size());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write PCA cache: " + path.string());
    f << j.dump(2) << "\n";
}

PcaModel load_pca(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open PCA cache: " + path.string());
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed PCA cache " + path.string() + ": " + e.what());
    }
    PcaModel model;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto comps = j.at("components").get<std::vector<double>>();
    const auto ev = j.at("explained_variance").get<std::vector<double>>();
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(comps.size()) != rows * cols || static_cast<Eigen::Index>(mean.size()) != cols ||
        static_cast<Eigen::Index>(ev.size()) != rows)
        throw DataError("PCA cache " + path.string() + ": inconsistent shapes");
    model.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), cols);
    model.components.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) model.components(r, c) = comps[static_cast<std::size_t>(r * cols + c)];
    model.explained_variance = Eigen::Map<const Eigen::VectorXd>(ev.data(), rows);
    return model;
}

} // namespace actracer
