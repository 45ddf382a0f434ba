#pragma once

#include <filesystem>

#include <Eigen/Dense>

#include "actracer/pool.hpp"

namespace actracer {

// Rows are points in pool order, columns are feature coordinates.
using FeatureMatrix = Eigen::MatrixXd;

// Deterministic principal-component model. Components are the top
// eigenvectors of the (D-1)-divisor sample covariance, each sign-fixed so
// its largest-magnitude entry is positive.
struct PcaModel {
    Eigen::VectorXd mean;              // feature_dim
    Eigen::MatrixXd components;        // target_dim x feature_dim, orthonormal rows
    Eigen::VectorXd explained_variance; // non-increasing, non-negative
};

FeatureMatrix feature_matrix(const TestPool& pool);

int default_target_dim(int feature_dim, int n_points);

PcaModel fit_pca(const FeatureMatrix& features, int target_dim);

// Centered projection onto the components; output is D x target_dim.
FeatureMatrix transform(const PcaModel& model, const FeatureMatrix& features);

void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

} // namespace actracer
