#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace uncattr {

// Raw tabular regression data as read from CSV, before any preprocessing.
struct RawTable {
    std::vector<std::string> feature_names;
    Eigen::MatrixXd rows;    // N x D
    Eigen::VectorXd labels;  // N

    Eigen::Index n() const { return rows.rows(); }
    Eigen::Index d() const { return rows.cols(); }
};

// Per-column z-score statistics fitted on a training split.
struct Scaler {
    Eigen::VectorXd means;
    Eigen::VectorXd sds;  // strictly positive
    std::vector<std::string> feature_names;
};

struct StandardizedDataset {
    Eigen::MatrixXd features;  // N x D, z-scored
    Eigen::VectorXd labels;    // raw label scale
    Scaler scaler;
    std::vector<std::string> feature_names;

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index d() const { return features.cols(); }
};

enum class NoiseLevel { high, medium, low, none };

// Per-feature Gaussian noise scales in standardized units.
struct UncertaintySpec {
    Eigen::VectorXd sigma;  // D, nonnegative, 0 for certain features

    Eigen::Index d() const { return sigma.size(); }
    bool any_uncertain() const { return sigma.maxCoeff() > 0.0; }
};

// Reads an RFC-4180-style CSV (custom delimiter allowed; quoted fields
// stripped), reorders feature columns to `feature_subset` order, and extracts
// `label_name` as the label vector.
RawTable ingest(const std::string& path,
                const std::vector<std::string>& feature_subset,
                const std::string& label_name, char delimiter = ',');

// Seeded uniform shuffle then prefix cut: first ceil(N*(1-f)) rows train,
// remainder test.
std::pair<RawTable, RawTable> split(const RawTable& raw, double test_fraction,
                                    std::uint64_t seed);

// z = (x - mean)/sd per column, population sd, fitted on `train` only.
std::pair<Scaler, StandardizedDataset> fit_standardize(const RawTable& train);
StandardizedDataset transform(const Scaler& scaler, const RawTable& table);

// Maps a standardized row back to raw units.
Eigen::VectorXd inverse_transform(const Scaler& scaler, const Eigen::VectorXd& z);

double noise_level_scale(NoiseLevel level);
NoiseLevel noise_level_from_string(const std::string& s);

// sigma[d] = level scale (in train-sd units, = 1 after standardization) for
// listed features, 0 elsewhere.
UncertaintySpec make_uncertainty_spec(NoiseLevel level,
                                      const std::vector<std::string>& uncertain_features,
                                      const StandardizedDataset& dataset);

std::string scaler_to_json(const Scaler& scaler);
Scaler scaler_from_json(const std::string& text);

}  // namespace uncattr
