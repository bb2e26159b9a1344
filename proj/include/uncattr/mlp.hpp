#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "uncattr/data.hpp"

namespace uncattr {

// Feed-forward tanh regressor with a single linear output. Plays both the
// baseline predictor and the uncertainty-regularized predictor (lambda > 0).
struct MlpPredictor {
    std::vector<Eigen::MatrixXd> layer_weights;  // layer l: out x in
    std::vector<Eigen::VectorXd> layer_biases;
    int input_dim = 0;
    double regularization_lambda = 0.0;

    std::size_t layer_count() const { return layer_weights.size(); }
    Eigen::Index parameter_count() const;
};

struct TrainConfig {
    std::vector<int> hidden_sizes{32, 16};
    double learning_rate = 1e-2;
    int epochs = 300;
    int batch_size = 64;
    std::uint64_t seed = 0;
    int ig_steps = 50;     // step count for the penalty term during training
    double lambda = 0.0;   // uncertainty penalty weight
};

struct IgAttribution {
    Eigen::VectorXd attributions;
    Eigen::VectorXd baseline_point;
    double completeness_gap = 0.0;  // sum(attributions) - (f(x) - f(baseline))
};

struct Batch {
    Eigen::MatrixXd x;  // n x D
    Eigen::VectorXd y;  // n
};

struct TrainingLogEntry {
    int epoch;
    double loss;
};

MlpPredictor init_mlp(int input_dim, const std::vector<int>& hidden_sizes,
                      std::uint64_t seed);

double predict(const MlpPredictor& model, const Eigen::VectorXd& x);
Eigen::VectorXd predict_batch(const MlpPredictor& model, const Eigen::MatrixXd& x);

// Gradient of the output with respect to the input point.
Eigen::VectorXd input_gradient(const MlpPredictor& model, const Eigen::VectorXd& x);

// Midpoint-rule path integral of input gradients from baseline_point to x.
IgAttribution integrated_gradients(const MlpPredictor& model, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& baseline_point, int steps);

// Mean squared error over the batch plus lambda * mean ||sigma o IG(x)||^2,
// with the exact parameter gradient (the IG Riemann sum is differentiated
// through). Returns the flattened gradient in to_flat() order.
std::pair<double, Eigen::VectorXd> loss_and_grad(const MlpPredictor& model,
                                                 const Batch& batch,
                                                 const UncertaintySpec& spec,
                                                 double lambda, int ig_steps);

Eigen::VectorXd to_flat(const MlpPredictor& model);
void from_flat(MlpPredictor& model, const Eigen::VectorXd& flat);

MlpPredictor train_mlp(const StandardizedDataset& train, const TrainConfig& config,
                       std::vector<TrainingLogEntry>* log = nullptr);
MlpPredictor train_regularized_mlp(const StandardizedDataset& train,
                                   const UncertaintySpec& spec, const TrainConfig& config,
                                   std::vector<TrainingLogEntry>* log = nullptr);

std::string mlp_to_json(const MlpPredictor& model, const Scaler* scaler = nullptr);
MlpPredictor mlp_from_json(const std::string& text);

}  // namespace uncattr
