#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uncattr/data.hpp"
#include "uncattr/stimuli.hpp"

namespace uncattr {

// Everything a command run needs, loadable from one JSON file with flag
// overrides on top. All seeds are explicit.
struct RunConfig {
    std::string dataset_path = "data/winequality-red.csv";
    char delimiter = ';';
    std::vector<std::string> features = {"alcohol", "pH", "total sulfur dioxide",
                                         "sulphates", "volatile acidity"};
    std::string label = "quality";
    double test_fraction = 0.2;

    std::string noise_level = "high";
    std::vector<std::string> uncertain_features = {"alcohol", "volatile acidity"};

    std::vector<int> hidden_sizes = {32, 16};
    double learning_rate = 1e-2;
    int epochs = 300;
    int batch_size = 64;
    double predictor_lambda = 0.5;  // uncertainty penalty for the RegNN
    int ig_train_steps = 50;
    int ig_report_steps = 200;

    int neighborhood_n = 1000;
    double kernel_width = 0.0;  // 0 -> 0.75 * sqrt(D)
    std::vector<double> suppress_lambda_sweep = {0.1, 1.0, 10.0};
    int lambda_validation_instances = 30;

    int mc_samples = 150;          // metric estimation
    int display_mc_samples = 1000;  // violin smoothness
    int curve_bins = 10;

    StimulusConfig stimuli;

    std::uint64_t seed = 20260823;
    std::string out_dir = "out";
    std::string uncertainty_style = "violin";
    std::map<std::string, std::string> display_names = {
        {"volatile acidity", "Vinegar Taint"}, {"total sulfur dioxide", "SO2"}};
};

RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config);

// train: fit the baseline NN and the uncertainty-regularized NN, write model
// JSON files plus a training-log CSV into out_dir.
void cmd_train(const RunConfig& config);

// explain: report one test instance as Baseline / Show / Suppress /
// ShowSuppress (JSON + four tornado SVGs sharing one x-axis scale).
void cmd_explain(const RunConfig& config, int instance_index);

// simulate: faithfulness records per technique and level, improvement-curve
// CSVs and SVG charts; optional measure sweep table.
void cmd_simulate(const RunConfig& config, const std::vector<std::string>& levels,
                  bool sweep);

// stimuli: perturb -> filter -> cluster -> stratified select, written as JSON
// and display-scale CSV. Empty stages raise EmptySelectionError with counts.
void cmd_stimuli(const RunConfig& config);

}  // namespace uncattr
