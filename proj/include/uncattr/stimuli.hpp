#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "uncattr/data.hpp"
#include "uncattr/explainer.hpp"
#include "uncattr/mlp.hpp"

namespace uncattr {

struct StimulusCandidate {
    int base_instance_id = 0;
    Eigen::VectorXd perturbed_features;  // standardized units
    double predicted_score = 0.0;        // internal label scale
    double actual_score = 0.0;
    Eigen::VectorXd attribution;
    Eigen::VectorXd attribution_ci;  // 90% CI half-widths
    double score_ci = 0.0;
    // suppressed-explainer variants for the report layer; empty when the
    // pipeline runs with a single explainer
    Eigen::VectorXd suppressed_attribution;
    Eigen::VectorXd suppressed_attribution_ci;
    double suppressed_score_ci = 0.0;
};

struct StimulusSet {
    std::vector<StimulusCandidate> practice;
    std::vector<StimulusCandidate> main;
    std::vector<int> cluster_labels;  // per selected stimulus, practice then main
    std::uint64_t seed = 0;
};

struct StimulusConfig {
    int k_per_instance = 50;
    int k_clusters = 10;
    int n_total = 34;
    int n_practice = 4;
    double score_window_low = 4.0;   // internal scale; 40 on display scale
    double score_window_high = 6.0;  // 60 on display scale
    double threshold = 5.0;          // 50 on display scale
    int mc_samples = 150;            // for per-candidate CI estimation
    int neighborhood_n = 1000;
    double explainer_lambda = 1.0;
};

// Produces an explanation for a standardized instance; lets the pipeline use
// either the baseline or the suppressed explainer.
using ExplainFn = std::function<LinearExplanation(const Eigen::VectorXd&)>;

std::vector<StimulusCandidate> perturb_candidates(const StandardizedDataset& test_set,
                                                  const UncertaintySpec& spec,
                                                  const PredictFn& model,
                                                  const ExplainFn& explain,
                                                  int k_per_instance, int mc_samples,
                                                  std::uint64_t seed,
                                                  const ExplainFn& suppress_explain = {});

std::vector<StimulusCandidate> filter_candidates(const std::vector<StimulusCandidate>& cands,
                                                 double window_low, double window_high,
                                                 double threshold);

// Agglomerative Ward clustering on [features || attribution || predicted ||
// attribution_ci || score_ci || actual], each block re-standardized.
std::vector<int> cluster_candidates(const std::vector<StimulusCandidate>& cands,
                                    int k_clusters, std::uint64_t seed);

StimulusSet stratified_select(const std::vector<StimulusCandidate>& cands,
                              const std::vector<int>& labels, int n_total, int n_practice,
                              double threshold, std::uint64_t seed);

// Generic Ward agglomeration over row vectors; returns a label per row.
std::vector<int> ward_cluster(const Eigen::MatrixXd& points, int k_clusters);

std::string stimulus_set_to_json(const StimulusSet& set,
                                 const std::vector<std::string>& feature_names);
std::string stimulus_set_to_csv(const StimulusSet& set,
                                const std::vector<std::string>& display_names,
                                const Scaler& scaler);

}  // namespace uncattr
