#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uncattr/data.hpp"
#include "uncattr/explainer.hpp"
#include "uncattr/mlp.hpp"

namespace uncattr {

enum class Technique { lime, reg_lime, ig_nn, ig_regnn };

std::string technique_name(Technique t);

struct FaithfulnessRecord {
    int instance_id = 0;
    double f0 = 0.0;
    double expected_f = 0.0;
    int n_samples = 0;
    Technique technique = Technique::lime;
};

// Prob(E[F] of the regularized technique < F0 of the baseline), binned by
// baseline F0 quantiles.
struct FaithfulnessCurve {
    Eigen::VectorXd bin_edges;      // n_bins + 1
    Eigen::VectorXd bin_centers;    // mean baseline F0 per bin
    Eigen::VectorXd prob_improved;  // in [0,1]
    Eigen::VectorXd standard_error;
    std::vector<int> counts;
};

// Surrogate inference g(x) for a technique; for linear explanations this is
// w.x + b, for IG it is f(baseline) + sum of attributions at x.
using SurrogateFn = std::function<double(const Eigen::VectorXd&)>;

SurrogateFn linear_surrogate(const LinearExplanation& expl);
SurrogateFn ig_surrogate(const MlpPredictor& model, const Eigen::VectorXd& baseline_point,
                         int steps);

double point_faithfulness(const PredictFn& model, const SurrogateFn& surrogate,
                          const Eigen::VectorXd& x0);

// MC estimate of E_eps[(f(x0) - g(x0 + eps))^2]; the reference is always the
// predictor at the original x0.
FaithfulnessRecord expected_faithfulness(const PredictFn& model,
                                         const SurrogateFn& surrogate,
                                         const Eigen::VectorXd& x0,
                                         const UncertaintySpec& spec, int n,
                                         std::uint64_t seed);

FaithfulnessCurve prob_improvement_curve(
    const std::vector<FaithfulnessRecord>& records_regularized,
    const std::vector<FaithfulnessRecord>& records_baseline, int n_bins);

double explanation_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double log_explanation_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double median(std::vector<double> values);

struct SweepRow {
    double lambda = 0.0;
    double correctness_over_noise = 0.0;  // MSE(f(x+eps), y)
    double robustness = 0.0;              // MSE(f(x+eps), f(x))
    double stability_total = 0.0;         // sum_d sd of attribution_d
    Eigen::VectorXd stability_per_feature;
    double correctness_se = 0.0;
    double robustness_se = 0.0;
    double stability_se = 0.0;
};

// Per-instance attribution sampler for a given lambda; returns n x D samples.
using SweepAttributionFn =
    std::function<Eigen::MatrixXd(double lambda, const Eigen::VectorXd& x0,
                                  const Eigen::MatrixXd& hypotheticals)>;

std::vector<SweepRow> appendix_measures(const PredictFn& model,
                                        const StandardizedDataset& dataset,
                                        const UncertaintySpec& spec,
                                        const std::vector<double>& lambda_sweep,
                                        const SweepAttributionFn& attributions, int n,
                                        std::uint64_t seed);

std::string records_to_csv(const std::vector<FaithfulnessRecord>& records);
std::string curve_to_csv(const FaithfulnessCurve& curve);

}  // namespace uncattr
