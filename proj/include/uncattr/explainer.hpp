#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "uncattr/data.hpp"

namespace uncattr {

using PredictFn = std::function<double(const Eigen::VectorXd&)>;

// Gaussian neighborhood around a query instance with proximity kernel weights.
struct Neighborhood {
    Eigen::MatrixXd points;          // n x D
    Eigen::VectorXd kernel_weights;  // n, positive
    Eigen::VectorXd center;
    std::uint64_t seed = 0;
};

enum class ExplanationKind { baseline, regularized };

// Local linear surrogate g(x) = w.x + b; the attribution of feature d at x is
// w_d * x_d.
struct LinearExplanation {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    Eigen::VectorXd center;
    double lambda = 0.0;
    Eigen::VectorXd sigma_used;
    ExplanationKind kind = ExplanationKind::baseline;

    Eigen::Index d() const { return weights.size(); }
};

// points ~ center + N(0, I) in standardized space;
// kernel weight = exp(-||p - center||^2 / width^2).
Neighborhood sample_neighborhood(const Eigen::VectorXd& center, int n,
                                 std::uint64_t seed, double kernel_width);

double default_kernel_width(Eigen::Index d);  // 0.75 * sqrt(D)

// Weighted ridge with unpenalized intercept, closed form:
// (X'CX + lambda*Penalty + jitter*I) beta = X'Cf.
LinearExplanation fit_lime(const PredictFn& model, const Neighborhood& nbhd,
                           double lambda);

// Penalty = diag(sigma^2) on the weight rows (Eq. with sigma-weighted L2).
LinearExplanation fit_regularized_lime(const PredictFn& model, const Neighborhood& nbhd,
                                       const UncertaintySpec& spec, double lambda);

double explain_value(const LinearExplanation& expl, const Eigen::VectorXd& x);
Eigen::VectorXd attribution_vector(const LinearExplanation& expl,
                                   const Eigen::VectorXd& x);

std::string explanation_to_json(const LinearExplanation& expl);
LinearExplanation explanation_from_json(const std::string& text);

}  // namespace uncattr
