#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "uncattr/data.hpp"
#include "uncattr/explainer.hpp"

namespace uncattr {

// Noisy copies of a query instance drawn from its uncertainty spec.
struct HypotheticalSet {
    Eigen::VectorXd center;
    Eigen::MatrixXd samples;  // n x D; equals center where sigma = 0
    UncertaintySpec spec;
    std::uint64_t seed = 0;

    Eigen::Index n() const { return samples.rows(); }
};

struct DensityCurve {
    Eigen::VectorXd grid;
    Eigen::VectorXd density;
    bool degenerate = false;  // all samples identical; render as a point mark
};

// Per-feature attribution samples over a hypothetical set plus summary stats.
struct AttributionDistribution {
    Eigen::MatrixXd per_feature_samples;  // n x D
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    Eigen::VectorXd ci90_halfwidth;  // half the 5th..95th percentile span
    std::vector<DensityCurve> density;
};

// Maps a hypothetical instance to its attribution vector. Fixed-explanation
// mode wraps a single LinearExplanation; refit mode re-runs the explainer.
using AttributionFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

HypotheticalSet sample_hypotheticals(const Eigen::VectorXd& center,
                                     const UncertaintySpec& spec, int n,
                                     std::uint64_t seed);

AttributionDistribution attribution_distribution(const AttributionFn& explain,
                                                 const HypotheticalSet& hyp,
                                                 int density_grid_size = 64);

AttributionFn fixed_explanation_fn(const LinearExplanation& expl);

// Gaussian KDE with Silverman bandwidth 1.06 * sd * n^(-1/5) on an equally
// spaced grid spanning [min - 3h, max + 3h].
DensityCurve kde_density(const Eigen::VectorXd& samples, int grid_size);

double empirical_quantile(Eigen::VectorXd samples, double q);

std::string distribution_to_json(const AttributionDistribution& dist,
                                 bool emit_samples = false);

}  // namespace uncattr
