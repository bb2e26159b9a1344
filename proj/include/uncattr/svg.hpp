#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "uncattr/propagate.hpp"

namespace uncattr {

enum class UncertaintyStyle { none, ci, violin };

UncertaintyStyle uncertainty_style_from_string(const std::string& s);

// One horizontal-bar chart: bars grow from a zero axis, positive to the
// right, negative to the left. Uncertainty marks (whisker or violin outline)
// are drawn per feature when the style asks for them.
struct TornadoInput {
    std::string title;
    std::vector<std::string> feature_names;  // display names, top to bottom
    Eigen::VectorXd attributions;            // display scale
    Eigen::VectorXd ci_halfwidth;            // size 0 -> no CI marks
    std::vector<DensityCurve> density;       // empty -> no violins
    double axis_limit = 0.0;  // shared |x| max across chart variants; 0 -> auto
};

std::string tornado_svg(const TornadoInput& input, UncertaintyStyle style);

struct CurveSeries {
    std::string label;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd se;  // size 0 -> no band
    std::string color = "#1f77b4";
};

std::string curve_svg(const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      const std::vector<CurveSeries>& series);

}  // namespace uncattr
