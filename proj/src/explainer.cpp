#include "uncattr/explainer.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "uncattr/errors.hpp"
#include "uncattr/rng.hpp"

namespace uncattr {
namespace {

constexpr double kJitter = 1e-8;

LinearExplanation solve_weighted_ridge(const PredictFn& model, const Neighborhood& nbhd,
                                       const Eigen::VectorXd& penalty_diag,
                                       double lambda) {
    const Eigen::Index n = nbhd.points.rows();
    const Eigen::Index d = nbhd.points.cols();

    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f(i) = model(nbhd.points.row(i));
    if (!f.allFinite()) throw NumericError("non-finite predictor output in neighborhood");

    // design matrix with trailing intercept column
    Eigen::MatrixXd x(n, d + 1);
    x.leftCols(d) = nbhd.points;
    x.col(d).setOnes();

    // the data term is the weight-normalized mean so lambda is comparable
    // across neighborhood sizes (duplicating points leaves the fit unchanged)
    const Eigen::ArrayXd c = nbhd.kernel_weights.array() / nbhd.kernel_weights.sum();
    Eigen::MatrixXd xtcx = x.transpose() * (x.array().colwise() * c).matrix();
    for (Eigen::Index j = 0; j < d; ++j) xtcx(j, j) += lambda * penalty_diag(j);
    xtcx.diagonal().array() += kJitter;  // intercept row included, keeps it nonsingular
    const Eigen::VectorXd rhs = x.transpose() * (f.array() * c).matrix();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtcx);
    if (ldlt.info() != Eigen::Success)
        throw NumericError("singular normal matrix in surrogate fit");
    const Eigen::VectorXd beta = ldlt.solve(rhs);
    if (!beta.allFinite()) throw NumericError("surrogate fit produced non-finite weights");

    LinearExplanation e;
    e.weights = beta.head(d);
    e.intercept = beta(d);
    e.center = nbhd.center;
    e.lambda = lambda;
    return e;
}

}  // namespace

double default_kernel_width(Eigen::Index d) {
    return 0.75 * std::sqrt(static_cast<double>(d));
}

Neighborhood sample_neighborhood(const Eigen::VectorXd& center, int n,
                                 std::uint64_t seed, double kernel_width) {
    const Eigen::Index d = center.size();
    if (n < d + 2)
        throw ArgumentError("neighborhood size " + std::to_string(n) +
                            " too small for dimension " + std::to_string(d));
    if (!(kernel_width > 0)) throw ArgumentError("kernel_width must be > 0");

    Neighborhood nb;
    nb.center = center;
    nb.seed = seed;
    nb.points.resize(n, d);
    auto eng = make_engine(mix_seed(seed, 0x6e626864));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            nb.points(i, j) = center(j) + draw_normal(eng);
    nb.kernel_weights =
        (-(nb.points.rowwise() - center.transpose()).rowwise().squaredNorm().array() /
         (kernel_width * kernel_width))
            .exp()
            .matrix();
    return nb;
}

LinearExplanation fit_lime(const PredictFn& model, const Neighborhood& nbhd,
                           double lambda) {
    if (lambda < 0) throw ArgumentError("lambda must be >= 0");
    auto e = solve_weighted_ridge(model, nbhd,
                                  Eigen::VectorXd::Ones(nbhd.points.cols()), lambda);
    e.sigma_used = Eigen::VectorXd::Zero(nbhd.points.cols());
    e.kind = ExplanationKind::baseline;
    return e;
}

LinearExplanation fit_regularized_lime(const PredictFn& model, const Neighborhood& nbhd,
                                       const UncertaintySpec& spec, double lambda) {
    if (lambda < 0) throw ArgumentError("lambda must be >= 0");
    if (spec.sigma.size() != nbhd.points.cols())
        throw ArgumentError("uncertainty spec dimension mismatch");
    auto e = solve_weighted_ridge(model, nbhd, spec.sigma.array().square().matrix(),
                                  lambda);
    e.sigma_used = spec.sigma;
    e.kind = ExplanationKind::regularized;
    return e;
}

double explain_value(const LinearExplanation& expl, const Eigen::VectorXd& x) {
    if (x.size() != expl.d()) throw ArgumentError("explanation dimension mismatch");
    return expl.weights.dot(x) + expl.intercept;
}

Eigen::VectorXd attribution_vector(const LinearExplanation& expl,
                                   const Eigen::VectorXd& x) {
    if (x.size() != expl.d()) throw ArgumentError("explanation dimension mismatch");
    return (expl.weights.array() * x.array()).matrix();
}

std::string explanation_to_json(const LinearExplanation& expl) {
    nlohmann::json j;
    j["weights"] = std::vector<double>(expl.weights.begin(), expl.weights.end());
    j["intercept"] = expl.intercept;
    j["center"] = std::vector<double>(expl.center.begin(), expl.center.end());
    j["lambda"] = expl.lambda;
    j["sigma"] = std::vector<double>(expl.sigma_used.begin(), expl.sigma_used.end());
    j["kind"] = expl.kind == ExplanationKind::baseline ? "baseline" : "regularized";
    return j.dump(2);
}

LinearExplanation explanation_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    LinearExplanation e;
    auto vec = [&](const char* key) {
        const auto v = j.at(key).get<std::vector<double>>();
        return Eigen::VectorXd(
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    e.weights = vec("weights");
    e.intercept = j.at("intercept").get<double>();
    e.center = vec("center");
    e.lambda = j.at("lambda").get<double>();
    e.sigma_used = vec("sigma");
    e.kind = j.at("kind") == "baseline" ? ExplanationKind::baseline
                                        : ExplanationKind::regularized;
    return e;
}

}  // namespace uncattr
