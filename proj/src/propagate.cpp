#include "uncattr/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "uncattr/errors.hpp"
#include "uncattr/rng.hpp"

namespace uncattr {

HypotheticalSet sample_hypotheticals(const Eigen::VectorXd& center,
                                     const UncertaintySpec& spec, int n,
                                     std::uint64_t seed) {
    if (n < 1) throw ArgumentError("hypothetical sample count must be >= 1");
    if (spec.sigma.size() != center.size())
        throw ArgumentError("uncertainty spec dimension mismatch");

    HypotheticalSet h;
    h.center = center;
    h.spec = spec;
    h.seed = seed;
    h.samples.resize(n, center.size());
    // per-sample derived seed so results are independent of worker count
    for (Eigen::Index i = 0; i < n; ++i) {
        auto eng = make_engine(mix_seed(seed, static_cast<std::uint64_t>(i)));
        for (Eigen::Index j = 0; j < center.size(); ++j) {
            const double s = spec.sigma(j);
            h.samples(i, j) = center(j) + (s > 0.0 ? s * draw_normal(eng) : 0.0);
        }
    }
    return h;
}

double empirical_quantile(Eigen::VectorXd samples, double q) {
    std::sort(samples.begin(), samples.end());
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const auto hi = static_cast<Eigen::Index>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return samples(lo) * (1.0 - frac) + samples(hi) * frac;
}

DensityCurve kde_density(const Eigen::VectorXd& samples, int grid_size) {
    if (samples.size() < 2) throw ArgumentError("kde needs at least 2 samples");
    if (grid_size < 2) throw ArgumentError("kde grid_size must be >= 2");

    const double lo = samples.minCoeff();
    const double hi = samples.maxCoeff();
    DensityCurve c;
    if (hi - lo <= 0.0) {
        c.degenerate = true;
        c.grid = Eigen::VectorXd::Constant(1, lo);
        c.density = Eigen::VectorXd::Constant(1, 1.0);
        return c;
    }

    const double n = static_cast<double>(samples.size());
    const double sd = std::sqrt((samples.array() - samples.mean()).square().sum() /
                                (n - 1.0));
    const double h = 1.06 * sd * std::pow(n, -0.2);

    c.grid.setLinSpaced(grid_size, lo - 3.0 * h, hi + 3.0 * h);
    c.density.resize(grid_size);
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
    for (int g = 0; g < grid_size; ++g)
        c.density(g) =
            norm * (-0.5 * ((samples.array() - c.grid(g)) / h).square()).exp().sum();
    return c;
}

AttributionFn fixed_explanation_fn(const LinearExplanation& expl) {
    return [expl](const Eigen::VectorXd& x) { return attribution_vector(expl, x); };
}

AttributionDistribution attribution_distribution(const AttributionFn& explain,
                                                 const HypotheticalSet& hyp,
                                                 int density_grid_size) {
    const Eigen::Index n = hyp.n();
    const Eigen::Index d = hyp.center.size();

    AttributionDistribution dist;
    dist.per_feature_samples.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd a = explain(hyp.samples.row(i));
        if (!a.allFinite())
            throw NumericError("non-finite attribution at hypothetical sample " +
                               std::to_string(i));
        dist.per_feature_samples.row(i) = a;
    }

    dist.mean = dist.per_feature_samples.colwise().mean();
    dist.sd.resize(d);
    dist.ci90_halfwidth.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto col = dist.per_feature_samples.col(j);
        // identical samples have exactly zero spread; col.mean() rounding must
        // not leak into the summaries of certain features
        const bool constant = (col.array() == col(0)).all();
        if (constant) dist.mean(j) = col(0);
        dist.sd(j) = (n > 1 && !constant)
                         ? std::sqrt((col.array() - dist.mean(j)).square().sum() /
                                     static_cast<double>(n - 1))
                         : 0.0;
        dist.ci90_halfwidth(j) =
            n > 1 ? 0.5 * (empirical_quantile(col, 0.95) - empirical_quantile(col, 0.05))
                  : 0.0;
        if (n >= 2) dist.density.push_back(kde_density(col, density_grid_size));
    }
    return dist;
}

std::string distribution_to_json(const AttributionDistribution& dist, bool emit_samples) {
    nlohmann::json j;
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.begin(), v.end());
    };
    j["mean"] = vec(dist.mean);
    j["sd"] = vec(dist.sd);
    j["ci90_halfwidth"] = vec(dist.ci90_halfwidth);
    nlohmann::json dens = nlohmann::json::array();
    for (const auto& c : dist.density) {
        nlohmann::json d;
        d["grid"] = vec(c.grid);
        d["density"] = vec(c.density);
        d["degenerate"] = c.degenerate;
        dens.push_back(d);
    }
    j["density"] = dens;
    if (emit_samples) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < dist.per_feature_samples.rows(); ++i)
            rows.push_back(vec(dist.per_feature_samples.row(i)));
        j["samples"] = rows;
    }
    return j.dump(2);
}

}  // namespace uncattr
