#include "uncattr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "uncattr/errors.hpp"
#include "uncattr/propagate.hpp"
#include "uncattr/rng.hpp"

namespace uncattr {

std::string technique_name(Technique t) {
    switch (t) {
        case Technique::lime: return "lime";
        case Technique::reg_lime: return "reg_lime";
        case Technique::ig_nn: return "ig_nn";
        case Technique::ig_regnn: return "ig_regnn";
    }
    return "?";
}

SurrogateFn linear_surrogate(const LinearExplanation& expl) {
    return [expl](const Eigen::VectorXd& x) { return explain_value(expl, x); };
}

SurrogateFn ig_surrogate(const MlpPredictor& model, const Eigen::VectorXd& baseline_point,
                         int steps) {
    const double anchor = predict(model, baseline_point);
    return [&model, baseline_point, steps, anchor](const Eigen::VectorXd& x) {
        return anchor +
               integrated_gradients(model, x, baseline_point, steps).attributions.sum();
    };
}

double point_faithfulness(const PredictFn& model, const SurrogateFn& surrogate,
                          const Eigen::VectorXd& x0) {
    const double diff = model(x0) - surrogate(x0);
    return diff * diff;
}

FaithfulnessRecord expected_faithfulness(const PredictFn& model,
                                         const SurrogateFn& surrogate,
                                         const Eigen::VectorXd& x0,
                                         const UncertaintySpec& spec, int n,
                                         std::uint64_t seed) {
    if (n < 2) throw ArgumentError("expected_faithfulness needs n >= 2");
    const double fx = model(x0);
    if (!std::isfinite(fx)) throw NumericError("non-finite model output at query point");

    FaithfulnessRecord r;
    r.f0 = point_faithfulness(model, surrogate, x0);
    r.n_samples = n;
    if (!spec.any_uncertain()) {
        // eps is identically zero: the estimator equals F0 exactly
        r.expected_f = r.f0;
        return r;
    }

    const auto hyp = sample_hypotheticals(x0, spec, n, seed);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < hyp.n(); ++i) {
        const double g = surrogate(hyp.samples.row(i));
        if (!std::isfinite(g))
            throw NumericError("non-finite surrogate output at hypothetical " +
                               std::to_string(i));
        acc += (fx - g) * (fx - g);
    }

    r.expected_f = acc / n;
    return r;
}

FaithfulnessCurve prob_improvement_curve(
    const std::vector<FaithfulnessRecord>& records_regularized,
    const std::vector<FaithfulnessRecord>& records_baseline, int n_bins) {
    if (n_bins < 1) throw ArgumentError("n_bins must be >= 1");
    std::map<int, const FaithfulnessRecord*> baseline_by_id;
    for (const auto& r : records_baseline) baseline_by_id[r.instance_id] = &r;

    struct Pair {
        double f0_base;
        bool improved;
    };
    std::vector<Pair> pairs;
    for (const auto& reg : records_regularized) {
        auto it = baseline_by_id.find(reg.instance_id);
        if (it == baseline_by_id.end())
            throw ArgumentError("unmatched instance id " +
                                std::to_string(reg.instance_id) + " in record pairing");
        pairs.push_back({it->second->f0, reg.expected_f < it->second->f0});
    }
    if (pairs.empty()) throw ArgumentError("no paired records");

    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& a, const Pair& b) { return a.f0_base < b.f0_base; });

    // equal-count quantile bins
    const std::size_t n = pairs.size();
    FaithfulnessCurve c;
    std::vector<double> centers, probs, ses, edges;
    edges.push_back(pairs.front().f0_base);
    for (int b = 0; b < n_bins; ++b) {
        const std::size_t lo = b * n / n_bins;
        const std::size_t hi = (b + 1) * n / n_bins;
        if (hi <= lo) continue;
        double f0_sum = 0.0;
        int improved = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            f0_sum += pairs[i].f0_base;
            improved += pairs[i].improved ? 1 : 0;
        }
        const int count = static_cast<int>(hi - lo);
        const double p = static_cast<double>(improved) / count;
        centers.push_back(f0_sum / count);
        probs.push_back(p);
        ses.push_back(std::sqrt(p * (1.0 - p) / count));
        c.counts.push_back(count);
        edges.push_back(pairs[hi - 1].f0_base);
    }
    auto to_vec = [](const std::vector<double>& v) {
        return Eigen::VectorXd(
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    c.bin_edges = to_vec(edges);
    c.bin_centers = to_vec(centers);
    c.prob_improved = to_vec(probs);
    c.standard_error = to_vec(ses);
    return c;
}

double explanation_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ArgumentError("attribution dimension mismatch");
    return (a - b).norm();
}

double log_explanation_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::log(std::max(explanation_distance(a, b), 1e-12));
}

namespace {

Eigen::VectorXd ranks(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
    Eigen::VectorXd r(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v(idx[j + 1]) == v(idx[i])) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // tie-averaged
        for (Eigen::Index k = i; k <= j; ++k) r(idx[k]) = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ArgumentError("spearman needs two equal-length vectors, size >= 2");
    const Eigen::VectorXd ra = ranks(a), rb = ranks(b);
    const Eigen::ArrayXd da = ra.array() - ra.mean();
    const Eigen::ArrayXd db = rb.array() - rb.mean();
    const double denom = std::sqrt(da.square().sum() * db.square().sum());
    if (denom == 0.0) return 0.0;  // constant input, no trend
    return (da * db).sum() / denom;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ArgumentError("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SweepRow> appendix_measures(const PredictFn& model,
                                        const StandardizedDataset& dataset,
                                        const UncertaintySpec& spec,
                                        const std::vector<double>& lambda_sweep,
                                        const SweepAttributionFn& attributions, int n,
                                        std::uint64_t seed) {
    if (lambda_sweep.empty()) throw ArgumentError("empty lambda sweep");
    const Eigen::Index m = dataset.n();
    const Eigen::Index d = dataset.d();

    // model-side measures do not depend on lambda; compute once per instance
    std::vector<double> correctness(static_cast<std::size_t>(m));
    std::vector<double> robustness(static_cast<std::size_t>(m));
    std::vector<HypotheticalSet> hyps;
    hyps.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::VectorXd x0 = dataset.features.row(i);
        hyps.push_back(sample_hypotheticals(x0, spec, n,
                                            mix_seed(seed, static_cast<std::uint64_t>(i))));
        const auto& hyp = hyps.back();
        double corr = 0.0, rob = 0.0;
        const double fx = model(x0);
        for (Eigen::Index k = 0; k < hyp.n(); ++k) {
            const double f = model(hyp.samples.row(k));
            corr += (f - dataset.labels(i)) * (f - dataset.labels(i));
            rob += (f - fx) * (f - fx);
        }
        correctness[static_cast<std::size_t>(i)] = corr / n;
        robustness[static_cast<std::size_t>(i)] = rob / n;
    }

    auto mean_se = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
        return std::pair<double, double>{mean, std::sqrt(var / v.size())};
    };

    std::vector<SweepRow> rows;
    for (double lambda : lambda_sweep) {
        SweepRow row;
        row.lambda = lambda;
        std::tie(row.correctness_over_noise, row.correctness_se) = mean_se(correctness);
        std::tie(row.robustness, row.robustness_se) = mean_se(robustness);

        std::vector<double> stab_total(static_cast<std::size_t>(m));
        Eigen::MatrixXd stab_feat = Eigen::MatrixXd::Zero(m, d);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::VectorXd x0 = dataset.features.row(i);
            const Eigen::MatrixXd samples = attributions(lambda, x0, hyps[i].samples);
            double total = 0.0;
            for (Eigen::Index j = 0; j < d; ++j) {
                const double mu = samples.col(j).mean();
                const double sd = samples.rows() > 1
                                      ? std::sqrt((samples.col(j).array() - mu)
                                                      .square().sum() /
                                                  static_cast<double>(samples.rows() - 1))
                                      : 0.0;
                stab_feat(i, j) = sd;
                total += sd;
            }
            stab_total[static_cast<std::size_t>(i)] = total;
        }
        std::tie(row.stability_total, row.stability_se) = mean_se(stab_total);
        row.stability_per_feature = stab_feat.colwise().mean();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string records_to_csv(const std::vector<FaithfulnessRecord>& records) {
    std::ostringstream out;
    out << "instance_id,technique,f0,expected_f,n\n";
    out.precision(17);
    for (const auto& r : records)
        out << r.instance_id << ',' << technique_name(r.technique) << ',' << r.f0 << ','
            << r.expected_f << ',' << r.n_samples << '\n';
    return out.str();
}

std::string curve_to_csv(const FaithfulnessCurve& curve) {
    std::ostringstream out;
    out << "bin_center,prob_improved,standard_error,count\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < curve.bin_centers.size(); ++i)
        out << curve.bin_centers(i) << ',' << curve.prob_improved(i) << ','
            << curve.standard_error(i) << ',' << curve.counts[static_cast<std::size_t>(i)]
            << '\n';
    return out.str();
}

}  // namespace uncattr
