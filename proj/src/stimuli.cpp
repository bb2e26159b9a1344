#include "uncattr/stimuli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "uncattr/errors.hpp"
#include "uncattr/propagate.hpp"
#include "uncattr/rng.hpp"

namespace uncattr {
namespace {

struct CiSummary {
    Eigen::VectorXd attribution_ci;
    double score_ci;
};

CiSummary attribution_ci_summary(const LinearExplanation& expl,
                                 const HypotheticalSet& hyp) {
    const auto dist = attribution_distribution(fixed_explanation_fn(expl), hyp, 8);
    // score samples are the attribution sums plus the intercept; their CI
    // equals the CI of the summed attribution samples
    Eigen::VectorXd score_samples = dist.per_feature_samples.rowwise().sum();
    const double lo = empirical_quantile(score_samples, 0.05);
    const double hi = empirical_quantile(score_samples, 0.95);
    return {dist.ci90_halfwidth, 0.5 * (hi - lo)};
}

}  // namespace

std::vector<StimulusCandidate> perturb_candidates(const StandardizedDataset& test_set,
                                                  const UncertaintySpec& spec,
                                                  const PredictFn& model,
                                                  const ExplainFn& explain,
                                                  int k_per_instance, int mc_samples,
                                                  std::uint64_t seed,
                                                  const ExplainFn& suppress_explain) {
    if (k_per_instance < 1) throw ArgumentError("k_per_instance must be >= 1");

    std::vector<StimulusCandidate> out;
    out.reserve(static_cast<std::size_t>(test_set.n()) * k_per_instance);
    for (Eigen::Index i = 0; i < test_set.n(); ++i) {
        const Eigen::VectorXd base = test_set.features.row(i);
        const auto perturbed = sample_hypotheticals(
            base, spec, k_per_instance, mix_seed(seed, static_cast<std::uint64_t>(i)));
        for (Eigen::Index k = 0; k < perturbed.n(); ++k) {
            StimulusCandidate c;
            c.base_instance_id = static_cast<int>(i);
            c.perturbed_features = perturbed.samples.row(k);
            c.predicted_score = model(c.perturbed_features);
            c.actual_score = test_set.labels(i);

            const auto hyp = sample_hypotheticals(
                c.perturbed_features, spec, mc_samples,
                mix_seed(seed, 0x104000u + static_cast<std::uint64_t>(i) * 1000 +
                                   static_cast<std::uint64_t>(k)));
            const auto expl = explain(c.perturbed_features);
            c.attribution = attribution_vector(expl, c.perturbed_features);
            auto ci = attribution_ci_summary(expl, hyp);
            c.attribution_ci = ci.attribution_ci;
            c.score_ci = ci.score_ci;

            if (suppress_explain) {
                const auto sup = suppress_explain(c.perturbed_features);
                c.suppressed_attribution = attribution_vector(sup, c.perturbed_features);
                auto sci = attribution_ci_summary(sup, hyp);
                c.suppressed_attribution_ci = sci.attribution_ci;
                c.suppressed_score_ci = sci.score_ci;
            }
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::vector<StimulusCandidate> filter_candidates(const std::vector<StimulusCandidate>& cands,
                                                 double window_low, double window_high,
                                                 double threshold) {
    if (!(window_low < threshold && threshold < window_high))
        throw ArgumentError("score window must straddle the threshold");
    std::vector<StimulusCandidate> out;
    for (const auto& c : cands) {
        if (!(c.predicted_score > window_low && c.predicted_score < window_high)) continue;
        const double pred_side = c.predicted_score - threshold;
        const double actual_side = c.actual_score - threshold;
        if (pred_side == 0.0 || actual_side == 0.0) continue;  // no side, reject
        if ((pred_side > 0) != (actual_side > 0)) continue;
        out.push_back(c);
    }
    return out;
}

std::vector<int> ward_cluster(const Eigen::MatrixXd& points, int k_clusters) {
    const Eigen::Index n = points.rows();
    if (k_clusters < 1 || k_clusters > n)
        throw ArgumentError("k_clusters must be in [1, point count]");

    struct Cluster {
        Eigen::VectorXd centroid;
        double size = 0;
        std::vector<int> members;
        bool active = false;
    };
    std::vector<Cluster> clusters(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        clusters[static_cast<std::size_t>(i)] = {points.row(i), 1.0, {static_cast<int>(i)}, true};
    }

    auto ward_dist = [&](const Cluster& a, const Cluster& b) {
        return a.size * b.size / (a.size + b.size) *
               (a.centroid - b.centroid).squaredNorm();
    };

    // nearest-neighbor chain agglomeration (Ward is reducible)
    int active_count = static_cast<int>(n);
    std::vector<int> chain;
    while (active_count > k_clusters) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < clusters.size(); ++i)
                if (clusters[i].active) {
                    chain.push_back(static_cast<int>(i));
                    break;
                }
        }
        while (true) {
            const int cur = chain.back();
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < clusters.size(); ++j) {
                if (!clusters[j].active || static_cast<int>(j) == cur) continue;
                const double d = ward_dist(clusters[static_cast<std::size_t>(cur)], clusters[j]);
                // deterministic tie break on index
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(j);
                }
            }
            if (chain.size() >= 2 && best == chain[chain.size() - 2]) {
                // reciprocal pair: merge cur and best
                auto& a = clusters[static_cast<std::size_t>(cur)];
                auto& b = clusters[static_cast<std::size_t>(best)];
                const double total = a.size + b.size;
                a.centroid = (a.size * a.centroid + b.size * b.centroid) / total;
                a.size = total;
                a.members.insert(a.members.end(), b.members.begin(), b.members.end());
                b.active = false;
                b.members.clear();
                chain.pop_back();
                chain.pop_back();
                --active_count;
                break;
            }
            chain.push_back(best);
        }
    }

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    int next_label = 0;
    for (const auto& c : clusters) {
        if (!c.active) continue;
        for (int m : c.members) labels[static_cast<std::size_t>(m)] = next_label;
        ++next_label;
    }
    return labels;
}

std::vector<int> cluster_candidates(const std::vector<StimulusCandidate>& cands,
                                    int k_clusters, std::uint64_t /*seed*/) {
    if (cands.empty()) throw ArgumentError("no candidates to cluster");
    if (k_clusters > static_cast<int>(cands.size()))
        throw ArgumentError("fewer candidates than clusters");

    const Eigen::Index d = cands.front().perturbed_features.size();
    const Eigen::Index n = static_cast<Eigen::Index>(cands.size());
    // [features || attribution || predicted || attribution_ci || score_ci || actual]
    Eigen::MatrixXd m(n, 3 * d + 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& c = cands[static_cast<std::size_t>(i)];
        m.block(i, 0, 1, d) = c.perturbed_features.transpose();
        m.block(i, d, 1, d) = c.attribution.transpose();
        m(i, 2 * d) = c.predicted_score;
        m.block(i, 2 * d + 1, 1, d) = c.attribution_ci.transpose();
        m(i, 3 * d + 1) = c.score_ci;
        m(i, 3 * d + 2) = c.actual_score;
    }
    // re-standardize each column; constant columns contribute nothing
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double mu = m.col(j).mean();
        const double sd = std::sqrt((m.col(j).array() - mu).square().mean());
        if (sd > 0)
            m.col(j) = (m.col(j).array() - mu) / sd;
        else
            m.col(j).setZero();
    }
    return ward_cluster(m, k_clusters);
}

StimulusSet stratified_select(const std::vector<StimulusCandidate>& cands,
                              const std::vector<int>& labels, int n_total, int n_practice,
                              double threshold, std::uint64_t seed) {
    if (cands.size() != labels.size()) throw ArgumentError("labels/candidates mismatch");
    if (n_total > static_cast<int>(cands.size()))
        throw ArgumentError("n_total exceeds candidate count");
    if (n_practice < 0 || n_practice >= n_total)
        throw ArgumentError("n_practice must be in [0, n_total)");

    const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    // per-cluster member pools, split by decision class, seeded shuffle
    std::vector<std::vector<std::size_t>> accept_pool(static_cast<std::size_t>(k));
    std::vector<std::vector<std::size_t>> reject_pool(static_cast<std::size_t>(k));
    std::vector<int> cluster_size(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++cluster_size[c];
        (cands[i].predicted_score > threshold ? accept_pool : reject_pool)[c].push_back(i);
    }
    auto eng = make_engine(mix_seed(seed, 0x73656c));
    for (auto& p : accept_pool) std::shuffle(p.begin(), p.end(), eng);
    for (auto& p : reject_pool) std::shuffle(p.begin(), p.end(), eng);

    // largest-remainder proportional allocation
    std::vector<int> quota(static_cast<std::size_t>(k), 0);
    std::vector<std::pair<double, int>> remainders;
    int allocated = 0;
    for (int c = 0; c < k; ++c) {
        const double share = static_cast<double>(cluster_size[static_cast<std::size_t>(c)]) *
                             n_total / static_cast<double>(cands.size());
        quota[static_cast<std::size_t>(c)] = static_cast<int>(std::floor(share));
        allocated += quota[static_cast<std::size_t>(c)];
        remainders.push_back({share - std::floor(share), c});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (int i = 0; allocated < n_total; ++i, ++allocated)
        ++quota[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i) %
                                                    remainders.size()].second)];

    const int n_main = n_total - n_practice;
    int need_accept = n_main / 2 + (n_main % 2);
    int need_reject = n_main / 2;
    // the odd slot (if any) goes to whichever class is richer
    if (n_main % 2 == 1) {
        std::size_t na = 0, nr = 0;
        for (int c = 0; c < k; ++c) {
            na += accept_pool[static_cast<std::size_t>(c)].size();
            nr += reject_pool[static_cast<std::size_t>(c)].size();
        }
        if (nr > na) std::swap(need_accept, need_reject);
    }

    auto draw_from = [&](bool accept_class) -> std::size_t {
        // prefer clusters with remaining quota, fall back to any cluster
        for (int pass = 0; pass < 2; ++pass) {
            int best_cluster = -1;
            int best_quota = std::numeric_limits<int>::min();
            for (int c = 0; c < k; ++c) {
                auto& pool = (accept_class ? accept_pool : reject_pool)[static_cast<std::size_t>(c)];
                if (pool.empty()) continue;
                if (pass == 0 && quota[static_cast<std::size_t>(c)] <= 0) continue;
                if (quota[static_cast<std::size_t>(c)] > best_quota) {
                    best_quota = quota[static_cast<std::size_t>(c)];
                    best_cluster = c;
                }
            }
            if (best_cluster >= 0) {
                auto& pool =
                    (accept_class ? accept_pool : reject_pool)[static_cast<std::size_t>(best_cluster)];
                const std::size_t idx = pool.back();
                pool.pop_back();
                --quota[static_cast<std::size_t>(best_cluster)];
                return idx;
            }
        }
        return static_cast<std::size_t>(-1);
    };

    StimulusSet set;
    set.seed = seed;
    std::vector<std::size_t> chosen;

    // practice first, alternating classes where possible
    for (int i = 0; i < n_practice; ++i) {
        std::size_t idx = draw_from(i % 2 == 0);
        if (idx == static_cast<std::size_t>(-1)) idx = draw_from(i % 2 != 0);
        if (idx == static_cast<std::size_t>(-1))
            throw EmptySelectionError("not enough candidates for practice set");
        chosen.push_back(idx);
        set.practice.push_back(cands[idx]);
    }
    // main trials with accept/reject balance
    while (need_accept + need_reject > 0) {
        const bool want_accept = need_accept >= need_reject && need_accept > 0;
        std::size_t idx = draw_from(want_accept);
        if (idx == static_cast<std::size_t>(-1) && need_accept > 0 && need_reject > 0)
            idx = draw_from(!want_accept);
        if (idx == static_cast<std::size_t>(-1)) {
            const int got = static_cast<int>(set.main.size());
            throw ArgumentError(
                "cannot balance accept/reject classes; achievable main set size " +
                std::to_string(got) + " of " + std::to_string(n_main));
        }
        const bool is_accept = cands[idx].predicted_score > threshold;
        (is_accept ? need_accept : need_reject)--;
        chosen.push_back(idx);
        set.main.push_back(cands[idx]);
    }
    for (std::size_t idx : chosen) set.cluster_labels.push_back(labels[idx]);
    return set;
}

namespace {

nlohmann::json candidate_to_json(const StimulusCandidate& c) {
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.begin(), v.end());
    };
    nlohmann::json j;
    j["base_instance_id"] = c.base_instance_id;
    j["features"] = vec(c.perturbed_features);
    j["predicted_score"] = c.predicted_score;
    j["actual_score"] = c.actual_score;
    j["attribution"] = vec(c.attribution);
    j["attribution_ci"] = vec(c.attribution_ci);
    j["score_ci"] = c.score_ci;
    if (c.suppressed_attribution.size() > 0) {
        j["suppressed_attribution"] = vec(c.suppressed_attribution);
        j["suppressed_attribution_ci"] = vec(c.suppressed_attribution_ci);
        j["suppressed_score_ci"] = c.suppressed_score_ci;
    }
    return j;
}

}  // namespace

std::string stimulus_set_to_json(const StimulusSet& set,
                                 const std::vector<std::string>& feature_names) {
    nlohmann::json j;
    j["seed"] = set.seed;
    j["feature_names"] = feature_names;
    j["cluster_labels"] = set.cluster_labels;
    j["practice"] = nlohmann::json::array();
    for (const auto& c : set.practice) j["practice"].push_back(candidate_to_json(c));
    j["main"] = nlohmann::json::array();
    for (const auto& c : set.main) j["main"].push_back(candidate_to_json(c));
    return j.dump(2);
}

std::string stimulus_set_to_csv(const StimulusSet& set,
                                const std::vector<std::string>& display_names,
                                const Scaler& scaler) {
    std::ostringstream out;
    out.precision(10);
    out << "role,base_instance_id,predicted_score,actual_score,score_ci";
    for (const auto& n : display_names)
        out << ",reading:" << n << ",subscore:" << n << ",subscore_ci:" << n
            << ",suppressed_subscore:" << n << ",suppressed_subscore_ci:" << n;
    out << '\n';

    auto emit = [&](const char* role, const StimulusCandidate& c) {
        // display scale: scores and subscores x10, readings in raw units
        const Eigen::VectorXd raw = inverse_transform(scaler, c.perturbed_features);
        out << role << ',' << c.base_instance_id << ',' << 10.0 * c.predicted_score << ','
            << 10.0 * c.actual_score << ',' << 10.0 * c.score_ci;
        for (Eigen::Index jj = 0; jj < raw.size(); ++jj) {
            const bool has_sup = c.suppressed_attribution.size() > 0;
            out << ',' << raw(jj) << ',' << 10.0 * c.attribution(jj) << ','
                << 10.0 * c.attribution_ci(jj) << ','
                << (has_sup ? 10.0 * c.suppressed_attribution(jj) : 0.0) << ','
                << (has_sup ? 10.0 * c.suppressed_attribution_ci(jj) : 0.0);
        }
        out << '\n';
    };
    for (const auto& c : set.practice) emit("practice", c);
    for (const auto& c : set.main) emit("main", c);
    return out.str();
}

}  // namespace uncattr
