#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "test_helpers.hpp"
#include "uncattr/errors.hpp"
#include "uncattr/rng.hpp"
#include "uncattr/stimuli.hpp"

using namespace uncattr;

namespace {

UncertaintySpec make_spec(std::initializer_list<double> sigma) {
    UncertaintySpec s;
    s.sigma = Eigen::VectorXd(static_cast<Eigen::Index>(sigma.size()));
    Eigen::Index i = 0;
    for (double v : sigma) s.sigma(i++) = v;
    return s;
}

ExplainFn fixed_explainer(const Eigen::VectorXd& w) {
    return [w](const Eigen::VectorXd& x) {
        LinearExplanation e;
        e.weights = w;
        e.intercept = 5.0;
        e.center = x;
        return e;
    };
}

StimulusCandidate simple_candidate(double predicted, double actual, double x = 0.0) {
    StimulusCandidate c;
    c.perturbed_features = Eigen::VectorXd{{x}};
    c.predicted_score = predicted;
    c.actual_score = actual;
    c.attribution = Eigen::VectorXd{{x}};
    c.attribution_ci = Eigen::VectorXd{{0.1}};
    c.score_ci = 0.1;
    return c;
}

// canonical partition signature: sorted list of sorted member groups
std::set<std::vector<int>> partition_of(const std::vector<int>& labels) {
    std::map<int, std::vector<int>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i)
        groups[labels[i]].push_back(static_cast<int>(i));
    std::set<std::vector<int>> out;
    for (auto& [l, members] : groups) out.insert(members);
    return out;
}

}  // namespace

TEST_CASE("ward clustering recovers well-separated blobs") {
    auto eng = make_engine(8);
    Eigen::MatrixXd pts(40, 2);
    for (int i = 0; i < 20; ++i) {
        pts(i, 0) = draw_normal(eng) * 0.3;
        pts(i, 1) = draw_normal(eng) * 0.3;
        pts(20 + i, 0) = 10.0 + draw_normal(eng) * 0.3;
        pts(20 + i, 1) = 10.0 + draw_normal(eng) * 0.3;
    }
    const auto labels = ward_cluster(pts, 2);
    for (int i = 1; i < 20; ++i) CHECK(labels[i] == labels[0]);
    for (int i = 21; i < 40; ++i) CHECK(labels[i] == labels[20]);
    CHECK(labels[0] != labels[20]);
}

TEST_CASE("ward edge cases") {
    Eigen::MatrixXd pts(4, 1);
    pts << 0.0, 1.0, 5.0, 6.0;
    const auto singles = ward_cluster(pts, 4);
    CHECK(std::set<int>(singles.begin(), singles.end()).size() == 4);

    const auto pairs = ward_cluster(pts, 2);
    CHECK(pairs[0] == pairs[1]);
    CHECK(pairs[2] == pairs[3]);
    CHECK(pairs[0] != pairs[2]);

    CHECK_THROWS_AS(ward_cluster(pts, 5), ArgumentError);
    CHECK_THROWS_AS(ward_cluster(pts, 0), ArgumentError);
}

TEST_CASE("clustering partition is invariant to input permutation") {
    auto eng = make_engine(12);
    Eigen::MatrixXd pts(30, 3);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts(i) = draw_normal(eng);

    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), eng);
    Eigen::MatrixXd shuffled(30, 3);
    for (int i = 0; i < 30; ++i) shuffled.row(i) = pts.row(perm[i]);

    const auto base = ward_cluster(pts, 4);
    const auto moved = ward_cluster(shuffled, 4);
    std::vector<int> unshuffled(30);
    for (int i = 0; i < 30; ++i) unshuffled[perm[i]] = moved[i];
    CHECK(partition_of(base) == partition_of(unshuffled));
}

TEST_CASE("perturbation stage") {
    StandardizedDataset ds;
    ds.features = Eigen::MatrixXd{{0.2, -0.1}, {0.8, 0.3}, {-0.4, 0.5}};
    ds.labels = Eigen::VectorXd{{5.2, 4.4, 5.6}};
    ds.feature_names = {"a", "b"};
    const PredictFn model = [](const Eigen::VectorXd& x) { return 5.0 + x.sum(); };
    const auto explain = fixed_explainer(Eigen::VectorXd{{1.0, 1.0}});

    SUBCASE("zero noise duplicates the base rows") {
        const auto cands = perturb_candidates(ds, make_spec({0.0, 0.0}), model, explain,
                                              4, 20, 1);
        CHECK(cands.size() == 12);  // k * |test_set|
        for (const auto& c : cands) {
            CHECK(c.perturbed_features ==
                  Eigen::VectorXd(ds.features.row(c.base_instance_id)));
            CHECK(c.actual_score == ds.labels(c.base_instance_id));
            CHECK(c.predicted_score == doctest::Approx(model(c.perturbed_features)));
            CHECK(c.score_ci == 0.0);
            CHECK(c.attribution_ci.isZero());
            CHECK(c.suppressed_attribution.size() == 0);
        }
    }

    SUBCASE("noisy candidates carry uncertainty summaries") {
        StimulusConfig defaults;
        CHECK(defaults.k_per_instance == 50);
        CHECK(defaults.n_total == 34);
        CHECK(defaults.n_practice == 4);

        const auto sup = fixed_explainer(Eigen::VectorXd{{0.1, 1.0}});
        const auto cands = perturb_candidates(ds, make_spec({1.0, 0.0}), model, explain,
                                              3, 200, 1, sup);
        CHECK(cands.size() == 9);
        for (const auto& c : cands) {
            CHECK(c.attribution_ci(0) > 0.0);
            CHECK(c.attribution_ci(1) == 0.0);
            CHECK(c.score_ci > 0.0);
            // suppressed explainer shrinks the uncertain feature's spread
            CHECK(c.suppressed_attribution_ci(0) < c.attribution_ci(0));
            CHECK(c.suppressed_score_ci < c.score_ci);
        }
        const auto again = perturb_candidates(ds, make_spec({1.0, 0.0}), model, explain,
                                              3, 200, 1, sup);
        CHECK(again[4].perturbed_features == cands[4].perturbed_features);
    }
}

TEST_CASE("filter controls") {
    std::vector<StimulusCandidate> cands = {
        simple_candidate(5.5, 4.8),  // opposite sides: rejected
        simple_candidate(3.99, 3.0),  // outside window: rejected
        simple_candidate(5.0, 5.5),  // exactly at threshold: rejected
        simple_candidate(5.5, 5.0),  // actual exactly at threshold: rejected
        simple_candidate(5.5, 6.5),  // accept side, inside window: kept
        simple_candidate(4.5, 4.0),  // reject side, inside window: kept
        simple_candidate(6.0, 6.2),  // boundary value excluded (open window)
    };
    const auto kept = filter_candidates(cands, 4.0, 6.0, 5.0);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].predicted_score == 5.5);
    CHECK(kept[1].predicted_score == 4.5);

    CHECK(filter_candidates({}, 4.0, 6.0, 5.0).empty());  // empty is a signal, not an error
    CHECK_THROWS_AS(filter_candidates(cands, 5.5, 6.0, 5.0), ArgumentError);
}

TEST_CASE("stratified selection balances and stays within the pool") {
    auto eng = make_engine(77);
    std::vector<StimulusCandidate> cands;
    for (int i = 0; i < 200; ++i) {
        const double pred = (i % 2 == 0) ? 5.6 + 0.01 * (i % 30) : 4.4 - 0.01 * (i % 30);
        auto c = simple_candidate(pred, pred + (pred > 5 ? 0.2 : -0.2), draw_normal(eng));
        c.base_instance_id = i;
        cands.push_back(c);
    }
    const auto labels = cluster_candidates(cands, 10, 1);
    CHECK(labels.size() == 200);
    CHECK(*std::max_element(labels.begin(), labels.end()) == 9);

    const auto set = stratified_select(cands, labels, 34, 4, 5.0, 9);
    CHECK(set.practice.size() == 4);
    CHECK(set.main.size() == 30);
    CHECK(set.cluster_labels.size() == 34);

    int accept = 0;
    for (const auto& c : set.main) accept += c.predicted_score > 5.0 ? 1 : 0;
    CHECK(accept == 15);  // 15/15 balance

    // every selection is one of the input candidates
    std::set<int> ids;
    for (const auto& c : set.practice) ids.insert(c.base_instance_id);
    for (const auto& c : set.main) ids.insert(c.base_instance_id);
    CHECK(ids.size() == 34);  // distinct draws
    for (int id : ids) CHECK(id < 200);

    const auto rerun = stratified_select(cands, labels, 34, 4, 5.0, 9);
    for (std::size_t i = 0; i < set.main.size(); ++i)
        CHECK(rerun.main[i].base_instance_id == set.main[i].base_instance_id);
}

TEST_CASE("single cluster reduces to seeded balanced sampling") {
    std::vector<StimulusCandidate> cands;
    for (int i = 0; i < 40; ++i)
        cands.push_back(simple_candidate(i % 2 == 0 ? 5.5 : 4.5, i % 2 == 0 ? 6.0 : 4.0));
    const std::vector<int> labels(40, 0);
    const auto set = stratified_select(cands, labels, 10, 2, 5.0, 3);
    CHECK(set.practice.size() == 2);
    CHECK(set.main.size() == 8);
    int accept = 0;
    for (const auto& c : set.main) accept += c.predicted_score > 5.0 ? 1 : 0;
    CHECK(accept == 4);
}

TEST_CASE("selection reports infeasible balance") {
    std::vector<StimulusCandidate> cands;
    for (int i = 0; i < 40; ++i) cands.push_back(simple_candidate(5.5, 6.0));  // all accept
    const std::vector<int> labels(40, 0);
    CHECK_THROWS_WITH_AS(stratified_select(cands, labels, 10, 0, 5.0, 3),
                         doctest::Contains("balance"), ArgumentError);
    CHECK_THROWS_AS(stratified_select(cands, labels, 100, 4, 5.0, 3), ArgumentError);
}

TEST_CASE("stimulus serialization uses the display scale") {
    StimulusSet set;
    set.seed = 5;
    auto c = simple_candidate(5.5, 6.0, 1.25);
    c.suppressed_attribution = Eigen::VectorXd{{0.4}};
    c.suppressed_attribution_ci = Eigen::VectorXd{{0.02}};
    c.suppressed_score_ci = 0.02;
    set.practice.push_back(c);
    set.main.push_back(simple_candidate(4.5, 4.2, -0.5));
    set.cluster_labels = {0, 1};

    const auto json = stimulus_set_to_json(set, {"alcohol"});
    CHECK(json.find("\"practice\"") != std::string::npos);
    CHECK(json.find("\"suppressed_attribution\"") != std::string::npos);

    Scaler scaler;
    scaler.means = Eigen::VectorXd{{10.0}};
    scaler.sds = Eigen::VectorXd{{2.0}};
    scaler.feature_names = {"alcohol"};
    const auto csv = stimulus_set_to_csv(set, {"Alcohol"}, scaler);
    CHECK(csv.find("role,base_instance_id,predicted_score,actual_score,score_ci") == 0);
    CHECK(csv.find("reading:Alcohol") != std::string::npos);
    CHECK(csv.find("practice,0,55,60,1") != std::string::npos);  // x10 scores
    CHECK(csv.find("12.5") != std::string::npos);  // raw reading 10 + 1.25 * 2
}
