#include "uncattr/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "uncattr/errors.hpp"
#include "uncattr/explainer.hpp"
#include "uncattr/metrics.hpp"
#include "uncattr/mlp.hpp"
#include "uncattr/propagate.hpp"
#include "uncattr/rng.hpp"
#include "uncattr/svg.hpp"

namespace uncattr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// seed namespaces so different stages never share random streams
constexpr std::uint64_t kSeedSplit = 0x73706c69;
constexpr std::uint64_t kSeedTrainNn = 0x6e6e;
constexpr std::uint64_t kSeedTrainReg = 0x7265676e;
constexpr std::uint64_t kSeedNbhd = 0x6e626864;
constexpr std::uint64_t kSeedMetric = 0x6d657472;
constexpr std::uint64_t kSeedDisplay = 0x64697370;
constexpr std::uint64_t kSeedLambdaSel = 0x6c73656c;
constexpr std::uint64_t kSeedStimuli = 0x7374696d;
constexpr std::uint64_t kSeedSweep = 0x73777065;

void write_file(const fs::path& path, const std::string& body) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write " + path.string());
    out << body;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct PreparedData {
    Scaler scaler;
    StandardizedDataset train;
    StandardizedDataset test;
    UncertaintySpec spec;
};

PreparedData prepare(const RunConfig& c) {
    if (!fs::exists(c.dataset_path))
        throw ArgumentError("dataset not found: " + c.dataset_path);
    const auto raw = ingest(c.dataset_path, c.features, c.label, c.delimiter);
    auto [train_raw, test_raw] = split(raw, c.test_fraction, mix_seed(c.seed, kSeedSplit));
    PreparedData d;
    auto [scaler, train] = fit_standardize(train_raw);
    d.scaler = std::move(scaler);
    d.train = std::move(train);
    d.test = transform(d.scaler, test_raw);
    d.spec = make_uncertainty_spec(noise_level_from_string(c.noise_level),
                                   c.uncertain_features, d.train);
    return d;
}

double kernel_width_of(const RunConfig& c, Eigen::Index d) {
    return c.kernel_width > 0.0 ? c.kernel_width : default_kernel_width(d);
}

fs::path model_path(const RunConfig& c, bool regularized) {
    return fs::path(c.out_dir) / (regularized ? "model_regnn.json" : "model_nn.json");
}

MlpPredictor load_model(const RunConfig& c, bool regularized) {
    const auto path = model_path(c, regularized);
    if (!fs::exists(path))
        throw ArgumentError("model file not found (run train first): " + path.string());
    return mlp_from_json(read_file(path));
}

PredictFn predictor_of(const MlpPredictor& model) {
    return [&model](const Eigen::VectorXd& x) { return predict(model, x); };
}

std::vector<std::string> display_names_of(const RunConfig& c) {
    std::vector<std::string> names;
    for (const auto& f : c.features) {
        auto it = c.display_names.find(f);
        names.push_back(it == c.display_names.end() ? f : it->second);
    }
    return names;
}

// pick the suppression weight by minimizing mean expected faithfulness on a
// validation slice of the test set
double select_suppress_lambda(const RunConfig& c, const PredictFn& f,
                              const StandardizedDataset& test,
                              const UncertaintySpec& spec) {
    if (c.suppress_lambda_sweep.empty())
        throw ArgumentError("suppress lambda sweep is empty");
    const Eigen::Index n_val =
        std::min<Eigen::Index>(c.lambda_validation_instances, test.n());
    if (n_val == 0) throw ArgumentError("empty test set");
    const double width = kernel_width_of(c, test.d());

    double best_lambda = c.suppress_lambda_sweep.front();
    double best_mean = std::numeric_limits<double>::infinity();
    for (double lambda : c.suppress_lambda_sweep) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n_val; ++i) {
            const Eigen::VectorXd x0 = test.features.row(i);
            const auto nbhd = sample_neighborhood(
                x0, c.neighborhood_n,
                mix_seed(mix_seed(c.seed, kSeedLambdaSel), static_cast<std::uint64_t>(i)),
                width);
            const auto expl = fit_regularized_lime(f, nbhd, spec, lambda);
            const auto rec = expected_faithfulness(
                f, linear_surrogate(expl), x0, spec, c.mc_samples,
                mix_seed(mix_seed(c.seed, kSeedLambdaSel + 1),
                         static_cast<std::uint64_t>(i)));
            acc += rec.expected_f;
        }
        const double mean = acc / static_cast<double>(n_val);
        if (mean < best_mean) {
            best_mean = mean;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

std::vector<double> vec_of(const Eigen::VectorXd& v, double scale = 1.0) {
    std::vector<double> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[static_cast<std::size_t>(i)] = scale * v(i);
    return out;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    if (!fs::exists(path)) throw ArgumentError("config file not found: " + path);
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ArgumentError("config parse error in " + path + ": " + e.what());
    }

    RunConfig c;
    try {
        c.dataset_path = j.value("dataset_path", c.dataset_path);
        if (j.contains("delimiter")) {
            const std::string d = j.at("delimiter");
            if (d.size() != 1) throw ArgumentError("delimiter must be one character");
            c.delimiter = d[0];
        }
        c.features = j.value("features", c.features);
        c.label = j.value("label", c.label);
        c.test_fraction = j.value("test_fraction", c.test_fraction);
        c.noise_level = j.value("noise_level", c.noise_level);
        c.uncertain_features = j.value("uncertain_features", c.uncertain_features);
        c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.predictor_lambda = j.value("predictor_lambda", c.predictor_lambda);
        c.ig_train_steps = j.value("ig_train_steps", c.ig_train_steps);
        c.ig_report_steps = j.value("ig_report_steps", c.ig_report_steps);
        c.neighborhood_n = j.value("neighborhood_n", c.neighborhood_n);
        c.kernel_width = j.value("kernel_width", c.kernel_width);
        c.suppress_lambda_sweep =
            j.value("suppress_lambda_sweep", c.suppress_lambda_sweep);
        c.lambda_validation_instances =
            j.value("lambda_validation_instances", c.lambda_validation_instances);
        c.mc_samples = j.value("mc_samples", c.mc_samples);
        c.display_mc_samples = j.value("display_mc_samples", c.display_mc_samples);
        c.curve_bins = j.value("curve_bins", c.curve_bins);
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
        c.uncertainty_style = j.value("uncertainty_style", c.uncertainty_style);
        if (j.contains("display_names"))
            c.display_names =
                j.at("display_names").get<std::map<std::string, std::string>>();
        if (j.contains("stimuli")) {
            const auto& s = j.at("stimuli");
            c.stimuli.k_per_instance = s.value("k_per_instance", c.stimuli.k_per_instance);
            c.stimuli.k_clusters = s.value("k_clusters", c.stimuli.k_clusters);
            c.stimuli.n_total = s.value("n_total", c.stimuli.n_total);
            c.stimuli.n_practice = s.value("n_practice", c.stimuli.n_practice);
            c.stimuli.score_window_low =
                s.value("score_window_low", c.stimuli.score_window_low);
            c.stimuli.score_window_high =
                s.value("score_window_high", c.stimuli.score_window_high);
            c.stimuli.threshold = s.value("threshold", c.stimuli.threshold);
            c.stimuli.mc_samples = s.value("mc_samples", c.stimuli.mc_samples);
            c.stimuli.neighborhood_n =
                s.value("neighborhood_n", c.stimuli.neighborhood_n);
            c.stimuli.explainer_lambda =
                s.value("explainer_lambda", c.stimuli.explainer_lambda);
        }
    } catch (const json::exception& e) {
        throw ArgumentError("config field error in " + path + ": " + e.what());
    }
    return c;
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["dataset_path"] = c.dataset_path;
    j["delimiter"] = std::string(1, c.delimiter);
    j["features"] = c.features;
    j["label"] = c.label;
    j["test_fraction"] = c.test_fraction;
    j["noise_level"] = c.noise_level;
    j["uncertain_features"] = c.uncertain_features;
    j["hidden_sizes"] = c.hidden_sizes;
    j["learning_rate"] = c.learning_rate;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["predictor_lambda"] = c.predictor_lambda;
    j["ig_train_steps"] = c.ig_train_steps;
    j["ig_report_steps"] = c.ig_report_steps;
    j["neighborhood_n"] = c.neighborhood_n;
    j["kernel_width"] = c.kernel_width;
    j["suppress_lambda_sweep"] = c.suppress_lambda_sweep;
    j["lambda_validation_instances"] = c.lambda_validation_instances;
    j["mc_samples"] = c.mc_samples;
    j["display_mc_samples"] = c.display_mc_samples;
    j["curve_bins"] = c.curve_bins;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["uncertainty_style"] = c.uncertainty_style;
    j["display_names"] = c.display_names;
    j["stimuli"] = {{"k_per_instance", c.stimuli.k_per_instance},
                    {"k_clusters", c.stimuli.k_clusters},
                    {"n_total", c.stimuli.n_total},
                    {"n_practice", c.stimuli.n_practice},
                    {"score_window_low", c.stimuli.score_window_low},
                    {"score_window_high", c.stimuli.score_window_high},
                    {"threshold", c.stimuli.threshold},
                    {"mc_samples", c.stimuli.mc_samples},
                    {"neighborhood_n", c.stimuli.neighborhood_n},
                    {"explainer_lambda", c.stimuli.explainer_lambda}};
    return j.dump(2);
}

void cmd_train(const RunConfig& c) {
    const auto data = prepare(c);

    TrainConfig base;
    base.hidden_sizes = c.hidden_sizes;
    base.learning_rate = c.learning_rate;
    base.epochs = c.epochs;
    base.batch_size = c.batch_size;
    base.ig_steps = c.ig_train_steps;
    base.seed = mix_seed(c.seed, kSeedTrainNn);
    base.lambda = 0.0;

    TrainConfig reg = base;
    reg.seed = mix_seed(c.seed, kSeedTrainReg);
    reg.lambda = c.predictor_lambda;

    std::vector<TrainingLogEntry> log_nn, log_reg;
    const auto nn = train_mlp(data.train, base, &log_nn);
    const auto regnn = train_regularized_mlp(data.train, data.spec, reg, &log_reg);

    write_file(model_path(c, false), mlp_to_json(nn, &data.scaler));
    write_file(model_path(c, true), mlp_to_json(regnn, &data.scaler));

    std::ostringstream log;
    log.precision(17);
    log << "epoch,loss_nn,loss_regnn\n";
    for (std::size_t i = 0; i < log_nn.size(); ++i)
        log << log_nn[i].epoch << ',' << log_nn[i].loss << ','
            << (i < log_reg.size() ? log_reg[i].loss : 0.0) << '\n';
    write_file(fs::path(c.out_dir) / "training_log.csv", log.str());
}

void cmd_explain(const RunConfig& c, int instance_index) {
    const auto data = prepare(c);
    const auto nn = load_model(c, false);
    const auto f = predictor_of(nn);

    if (instance_index < 0 || instance_index >= data.test.n())
        throw ArgumentError("instance index " + std::to_string(instance_index) +
                            " outside test set of size " + std::to_string(data.test.n()));
    const Eigen::VectorXd x0 = data.test.features.row(instance_index);

    const double width = kernel_width_of(c, data.test.d());
    const auto nbhd = sample_neighborhood(
        x0, c.neighborhood_n,
        mix_seed(mix_seed(c.seed, kSeedNbhd), static_cast<std::uint64_t>(instance_index)),
        width);
    const auto baseline = fit_lime(f, nbhd, 0.0);
    const double lambda = select_suppress_lambda(c, f, data.test, data.spec);
    const auto suppressed = fit_regularized_lime(f, nbhd, data.spec, lambda);

    const auto hyp = sample_hypotheticals(
        x0, data.spec, c.display_mc_samples,
        mix_seed(mix_seed(c.seed, kSeedDisplay), static_cast<std::uint64_t>(instance_index)));
    const auto dist_base = attribution_distribution(fixed_explanation_fn(baseline), hyp);
    const auto dist_sup = attribution_distribution(fixed_explanation_fn(suppressed), hyp);

    const auto names = display_names_of(c);
    const auto style = uncertainty_style_from_string(c.uncertainty_style);

    // everything the reader sees is on the x10 display scale
    const double kDisplay = 10.0;
    auto score_ci = [&](const AttributionDistribution& dist) {
        const Eigen::VectorXd sums = dist.per_feature_samples.rowwise().sum();
        return 0.5 * (empirical_quantile(sums, 0.95) - empirical_quantile(sums, 0.05));
    };

    json report;
    report["instance_index"] = instance_index;
    report["feature_names"] = names;
    report["readings"] = vec_of(inverse_transform(data.scaler, x0));
    report["actual_score"] = kDisplay * data.test.labels(instance_index);
    report["predicted_score"] = kDisplay * f(x0);
    report["suppress_lambda"] = lambda;
    report["display_scale"] = kDisplay;
    auto variant = [&](const LinearExplanation& expl, const AttributionDistribution* dist) {
        json v;
        v["attributions"] = vec_of(attribution_vector(expl, x0), kDisplay);
        v["intercept"] = kDisplay * expl.intercept;
        v["surrogate_score"] = kDisplay * explain_value(expl, x0);
        if (dist) {
            v["attribution_ci"] = vec_of(dist->ci90_halfwidth, kDisplay);
            v["score_ci"] = kDisplay * score_ci(*dist);
        }
        return v;
    };
    report["variants"]["baseline"] = variant(baseline, nullptr);
    report["variants"]["show"] = variant(baseline, &dist_base);
    report["variants"]["suppress"] = variant(suppressed, nullptr);
    report["variants"]["show_suppress"] = variant(suppressed, &dist_sup);
    write_file(fs::path(c.out_dir) / "explanation_report.json", report.dump(2));

    // shared axis limit across the four charts
    const Eigen::VectorXd attr_base = kDisplay * attribution_vector(baseline, x0);
    const Eigen::VectorXd attr_sup = kDisplay * attribution_vector(suppressed, x0);
    double limit = std::max(
        (attr_base.cwiseAbs() + kDisplay * dist_base.ci90_halfwidth).maxCoeff(),
        (attr_sup.cwiseAbs() + kDisplay * dist_sup.ci90_halfwidth).maxCoeff());
    for (const auto& dist : {dist_base, dist_sup})
        for (const auto& den : dist.density)
            if (!den.degenerate && den.grid.size() > 0)
                limit = std::max({limit, kDisplay * std::abs(den.grid.minCoeff()),
                                  kDisplay * std::abs(den.grid.maxCoeff())});
    limit *= 1.1;

    auto scaled_density = [&](const AttributionDistribution& dist) {
        std::vector<DensityCurve> out = dist.density;
        for (auto& den : out) den.grid *= kDisplay;  // heights are shape-only
        return out;
    };
    auto chart = [&](const std::string& title, const Eigen::VectorXd& attr,
                     const AttributionDistribution* dist, UncertaintyStyle s) {
        TornadoInput in;
        in.title = title;
        in.feature_names = names;
        in.attributions = attr;
        in.axis_limit = limit;
        if (dist) {
            in.ci_halfwidth = kDisplay * dist->ci90_halfwidth;
            in.density = scaled_density(*dist);
        }
        return tornado_svg(in, s);
    };
    const fs::path dir(c.out_dir);
    write_file(dir / "tornado_baseline.svg",
               chart("Baseline", attr_base, nullptr, UncertaintyStyle::none));
    write_file(dir / "tornado_show.svg", chart("Show", attr_base, &dist_base, style));
    write_file(dir / "tornado_suppress.svg",
               chart("Suppress", attr_sup, nullptr, UncertaintyStyle::none));
    write_file(dir / "tornado_show_suppress.svg",
               chart("ShowSuppress", attr_sup, &dist_sup, style));
}

void cmd_simulate(const RunConfig& c, const std::vector<std::string>& levels,
                  bool sweep) {
    const auto data = prepare(c);
    if (data.test.n() == 0) throw ArgumentError("empty test set");
    const auto nn = load_model(c, false);
    const auto regnn = load_model(c, true);
    const auto f_nn = predictor_of(nn);
    const auto f_reg = predictor_of(regnn);
    const double width = kernel_width_of(c, data.test.d());
    const Eigen::VectorXd ig_base = Eigen::VectorXd::Zero(data.test.d());
    const fs::path dir(c.out_dir);

    for (const auto& level_name : levels) {
        const auto spec = make_uncertainty_spec(noise_level_from_string(level_name),
                                                c.uncertain_features, data.train);
        const double lambda = select_suppress_lambda(c, f_nn, data.test, spec);

        std::vector<FaithfulnessRecord> rec_lime, rec_reg_lime, rec_ig_nn, rec_ig_reg;
        for (Eigen::Index i = 0; i < data.test.n(); ++i) {
            const Eigen::VectorXd x0 = data.test.features.row(i);
            const auto nbhd = sample_neighborhood(
                x0, c.neighborhood_n,
                mix_seed(mix_seed(c.seed, kSeedNbhd), static_cast<std::uint64_t>(i)),
                width);
            const std::uint64_t mseed =
                mix_seed(mix_seed(c.seed, kSeedMetric), static_cast<std::uint64_t>(i));

            auto record = [&](const PredictFn& model, const SurrogateFn& g, Technique t) {
                auto r = expected_faithfulness(model, g, x0, spec, c.mc_samples, mseed);
                r.instance_id = static_cast<int>(i);
                r.technique = t;
                return r;
            };
            rec_lime.push_back(record(f_nn, linear_surrogate(fit_lime(f_nn, nbhd, 0.0)),
                                      Technique::lime));
            rec_reg_lime.push_back(record(
                f_nn, linear_surrogate(fit_regularized_lime(f_nn, nbhd, spec, lambda)),
                Technique::reg_lime));
            // each IG technique is scored against its own predictor
            rec_ig_nn.push_back(record(f_nn, ig_surrogate(nn, ig_base, c.ig_report_steps),
                                       Technique::ig_nn));
            rec_ig_reg.push_back(record(f_reg,
                                        ig_surrogate(regnn, ig_base, c.ig_report_steps),
                                        Technique::ig_regnn));
        }

        for (const auto* recs : {&rec_lime, &rec_reg_lime, &rec_ig_nn, &rec_ig_reg})
            write_file(dir / ("records_" + level_name + "_" +
                              technique_name(recs->front().technique) + ".csv"),
                       records_to_csv(*recs));

        struct Comparison {
            const char* name;
            const std::vector<FaithfulnessRecord>* reg;
            const std::vector<FaithfulnessRecord>* base;
        };
        for (const auto& cmp :
             {Comparison{"reg_lime_vs_lime", &rec_reg_lime, &rec_lime},
              Comparison{"ig_regnn_vs_ig_nn", &rec_ig_reg, &rec_ig_nn}}) {
            const auto curve = prob_improvement_curve(*cmp.reg, *cmp.base, c.curve_bins);
            write_file(dir / ("curve_" + level_name + "_" + cmp.name + ".csv"),
                       curve_to_csv(curve));
            CurveSeries s;
            s.label = cmp.name;
            s.x = curve.bin_centers;
            s.y = curve.prob_improved;
            s.se = curve.standard_error;
            write_file(dir / ("curve_" + level_name + "_" + cmp.name + ".svg"),
                       curve_svg("Improvement probability (" + level_name + ")",
                                 "baseline F0 (bin mean)", "Prob(E[F] < F0)", {s}));
        }

        if (sweep) {
            // Regularized Explainer sweep: refit at each lambda, propagate the
            // fixed explanation over the hypotheticals
            std::vector<double> lambdas = {0.0};
            lambdas.insert(lambdas.end(), c.suppress_lambda_sweep.begin(),
                           c.suppress_lambda_sweep.end());
            const auto rows = appendix_measures(
                f_nn, data.test, spec, lambdas,
                [&](double l, const Eigen::VectorXd& x0, const Eigen::MatrixXd& hyp) {
                    const auto nbhd = sample_neighborhood(
                        x0, c.neighborhood_n, mix_seed(c.seed, kSeedSweep), width);
                    const auto expl = fit_regularized_lime(f_nn, nbhd, spec, l);
                    Eigen::MatrixXd out(hyp.rows(), hyp.cols());
                    for (Eigen::Index k = 0; k < hyp.rows(); ++k)
                        out.row(k) = attribution_vector(expl, hyp.row(k));
                    return out;
                },
                c.mc_samples, mix_seed(c.seed, kSeedSweep + 1));
            std::ostringstream out;
            out.precision(17);
            out << "lambda,correctness_over_noise,correctness_se,robustness,"
                   "robustness_se,stability_total,stability_se\n";
            for (const auto& r : rows)
                out << r.lambda << ',' << r.correctness_over_noise << ','
                    << r.correctness_se << ',' << r.robustness << ',' << r.robustness_se
                    << ',' << r.stability_total << ',' << r.stability_se << '\n';
            write_file(dir / ("sweep_explainer_" + level_name + ".csv"), out.str());
        }
    }
}

void cmd_stimuli(const RunConfig& c) {
    const auto data = prepare(c);
    const auto nn = load_model(c, false);
    const auto f = predictor_of(nn);
    const double width = kernel_width_of(c, data.test.d());
    const auto& sc = c.stimuli;

    std::uint64_t counter = 0;
    auto explainer_at = [&](double lambda) {
        return ExplainFn([&, lambda](const Eigen::VectorXd& x) {
            const auto nbhd =
                sample_neighborhood(x, sc.neighborhood_n,
                                    mix_seed(mix_seed(c.seed, kSeedStimuli), counter++),
                                    width);
            return lambda > 0.0 ? fit_regularized_lime(f, nbhd, data.spec, lambda)
                                : fit_lime(f, nbhd, 0.0);
        });
    };

    const auto cands = perturb_candidates(
        data.test, data.spec, f, explainer_at(0.0), sc.k_per_instance, sc.mc_samples,
        mix_seed(c.seed, kSeedStimuli + 1), explainer_at(sc.explainer_lambda));
    const auto filtered = filter_candidates(cands, sc.score_window_low,
                                            sc.score_window_high, sc.threshold);
    if (filtered.empty())
        throw EmptySelectionError("no candidates left after filtering: generated " +
                                  std::to_string(cands.size()) +
                                  ", inside score window and side-consistent 0");
    if (static_cast<int>(filtered.size()) < sc.n_total)
        throw EmptySelectionError("only " + std::to_string(filtered.size()) +
                                  " candidates survive filtering (generated " +
                                  std::to_string(cands.size()) + ", need " +
                                  std::to_string(sc.n_total) + ")");

    const auto labels = cluster_candidates(filtered, sc.k_clusters,
                                           mix_seed(c.seed, kSeedStimuli + 2));
    const auto set = stratified_select(filtered, labels, sc.n_total, sc.n_practice,
                                       sc.threshold, mix_seed(c.seed, kSeedStimuli + 3));

    const fs::path dir(c.out_dir);
    write_file(dir / "stimuli.json", stimulus_set_to_json(set, c.features));
    write_file(dir / "stimuli.csv",
               stimulus_set_to_csv(set, display_names_of(c), data.scaler));
}

}  // namespace uncattr
