#include "uncattr/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "uncattr/errors.hpp"
#include "uncattr/rng.hpp"

namespace uncattr {
namespace {

void check_input(const MlpPredictor& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_dim)
        throw ArgumentError("input has dimension " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(model.input_dim));
    if (!x.allFinite()) throw ArgumentError("non-finite input point");
}

// Forward pass keeping post-activation states; states[0] = x, states.back() is
// the pre-output hidden activation. Returns the scalar output.
double forward_states(const MlpPredictor& m, const Eigen::VectorXd& x,
                      std::vector<Eigen::VectorXd>& states) {
    states.clear();
    states.push_back(x);
    const std::size_t last = m.layer_count() - 1;
    for (std::size_t l = 0; l < last; ++l)
        states.push_back((m.layer_weights[l] * states.back() + m.layer_biases[l])
                             .array().tanh().matrix());
    return (m.layer_weights[last] * states.back() + m.layer_biases[last])(0);
}

struct ParamGrads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;

    explicit ParamGrads(const MlpPredictor& m) {
        for (std::size_t l = 0; l < m.layer_count(); ++l) {
            w.push_back(Eigen::MatrixXd::Zero(m.layer_weights[l].rows(),
                                              m.layer_weights[l].cols()));
            b.push_back(Eigen::VectorXd::Zero(m.layer_biases[l].size()));
        }
    }
};

// Standard backprop of d(output)/d(theta) scaled by `upstream`, plus the input
// gradient, given forward states.
void backward(const MlpPredictor& m, const std::vector<Eigen::VectorXd>& states,
              double upstream, ParamGrads& grads, Eigen::VectorXd* dx = nullptr) {
    const std::size_t last = m.layer_count() - 1;
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, upstream);
    grads.w[last] += delta * states[last].transpose();
    grads.b[last] += delta;
    Eigen::VectorXd dh = m.layer_weights[last].transpose() * delta;
    for (std::size_t l = last; l-- > 0;) {
        // states[l+1] = tanh(pre-activation of layer l)
        Eigen::VectorXd da =
            (dh.array() * (1.0 - states[l + 1].array().square())).matrix();
        grads.w[l] += da * states[l].transpose();
        grads.b[l] += da;
        dh = m.layer_weights[l].transpose() * da;
    }
    if (dx) *dx = dh;
}

// Gradient wrt theta of s = v . grad_x f(z), computed as reverse mode over the
// tangent-forward pass that evaluates the directional derivative f'(z; v).
void jvp_param_grad(const MlpPredictor& m, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& v, ParamGrads& grads) {
    const std::size_t nl = m.layer_count();
    const std::size_t last = nl - 1;
    std::vector<Eigen::VectorXd> zs(nl + 1), ts(nl + 1), ta(nl + 1);
    zs[0] = z;
    ts[0] = v;
    for (std::size_t l = 0; l < last; ++l) {
        Eigen::VectorXd a = m.layer_weights[l] * zs[l] + m.layer_biases[l];
        ta[l + 1] = m.layer_weights[l] * ts[l];
        zs[l + 1] = a.array().tanh().matrix();
        ts[l + 1] = ((1.0 - zs[l + 1].array().square()) * ta[l + 1].array()).matrix();
    }
    ta[nl] = m.layer_weights[last] * ts[last];  // scalar; equals s

    // reverse sweep, seeded with ds = 1
    Eigen::VectorXd dta = Eigen::VectorXd::Ones(1);
    grads.w[last] += dta * ts[last].transpose();
    Eigen::VectorXd dt = m.layer_weights[last].transpose() * dta;
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(zs[last].size());
    for (std::size_t l = last; l-- > 0;) {
        const auto& zl = zs[l + 1];
        const Eigen::ArrayXd sech2 = 1.0 - zl.array().square();
        // t_{l+1} = sech2 o ta_{l+1}
        Eigen::VectorXd dta_l = (sech2 * dt.array()).matrix();
        dz += (-2.0 * zl.array() * ta[l + 1].array() * dt.array()).matrix();
        // z_{l+1} = tanh(a_{l+1})
        Eigen::VectorXd da = (sech2 * dz.array()).matrix();
        grads.w[l] += dta_l * ts[l].transpose() + da * zs[l].transpose();
        grads.b[l] += da;
        dt = m.layer_weights[l].transpose() * dta_l;
        dz = m.layer_weights[l].transpose() * da;
    }
}

Eigen::VectorXd flatten(const std::vector<Eigen::MatrixXd>& w,
                        const std::vector<Eigen::VectorXd>& b) {
    Eigen::Index total = 0;
    for (std::size_t l = 0; l < w.size(); ++l) total += w[l].size() + b[l].size();
    Eigen::VectorXd flat(total);
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (Eigen::Index i = 0; i < w[l].rows(); ++i)
            for (Eigen::Index j = 0; j < w[l].cols(); ++j) flat(pos++) = w[l](i, j);
        for (Eigen::Index i = 0; i < b[l].size(); ++i) flat(pos++) = b[l](i);
    }
    return flat;
}

}  // namespace

Eigen::Index MlpPredictor::parameter_count() const {
    Eigen::Index total = 0;
    for (std::size_t l = 0; l < layer_count(); ++l)
        total += layer_weights[l].size() + layer_biases[l].size();
    return total;
}

MlpPredictor init_mlp(int input_dim, const std::vector<int>& hidden_sizes,
                      std::uint64_t seed) {
    if (input_dim < 1) throw ArgumentError("input_dim must be positive");
    MlpPredictor m;
    m.input_dim = input_dim;
    auto eng = make_engine(mix_seed(seed, 0x6d6c70));
    std::vector<int> sizes;
    sizes.push_back(input_dim);
    for (int h : hidden_sizes) {
        if (h < 1) throw ArgumentError("hidden sizes must be positive");
        sizes.push_back(h);
    }
    sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-bound, bound);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(eng);
        m.layer_weights.push_back(std::move(w));
        m.layer_biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return m;
}

double predict(const MlpPredictor& model, const Eigen::VectorXd& x) {
    check_input(model, x);
    std::vector<Eigen::VectorXd> states;
    return forward_states(model, x, states);
}

Eigen::VectorXd predict_batch(const MlpPredictor& model, const Eigen::MatrixXd& x) {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(model, x.row(i));
    return out;
}

Eigen::VectorXd input_gradient(const MlpPredictor& model, const Eigen::VectorXd& x) {
    check_input(model, x);
    std::vector<Eigen::VectorXd> states;
    forward_states(model, x, states);
    ParamGrads scratch(model);
    Eigen::VectorXd dx;
    backward(model, states, 1.0, scratch, &dx);
    return dx;
}

IgAttribution integrated_gradients(const MlpPredictor& model, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& baseline_point, int steps) {
    check_input(model, x);
    check_input(model, baseline_point);
    if (steps < 1) throw ArgumentError("ig steps must be >= 1");

    const Eigen::VectorXd diff = x - baseline_point;
    Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(x.size());
    for (int k = 1; k <= steps; ++k) {
        const double t = (k - 0.5) / steps;
        grad_sum += input_gradient(model, baseline_point + t * diff);
    }
    IgAttribution a;
    a.attributions = (diff.array() * grad_sum.array() / steps).matrix();
    a.baseline_point = baseline_point;
    a.completeness_gap =
        a.attributions.sum() - (predict(model, x) - predict(model, baseline_point));
    return a;
}

std::pair<double, Eigen::VectorXd> loss_and_grad(const MlpPredictor& model,
                                                 const Batch& batch,
                                                 const UncertaintySpec& spec,
                                                 double lambda, int ig_steps) {
    const Eigen::Index n = batch.x.rows();
    if (n == 0) throw ArgumentError("empty batch");
    if (batch.y.size() != n) throw ArgumentError("batch x/y size mismatch");
    const bool penalized = lambda > 0.0 && spec.sigma.size() > 0 && spec.any_uncertain();
    if (penalized && spec.sigma.size() != model.input_dim)
        throw ArgumentError("uncertainty spec dimension mismatch");

    double loss = 0.0;
    ParamGrads grads(model);
    std::vector<Eigen::VectorXd> states;
    const Eigen::VectorXd baseline = Eigen::VectorXd::Zero(model.input_dim);

    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = batch.x.row(i);
        const double out = forward_states(model, xi, states);
        const double resid = out - batch.y(i);
        loss += resid * resid / n;
        backward(model, states, 2.0 * resid / n, grads);

        if (!penalized) continue;

        // IG attribution of this sample, then the exact gradient of
        // lambda/n * ||sigma o a||^2 through the Riemann sum.
        const Eigen::VectorXd diff = xi - baseline;
        std::vector<Eigen::VectorXd> path(static_cast<std::size_t>(ig_steps));
        Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(model.input_dim);
        for (int k = 1; k <= ig_steps; ++k) {
            path[k - 1] = baseline + ((k - 0.5) / ig_steps) * diff;
            grad_sum += input_gradient(model, path[k - 1]);
        }
        const Eigen::VectorXd attr = (diff.array() * grad_sum.array() / ig_steps).matrix();
        const Eigen::ArrayXd s2 = spec.sigma.array().square();
        loss += lambda * (s2 * attr.array().square()).sum() / n;

        // dP/da_d folded with da_d/d(grad-sum_d) into one tangent vector
        const Eigen::VectorXd v =
            (2.0 * lambda / n * s2 * attr.array() * diff.array() / ig_steps).matrix();
        if (v.isZero(0.0)) continue;
        for (const auto& z : path) jvp_param_grad(model, z, v, grads);
    }
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
    return {loss, flatten(grads.w, grads.b)};
}

Eigen::VectorXd to_flat(const MlpPredictor& model) {
    return flatten(model.layer_weights, model.layer_biases);
}

void from_flat(MlpPredictor& model, const Eigen::VectorXd& flat) {
    if (flat.size() != model.parameter_count())
        throw ArgumentError("flat parameter vector has wrong length");
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        auto& w = model.layer_weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat(pos++);
        auto& b = model.layer_biases[l];
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = flat(pos++);
    }
}

namespace {

MlpPredictor train_impl(const StandardizedDataset& train, const UncertaintySpec& spec,
                        const TrainConfig& config, std::vector<TrainingLogEntry>* log) {
    if (train.n() == 0) throw ArgumentError("empty training set");
    if (config.epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (config.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(config.learning_rate > 0)) throw ArgumentError("learning_rate must be > 0");

    MlpPredictor model =
        init_mlp(static_cast<int>(train.d()), config.hidden_sizes, config.seed);
    model.regularization_lambda = config.lambda;
    auto eng = make_engine(mix_seed(config.seed, 0x747261696e));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(train.n()));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), eng);
        double epoch_loss = 0.0;
        int batches = 0;
        for (Eigen::Index start = 0; start < train.n(); start += config.batch_size) {
            const Eigen::Index count = std::min<Eigen::Index>(config.batch_size,
                                                              train.n() - start);
            Batch b;
            b.x.resize(count, train.d());
            b.y.resize(count);
            for (Eigen::Index i = 0; i < count; ++i) {
                b.x.row(i) = train.features.row(order[static_cast<std::size_t>(start + i)]);
                b.y(i) = train.labels(order[static_cast<std::size_t>(start + i)]);
            }
            double loss;
            Eigen::VectorXd grad;
            try {
                std::tie(loss, grad) =
                    loss_and_grad(model, b, spec, config.lambda, config.ig_steps);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " +
                                   std::to_string(epoch));
            }
            from_flat(model, to_flat(model) - config.learning_rate * grad);
            epoch_loss += loss;
            ++batches;
        }
        if (log) log->push_back({epoch, epoch_loss / batches});
        if (!to_flat(model).allFinite())
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    return model;
}

}  // namespace

MlpPredictor train_mlp(const StandardizedDataset& train, const TrainConfig& config,
                       std::vector<TrainingLogEntry>* log) {
    UncertaintySpec none;
    none.sigma = Eigen::VectorXd::Zero(train.d());
    TrainConfig c = config;
    c.lambda = 0.0;
    return train_impl(train, none, c, log);
}

MlpPredictor train_regularized_mlp(const StandardizedDataset& train,
                                   const UncertaintySpec& spec, const TrainConfig& config,
                                   std::vector<TrainingLogEntry>* log) {
    if (spec.sigma.size() != train.d())
        throw ArgumentError("uncertainty spec dimension mismatch");
    return train_impl(train, spec, config, log);
}

std::string mlp_to_json(const MlpPredictor& model, const Scaler* scaler) {
    nlohmann::json j;
    j["format"] = "uncertain-attr-mlp/1";
    j["activation"] = "tanh";
    j["input_dim"] = model.input_dim;
    j["lambda"] = model.regularization_lambda;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        nlohmann::json layer;
        layer["rows"] = model.layer_weights[l].rows();
        layer["cols"] = model.layer_weights[l].cols();
        std::vector<double> w;  // row-major
        for (Eigen::Index i = 0; i < model.layer_weights[l].rows(); ++i)
            for (Eigen::Index jj = 0; jj < model.layer_weights[l].cols(); ++jj)
                w.push_back(model.layer_weights[l](i, jj));
        layer["weights"] = w;
        layer["biases"] = std::vector<double>(model.layer_biases[l].begin(),
                                              model.layer_biases[l].end());
        layers.push_back(layer);
    }
    j["layers"] = layers;
    if (scaler) j["scaler"] = nlohmann::json::parse(scaler_to_json(*scaler));
    return j.dump(2);
}

MlpPredictor mlp_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "uncertain-attr-mlp/1")
        throw DataError("unsupported model format");
    MlpPredictor m;
    m.input_dim = j.at("input_dim").get<int>();
    m.regularization_lambda = j.at("lambda").get<double>();
    for (const auto& layer : j.at("layers")) {
        const auto rows = layer.at("rows").get<Eigen::Index>();
        const auto cols = layer.at("cols").get<Eigen::Index>();
        const auto w = layer.at("weights").get<std::vector<double>>();
        const auto b = layer.at("biases").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
            static_cast<Eigen::Index>(b.size()) != rows)
            throw DataError("model layer shape mismatch");
        Eigen::MatrixXd wm(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index jj = 0; jj < cols; ++jj)
                wm(i, jj) = w[static_cast<std::size_t>(i * cols + jj)];
        m.layer_weights.push_back(std::move(wm));
        m.layer_biases.push_back(Eigen::Map<const Eigen::VectorXd>(
            b.data(), static_cast<Eigen::Index>(b.size())));
    }
    return m;
}

}  // namespace uncattr
