#include "fedsurv/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedsurv/errors.hpp"
#include "fedsurv/metrics.hpp"
#include "fedsurv/rng.hpp"

namespace fedsurv {

namespace {

constexpr double kSeluScale = 1.0507;
constexpr double kSeluAlpha = 1.6733;

double selu(double z) {
    return z > 0.0 ? kSeluScale * z : kSeluScale * kSeluAlpha * std::expm1(z);
}

double selu_grad(double z) {
    return z > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(z);
}

double sigmoid(double z) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    // Keep outputs strictly inside (0, 1) even when exp saturates.
    if (s >= 1.0) return std::nextafter(1.0, 0.0);
    if (s <= 0.0) return std::nextafter(0.0, 1.0);
    return s;
}

// z = a W^T + b for row-major W (out x in); a is n x in, z is n x out.
void affine(const Matrix& a, const std::vector<double>& w,
            const std::vector<double>& b, std::size_t in, std::size_t out,
            Matrix& z) {
    z.rows = a.rows;
    z.cols = out;
    z.data.assign(a.rows * out, 0.0);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* arow = a.data.data() + r * in;
        double* zrow = z.data.data() + r * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wrow = w.data() + o * in;
            double acc = b[o];
            for (std::size_t k = 0; k < in; ++k) acc += arow[k] * wrow[k];
            zrow[o] = acc;
        }
    }
}

struct ForwardTrace {
    std::vector<Matrix> activations;   // activations[0] = input, size L+1
    std::vector<Matrix> pre;           // pre-activations per layer, size L
    std::vector<std::vector<double>> dropout; // scaled keep mask per hidden layer
};

// Runs the network over a batch, optionally recording everything backprop
// needs. Dropout applies to hidden activations only, with inverted scaling.
Matrix run_forward(const ModelParams& params, const Matrix& x, Mode mode,
                   double dropout_rate, std::mt19937_64* rng, ForwardTrace* trace) {
    if (x.cols != params.input_dim()) {
        throw DomainError("input has " + std::to_string(x.cols) +
                          " covariates, model expects " +
                          std::to_string(params.input_dim()));
    }
    const std::size_t layers = params.num_layers();
    const bool drop = mode == Mode::kTrain && dropout_rate > 0.0;
    if (drop && rng == nullptr) {
        throw DomainError("train-mode dropout needs an RNG");
    }
    if (trace) {
        trace->activations.assign(layers + 1, Matrix{});
        trace->pre.assign(layers, Matrix{});
        trace->dropout.assign(layers, {});
        trace->activations[0] = x;
    }
    Matrix a = x;
    Matrix z;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = params.layer_dims[l];
        const std::size_t out = params.layer_dims[l + 1];
        affine(a, params.weights[l], params.biases[l], in, out, z);
        if (trace) trace->pre[l] = z;
        Matrix next(z.rows, z.cols);
        const bool last = l + 1 == layers;
        if (last) {
            for (std::size_t i = 0; i < z.data.size(); ++i) {
                next.data[i] = sigmoid(z.data[i]);
            }
        } else {
            for (std::size_t i = 0; i < z.data.size(); ++i) {
                next.data[i] = selu(z.data[i]);
            }
            if (drop) {
                const double keep_scale = 1.0 / (1.0 - dropout_rate);
                std::vector<double> mask(next.data.size());
                for (std::size_t i = 0; i < next.data.size(); ++i) {
                    const bool keep = rng::uniform01(*rng) >= dropout_rate;
                    mask[i] = keep ? keep_scale : 0.0;
                    next.data[i] *= mask[i];
                }
                if (trace) trace->dropout[l] = std::move(mask);
            }
        }
        if (trace) trace->activations[l + 1] = next;
        a = std::move(next);
    }
    return a;
}

} // namespace

ModelParams ModelParams::init(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) {
        throw DomainError("a model needs at least input and output dimensions");
    }
    for (std::size_t d : layer_dims) {
        if (d == 0) throw DomainError("layer dimensions must be positive");
    }
    ModelParams params;
    params.layer_dims = std::move(layer_dims);
    auto gen = rng::make_stream(seed, rng::Stream::kModelInit);
    for (std::size_t l = 0; l + 1 < params.layer_dims.size(); ++l) {
        const std::size_t in = params.layer_dims[l];
        const std::size_t out = params.layer_dims[l + 1];
        const double std_dev = 1.0 / std::sqrt(static_cast<double>(in));
        std::vector<double> w(in * out);
        for (double& v : w) v = std_dev * rng::normal(gen);
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(out, 0.0);
    }
    return params;
}

void ModelParams::validate() const {
    if (layer_dims.size() < 2 || weights.size() != layer_dims.size() - 1 ||
        biases.size() != weights.size()) {
        throw DomainError("model parameter shapes are inconsistent");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].size() != layer_dims[l] * layer_dims[l + 1] ||
            biases[l].size() != layer_dims[l + 1]) {
            throw DomainError("layer " + std::to_string(l) +
                              " has mismatched weight or bias shape");
        }
        for (double v : weights[l]) {
            if (!std::isfinite(v)) throw DomainError("non-finite weight entry");
        }
        for (double v : biases[l]) {
            if (!std::isfinite(v)) throw DomainError("non-finite bias entry");
        }
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw DomainError("learning rate must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw DomainError("dropout rate must lie in [0, 1)");
    }
    if (batch_size == 0) throw DomainError("batch size must be positive");
    if (patience == 0) throw DomainError("patience must be positive");
}

Gradients Gradients::zeros_like(const ModelParams& params) {
    Gradients g;
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        g.weights.emplace_back(params.weights[l].size(), 0.0);
        g.biases.emplace_back(params.biases[l].size(), 0.0);
    }
    return g;
}

AdamState AdamState::zeros_like(const ModelParams& params) {
    AdamState s;
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        s.weight_m.emplace_back(params.weights[l].size(), 0.0);
        s.weight_v.emplace_back(params.weights[l].size(), 0.0);
        s.bias_m.emplace_back(params.biases[l].size(), 0.0);
        s.bias_v.emplace_back(params.biases[l].size(), 0.0);
    }
    return s;
}

std::vector<double> forward(const ModelParams& params, std::span<const double> x,
                            Mode mode, double dropout_rate, std::mt19937_64* rng) {
    Matrix input(1, x.size());
    std::copy(x.begin(), x.end(), input.data.begin());
    Matrix out = run_forward(params, input, mode, dropout_rate, rng, nullptr);
    return out.data;
}

Matrix forward_batch(const ModelParams& params, const Matrix& x, Mode mode,
                     double dropout_rate, std::mt19937_64* rng) {
    return run_forward(params, x, mode, dropout_rate, rng, nullptr);
}

double pseudo_loss(const Matrix& predictions, const Matrix& pseudo) {
    if (predictions.rows != pseudo.rows || predictions.cols != pseudo.cols) {
        throw DomainError("prediction and pseudo-value shapes differ");
    }
    if (predictions.rows == 0 || predictions.cols == 0) {
        throw DomainError("pseudo loss needs a non-empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.data.size(); ++i) {
        const double s = predictions.data[i];
        const double j = pseudo.data[i];
        total += j * (1.0 - 2.0 * s) + s * s;
    }
    return total / static_cast<double>(predictions.data.size());
}

BackwardResult backward(const ModelParams& params, const Matrix& x,
                        const Matrix& pseudo, Mode mode, double dropout_rate,
                        std::mt19937_64* rng) {
    if (x.rows == 0) throw DomainError("backward needs a non-empty batch");
    ForwardTrace trace;
    Matrix out = run_forward(params, x, mode, dropout_rate, rng, &trace);
    if (out.rows != pseudo.rows || out.cols != pseudo.cols) {
        throw DomainError("prediction and pseudo-value shapes differ");
    }

    BackwardResult result;
    result.loss = pseudo_loss(out, pseudo);
    result.grads = Gradients::zeros_like(params);

    const std::size_t layers = params.num_layers();
    const double cells = static_cast<double>(out.data.size());

    // dL/dz at the sigmoid output: (2/(n m)) (s - J) * s (1 - s).
    Matrix delta(out.rows, out.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double s = out.data[i];
        delta.data[i] = 2.0 / cells * (s - pseudo.data[i]) * s * (1.0 - s);
    }

    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = params.layer_dims[l];
        const std::size_t out_dim = params.layer_dims[l + 1];
        const Matrix& a_prev = trace.activations[l];
        std::vector<double>& gw = result.grads.weights[l];
        std::vector<double>& gb = result.grads.biases[l];
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* drow = delta.data.data() + r * out_dim;
            const double* arow = a_prev.data.data() + r * in;
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double d = drow[o];
                gb[o] += d;
                double* gwrow = gw.data() + o * in;
                for (std::size_t k = 0; k < in; ++k) gwrow[k] += d * arow[k];
            }
        }
        if (l == 0) break;
        // Propagate to the previous layer through W, the dropout mask and SELU.
        Matrix prev_delta(delta.rows, in);
        const std::vector<double>& w = params.weights[l];
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* drow = delta.data.data() + r * out_dim;
            double* prow = prev_delta.data.data() + r * in;
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double d = drow[o];
                if (d == 0.0) continue;
                const double* wrow = w.data() + o * in;
                for (std::size_t k = 0; k < in; ++k) prow[k] += d * wrow[k];
            }
        }
        const std::vector<double>& mask = trace.dropout[l - 1];
        const Matrix& z_prev = trace.pre[l - 1];
        for (std::size_t i = 0; i < prev_delta.data.size(); ++i) {
            double g = selu_grad(z_prev.data[i]);
            if (!mask.empty()) g *= mask[i];
            prev_delta.data[i] *= g;
        }
        delta = std::move(prev_delta);
    }
    return result;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               double learning_rate) {
    if (grads.weights.size() != params.num_layers() ||
        grads.biases.size() != params.num_layers()) {
        throw DomainError("gradient shapes do not match the parameters");
    }
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        for (double g : grads.weights[l]) {
            if (!std::isfinite(g)) throw TrainingError("non-finite weight gradient");
        }
        for (double g : grads.biases[l]) {
            if (!std::isfinite(g)) throw TrainingError("non-finite bias gradient");
        }
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    auto update = [&](std::vector<double>& value, const std::vector<double>& grad,
                      std::vector<double>& m, std::vector<double>& v) {
        if (grad.size() != value.size()) {
            throw DomainError("gradient shapes do not match the parameters");
        }
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    };
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        update(params.weights[l], grads.weights[l], state.weight_m[l], state.weight_v[l]);
        update(params.biases[l], grads.biases[l], state.bias_m[l], state.bias_v[l]);
    }
}

Matrix covariate_matrix(std::span<const SurvivalRecord> records) {
    const std::size_t p = records.empty() ? 0 : records.front().covariates.size();
    Matrix x(records.size(), p);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].covariates.size() != p) {
            throw DomainError("records disagree on covariate count");
        }
        std::copy(records[i].covariates.begin(), records[i].covariates.end(),
                  x.data.begin() + i * p);
    }
    return x;
}

PredictedCurves predict_curves(const ModelParams& params,
                               std::span<const SurvivalRecord> records,
                               const TimeGrid& grid) {
    PredictedCurves curves;
    curves.grid = grid;
    curves.survival = forward_batch(params, covariate_matrix(records));
    return curves;
}

TrainResult train_local(std::span<const SurvivalRecord> train_records,
                        const PseudoValueMatrix& pseudo_targets,
                        std::span<const SurvivalRecord> validation_records,
                        ModelParams params, const TrainConfig& config) {
    config.validate();
    params.validate();
    if (pseudo_targets.values.rows != train_records.size()) {
        throw DomainError("pseudo targets must align with the training records");
    }
    if (validation_records.empty()) {
        throw DomainError("training needs a non-empty validation set");
    }

    TrainResult result;
    result.params = params;
    result.best_val_cindex = -std::numeric_limits<double>::infinity();
    if (config.max_epochs == 0) {
        result.best_val_cindex = std::numeric_limits<double>::quiet_NaN();
        return result;
    }

    const Matrix x = covariate_matrix(train_records);
    const Matrix& targets = pseudo_targets.values;
    const std::size_t n = x.rows;

    auto shuffle_rng = rng::make_stream(config.seed, rng::Stream::kShuffle);
    auto dropout_rng = rng::make_stream(config.seed, rng::Stream::kDropout);
    AdamState adam = AdamState::zeros_like(params);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng::shuffle(order, shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, n - start);
            Matrix bx(count, x.cols);
            Matrix bt(count, targets.cols);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[start + i];
                std::copy(x.row(src).begin(), x.row(src).end(), bx.row(i).begin());
                std::copy(targets.row(src).begin(), targets.row(src).end(),
                          bt.row(i).begin());
            }
            BackwardResult step = backward(params, bx, bt, Mode::kTrain,
                                           config.dropout_rate, &dropout_rng);
            adam_step(params, step.grads, adam, config.learning_rate);
            epoch_loss += step.loss * static_cast<double>(count);
        }
        epoch_loss /= static_cast<double>(n);

        const PredictedCurves curves =
            predict_curves(params, validation_records, pseudo_targets.grid);
        const double val_c = td_cindex(curves, validation_records);
        result.history.push_back({epoch, epoch_loss, val_c});
        result.epochs_run = epoch;
        if (val_c > result.best_val_cindex) {
            result.best_val_cindex = val_c;
            result.params = params;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= config.patience) break;
    }
    return result;
}

} // namespace fedsurv
