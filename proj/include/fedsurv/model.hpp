#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fedsurv/matrix.hpp"
#include "fedsurv/metrics.hpp"
#include "fedsurv/survival.hpp"
#include "fedsurv/types.hpp"

namespace fedsurv {

enum class Mode { kTrain, kEval };

// Layered weights and biases of the survival MLP. weights[l] is row-major
// with shape (layer_dims[l+1] x layer_dims[l]).
struct ModelParams {
    std::vector<std::size_t> layer_dims;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    // Fan-in scaled normal weights (std 1/sqrt(fan_in)), zero biases.
    static ModelParams init(std::vector<std::size_t> layer_dims, std::uint64_t seed);

    std::size_t num_layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }

    void validate() const; // shapes consistent, all entries finite

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double dropout_rate = 0.1;
    std::size_t max_epochs = 1000;
    std::size_t patience = 50;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const ModelParams& params);
};

struct AdamState {
    std::vector<std::vector<double>> weight_m, weight_v;
    std::vector<std::vector<double>> bias_m, bias_v;
    std::uint64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState zeros_like(const ModelParams& params);
};

// One subject's predicted survival probabilities at the m output points.
// In train mode dropout is sampled from *rng (inverted scaling, hidden
// layers only); eval mode is deterministic and ignores rng.
std::vector<double> forward(const ModelParams& params, std::span<const double> x,
                            Mode mode = Mode::kEval, double dropout_rate = 0.0,
                            std::mt19937_64* rng = nullptr);

// Batch of inputs (n x p) to predictions (n x m).
Matrix forward_batch(const ModelParams& params, const Matrix& x,
                     Mode mode = Mode::kEval, double dropout_rate = 0.0,
                     std::mt19937_64* rng = nullptr);

// Mean over grid points of the per-time pseudo-value loss
// (1/n) sum_i [J_i(t) (1 - 2 S(t|x_i)) + S(t|x_i)^2]. Differs from mean
// squared error by the prediction-free offset mean(J - J^2), so it can go
// negative when pseudo values leave [0, 1].
double pseudo_loss(const Matrix& predictions, const Matrix& pseudo);

struct BackwardResult {
    Gradients grads;
    double loss = 0.0;
};

// Gradient of pseudo_loss composed with forward on one batch. The dropout
// mask is sampled once per call in train mode.
BackwardResult backward(const ModelParams& params, const Matrix& x,
                        const Matrix& pseudo, Mode mode = Mode::kEval,
                        double dropout_rate = 0.0, std::mt19937_64* rng = nullptr);

// Bias-corrected Adam update, in place. Throws TrainingError on non-finite
// gradients.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               double learning_rate);

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_cindex = 0.0;
};

struct TrainResult {
    ModelParams params; // parameters with the best validation concordance
    std::vector<EpochStats> history;
    std::size_t epochs_run = 0;
    double best_val_cindex = 0.0;
};

// Minibatch training with per-epoch validation concordance and early
// stopping: keeps the best-scoring parameters, stops after `patience`
// epochs without improvement or at max_epochs.
TrainResult train_local(std::span<const SurvivalRecord> train_records,
                        const PseudoValueMatrix& pseudo_targets,
                        std::span<const SurvivalRecord> validation_records,
                        ModelParams params, const TrainConfig& config);

// Covariate rows of `records` as an n x p matrix.
Matrix covariate_matrix(std::span<const SurvivalRecord> records);

// Predicted survival curves for `records` under `params` (eval mode).
PredictedCurves predict_curves(const ModelParams& params,
                               std::span<const SurvivalRecord> records,
                               const TimeGrid& grid);

} // namespace fedsurv
