#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedsurv/errors.hpp"
#include "fedsurv/model.hpp"
#include "test_util.hpp"

using namespace fedsurv;
using namespace fedsurv::testutil;

namespace {

ModelParams zero_params(std::vector<std::size_t> dims) {
    ModelParams p = ModelParams::init(dims, 0);
    for (auto& layer : p.weights) {
        for (double& v : layer) v = 0.0;
    }
    return p;
}

Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                     double lo, double hi) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = lo + (hi - lo) * rng::uniform01(gen);
    return m;
}

double loss_at(const ModelParams& params, const Matrix& x, const Matrix& targets) {
    return pseudo_loss(forward_batch(params, x), targets);
}

} // namespace

TEST_CASE("zero parameters predict one half everywhere") {
    const ModelParams p = zero_params({3, 4, 2});
    const std::vector<double> out = forward(p, std::vector<double>{0.3, -1.0, 2.0});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == 0.5);
    CHECK(out[1] == 0.5);
}

TEST_CASE("eval forward is deterministic and dimension-checked") {
    const ModelParams p = ModelParams::init({3, 5, 2}, 99);
    const std::vector<double> x{0.1, 0.2, -0.4};
    CHECK(forward(p, x) == forward(p, x));
    CHECK_THROWS_AS((void)forward(p, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("hidden units apply the scaled exponential linear activation") {
    // One hidden unit with weight 1, bias 0, fed -1.
    ModelParams p = zero_params({1, 1, 1});
    p.weights[0][0] = 1.0;
    const double activation = 1.0507 * 1.6733 * std::expm1(-1.0);
    CHECK(activation == doctest::Approx(-1.1113).epsilon(1e-4));
    p.weights[1][0] = 1.0;
    const std::vector<double> out = forward(p, std::vector<double>{-1.0});
    CHECK(out[0] == doctest::Approx(1.0 / (1.0 + std::exp(-activation))).epsilon(1e-15));
}

TEST_CASE("forward outputs stay strictly inside the unit interval") {
    auto gen = rng::make_stream(51, rng::Stream::kDataGen);
    ModelParams p = ModelParams::init({4, 6, 3}, 7);
    // saturate one output unit hard
    for (double& v : p.biases.back()) v = 80.0;
    const Matrix x = random_matrix(gen, 16, 4, -3.0, 3.0);
    const Matrix out = forward_batch(p, x);
    for (double s : out.data) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
}

TEST_CASE("pseudo_loss arithmetic") {
    Matrix pred(1, 1), target(1, 1);
    pred.at(0, 0) = 1.0;
    target.at(0, 0) = 1.0;
    CHECK(pseudo_loss(pred, target) == 0.0);
    pred.at(0, 0) = 0.0;
    target.at(0, 0) = 0.0;
    CHECK(pseudo_loss(pred, target) == 0.0);
    pred.at(0, 0) = 0.5;
    target.at(0, 0) = -0.2;
    CHECK(pseudo_loss(pred, target) == doctest::Approx(0.25).epsilon(1e-15));

    Matrix wrong(1, 2);
    CHECK_THROWS_AS((void)pseudo_loss(pred, wrong), DomainError);
}

TEST_CASE("loss derivative against a prediction cell is 2(s - j)") {
    // Central differences of the loss itself at s = 0.5, j = 1: slope -1.
    Matrix target(1, 1);
    target.at(0, 0) = 1.0;
    const double h = 1e-6;
    Matrix hi(1, 1), lo(1, 1);
    hi.at(0, 0) = 0.5 + h;
    lo.at(0, 0) = 0.5 - h;
    const double slope = (pseudo_loss(hi, target) - pseudo_loss(lo, target)) / (2 * h);
    CHECK(slope == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("pseudo loss differs from squared error by a prediction-free offset") {
    auto gen = rng::make_stream(53, rng::Stream::kDataGen);
    const Matrix pred = random_matrix(gen, 6, 4, 0.0, 1.0);
    const Matrix pseudo = random_matrix(gen, 6, 4, -0.5, 1.5);
    double mse = 0.0;
    double offset = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - pseudo.data[i];
        mse += d * d;
        offset += pseudo.data[i] - pseudo.data[i] * pseudo.data[i];
    }
    mse /= static_cast<double>(pred.data.size());
    offset /= static_cast<double>(pred.data.size());
    CHECK(pseudo_loss(pred, pseudo) ==
          doctest::Approx(mse + offset).epsilon(1e-12));
    // Gradients against a cell coincide entrywise: -2j + 2s == 2(s - j).
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double s = pred.data[i];
        const double j = pseudo.data[i];
        CHECK(std::abs((-2.0 * j + 2.0 * s) - 2.0 * (s - j)) <= 1e-12);
    }
}

TEST_CASE("backward matches central finite differences") {
    auto gen = rng::make_stream(57, rng::Stream::kDataGen);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t p = 1 + static_cast<std::size_t>(rng::bounded(gen, 4));
        const std::size_t m = 1 + static_cast<std::size_t>(rng::bounded(gen, 3));
        ModelParams params = ModelParams::init({p, 3, 2, m}, 100 + trial);
        const Matrix x = random_matrix(gen, 5, p, -2.0, 2.0);
        const Matrix targets = random_matrix(gen, 5, m, -0.3, 1.3);

        const BackwardResult analytic = backward(params, x, targets);
        CHECK(analytic.loss == doctest::Approx(loss_at(params, x, targets)));

        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t l = 0; l < params.num_layers(); ++l) {
            for (std::size_t i = 0; i < params.weights[l].size(); ++i) {
                ModelParams up = params, down = params;
                up.weights[l][i] += h;
                down.weights[l][i] -= h;
                const double fd =
                    (loss_at(up, x, targets) - loss_at(down, x, targets)) / (2 * h);
                const double an = analytic.grads.weights[l][i];
                const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
                worst = std::max(worst, std::abs(fd - an) / scale);
            }
            for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
                ModelParams up = params, down = params;
                up.biases[l][i] += h;
                down.biases[l][i] -= h;
                const double fd =
                    (loss_at(up, x, targets) - loss_at(down, x, targets)) / (2 * h);
                const double an = analytic.grads.biases[l][i];
                const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
                worst = std::max(worst, std::abs(fd - an) / scale);
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradient vanishes exactly at a perfect fit") {
    ModelParams params = ModelParams::init({2, 3, 2}, 5);
    auto gen = rng::make_stream(59, rng::Stream::kDataGen);
    const Matrix x = random_matrix(gen, 4, 2, -1.0, 1.0);
    const Matrix fit = forward_batch(params, x);
    const BackwardResult res = backward(params, x, fit);
    for (const auto& layer : res.grads.weights) {
        for (double g : layer) CHECK(g == 0.0);
    }
    for (const auto& layer : res.grads.biases) {
        for (double g : layer) CHECK(g == 0.0);
    }
}

TEST_CASE("adam first step moves by the learning rate") {
    ModelParams p = zero_params({1, 1});
    AdamState state = AdamState::zeros_like(p);
    Gradients g = Gradients::zeros_like(p);
    g.weights[0][0] = 1.0;
    adam_step(p, g, state, 1e-3);
    CHECK(p.weights[0][0] == doctest::Approx(-1e-3).epsilon(1e-7));
    CHECK(state.step_count == 1);

    ModelParams q = zero_params({1, 1});
    AdamState qstate = AdamState::zeros_like(q);
    Gradients neg = Gradients::zeros_like(q);
    neg.weights[0][0] = -2.0;
    adam_step(q, neg, qstate, 1e-3);
    CHECK(q.weights[0][0] == doctest::Approx(1e-3).epsilon(1e-7));
}

TEST_CASE("adam with zero gradients leaves parameters untouched") {
    ModelParams p = ModelParams::init({2, 2}, 3);
    const ModelParams before = p;
    AdamState state = AdamState::zeros_like(p);
    adam_step(p, Gradients::zeros_like(p), state, 1e-3);
    CHECK(p == before);
    CHECK(state.step_count == 1);
}

TEST_CASE("adam rejects non-finite gradients") {
    ModelParams p = ModelParams::init({2, 2}, 3);
    AdamState state = AdamState::zeros_like(p);
    Gradients g = Gradients::zeros_like(p);
    g.weights[0][0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(p, g, state, 1e-3), TrainingError);
}

TEST_CASE("dropout at rate zero equals eval mode") {
    const ModelParams p = ModelParams::init({3, 4, 2}, 21);
    auto gen = rng::make_stream(61, rng::Stream::kDataGen);
    auto drop_rng = rng::make_stream(62, rng::Stream::kDropout);
    const Matrix x = random_matrix(gen, 6, 3, -1.5, 1.5);
    const Matrix eval = forward_batch(p, x, Mode::kEval);
    const Matrix train = forward_batch(p, x, Mode::kTrain, 0.0, &drop_rng);
    CHECK(eval == train);
}

TEST_CASE("train_local respects the epoch budget") {
    auto gen = rng::make_stream(63, rng::Stream::kDataGen);
    std::vector<SurvivalRecord> records;
    for (int i = 0; i < 10; ++i) {
        records.push_back(rec(0.5 + i, true, {static_cast<double>(i)}));
    }
    const TimeGrid grid({2.0, 5.0, 8.0});
    const PartialMatrix m = build_partial_matrix(records, grid);
    const PseudoValueMatrix pseudo = pseudo_values(m, records, records.size());
    const ModelParams init = ModelParams::init({1, 4, 3}, 11);

    TrainConfig cfg;
    cfg.max_epochs = 0;
    cfg.batch_size = 4;
    cfg.dropout_rate = 0.0;
    const TrainResult untouched = train_local(records, pseudo, records, init, cfg);
    CHECK(untouched.params == init);
    CHECK(untouched.epochs_run == 0);

    cfg.max_epochs = 7;
    cfg.patience = 100; // larger than the budget
    const TrainResult capped = train_local(records, pseudo, records, init, cfg);
    CHECK(capped.epochs_run == 7);
    CHECK(capped.history.size() == 7);
}

TEST_CASE("train_local separates a monotone toy problem") {
    std::vector<SurvivalRecord> records;
    for (int i = 0; i < 10; ++i) {
        // single covariate monotone in survival time, no censoring
        records.push_back(rec(1.0 + i, true, {static_cast<double>(i) / 10.0}));
    }
    // grid opens below the earliest time so no pair is forced into a tie
    const TimeGrid grid({1.0, 3.0, 5.0, 7.0, 9.0});
    const PartialMatrix m = build_partial_matrix(records, grid);
    const PseudoValueMatrix pseudo = pseudo_values(m, records, records.size());

    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.dropout_rate = 0.0;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    cfg.batch_size = 10;
    cfg.seed = 77;
    const TrainResult res = train_local(records, pseudo, records,
                                        ModelParams::init({1, 8, 4, 5}, 13), cfg);
    CHECK(res.best_val_cindex >= 0.9);
}

TEST_CASE("training is deterministic given the seed") {
    auto gen = rng::make_stream(67, rng::Stream::kDataGen);
    std::vector<SurvivalRecord> records;
    for (int i = 0; i < 24; ++i) {
        records.push_back(rec(0.2 + 8.0 * rng::uniform01(gen), true,
                              {rng::normal(gen), rng::normal(gen)}));
    }
    const TimeGrid grid({1.0, 3.0, 6.0});
    const PartialMatrix m = build_partial_matrix(records, grid);
    const PseudoValueMatrix pseudo = pseudo_values(m, records, records.size());
    TrainConfig cfg;
    cfg.max_epochs = 12;
    cfg.batch_size = 8;
    cfg.seed = 4242;
    const ModelParams init = ModelParams::init({2, 5, 3}, 15);
    const TrainResult a = train_local(records, pseudo, records, init, cfg);
    const TrainResult b = train_local(records, pseudo, records, init, cfg);
    CHECK(a.params == b.params);
    CHECK(a.best_val_cindex == b.best_val_cindex);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].train_loss == b.history[e].train_loss);
        CHECK(a.history[e].val_cindex == b.history[e].val_cindex);
    }
}
