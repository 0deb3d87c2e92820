#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fgsm/error.hpp"
#include "fgsm/optim.hpp"

using namespace fgsm;

namespace {

Network small_net(std::size_t dim, std::uint64_t seed) {
    Network net(Shape{dim, dim, 3}, small_config(5));
    Rng rng(seed);
    net.initialize(rng);
    return net;
}

} // namespace

TEST(RmsProp, ZeroGradientOnlyDecaysAccumulator) {
    std::vector<float> theta = {1.5f, -2.0f}, grad = {0.0f, 0.0f}, v = {0.5f, 2.0f};
    rmsprop_update(theta, grad, v, RmsPropConfig{});
    EXPECT_EQ(theta, (std::vector<float>{1.5f, -2.0f}));
    EXPECT_FLOAT_EQ(v[0], 0.45f);
    EXPECT_FLOAT_EQ(v[1], 1.8f);
}

TEST(RmsProp, ScalarStepMatchesHandValue) {
    std::vector<float> theta = {0.0f}, grad = {1.0f}, v = {0.0f};
    rmsprop_update(theta, grad, v, RmsPropConfig{});
    EXPECT_NEAR(v[0], 0.1, 1e-7);
    const double want = -0.001 / (std::sqrt(0.1) + 1e-7);
    EXPECT_NEAR(theta[0], want, 1e-6);
    EXPECT_NEAR(theta[0], -0.0031623, 1e-6);
}

TEST(RmsProp, QuadraticDecreasesForTenSteps) {
    std::vector<float> theta = {1.0f}, v = {0.0f};
    float prev = theta[0] * theta[0];
    for (int i = 0; i < 10; ++i) {
        std::vector<float> grad = {2.0f * theta[0]};
        rmsprop_update(theta, grad, v, RmsPropConfig{});
        const float f = theta[0] * theta[0];
        EXPECT_LT(f, prev) << "step " << i;
        prev = f;
    }
}

TEST(RmsProp, HugeAndTinyGradientsStayFinite) {
    Rng rng(4);
    std::vector<float> theta(100), grad(100), v(100, 0.0f);
    for (int step = 0; step < 50; ++step) {
        for (auto& g : grad) g = static_cast<float>(std::pow(10.0, rng.uniform(-30, 15)) * (rng.bernoulli(0.5) ? 1 : -1));
        rmsprop_update(theta, grad, v, RmsPropConfig{});
        for (std::size_t i = 0; i < theta.size(); ++i) {
            ASSERT_TRUE(std::isfinite(theta[i]));
            ASSERT_GE(v[i], 0.0f);
        }
    }
}

TEST(RmsProp, StepRejectsShapeMismatch) {
    Network net = small_net(8, 1);
    RmsPropState state = RmsPropState::for_network(net);
    auto grads = state.v;
    grads[0].weights = Tensor(Shape{2, 2});
    auto params = net.params();
    const auto before = params;
    EXPECT_THROW(rmsprop_step(params, grads, state), ShapeError);
    EXPECT_EQ(params, before);
}

TEST(Evaluate, ZeroParametersGiveUniformConfidence) {
    Network net = small_net(8, 1);
    for (auto& p : net.mutable_params()) {
        for (auto& x : p.weights.values()) x = 0.0f;
        for (auto& x : p.bias.values()) x = 0.0f;
    }
    const Dataset ds = synth_dataset(5, 6, 8, 3);
    const EvalMetrics m = evaluate(net, ds);
    EXPECT_EQ(m.mean_confidence, static_cast<double>(0.2f));  // probabilities are float32
    // Ties resolve to class 0.
    EXPECT_DOUBLE_EQ(m.accuracy, 0.2);
    EXPECT_NEAR(m.mean_loss, std::log(5.0), 1e-5);
}

TEST(Evaluate, RandomNetworkIsNearChance) {
    const Dataset ds = synth_dataset(5, 20, 16, 7);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const EvalMetrics m = evaluate(small_net(16, seed), ds);
        EXPECT_GE(m.accuracy, 0.05);
        EXPECT_LE(m.accuracy, 0.5);
        EXPECT_GE(m.mean_confidence, 0.2);
        EXPECT_LE(m.mean_confidence, 1.0);
    }
}

TEST(Evaluate, EmptyOrMislabelledDatasetRejected) {
    Network net = small_net(8, 1);
    EXPECT_THROW(evaluate(net, Dataset{}), ArgumentError);
    Dataset ds = synth_dataset(6, 2, 8, 1);
    EXPECT_THROW(evaluate(net, ds), ArgumentError);
}

TEST(Train, HistoryLengthAndDeterminism) {
    const auto [tr, va] = split(synth_dataset(5, 6, 8, 1), 0.5, 1);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 9;
    Network a = small_net(8, 2), b = small_net(8, 2);
    std::size_t calls = 0;
    const TrainHistory ha = train(a, tr, va, cfg, [&](std::size_t epoch, const Network&, const TrainHistory& h) {
        ++calls;
        EXPECT_EQ(h.epochs.size(), epoch);
    });
    const TrainHistory hb = train(b, tr, va, cfg);
    EXPECT_EQ(ha.epochs.size(), 3u);
    EXPECT_EQ(calls, 3u);
    EXPECT_EQ(ha, hb);
    EXPECT_EQ(a.params(), b.params());
    for (const auto& r : ha.epochs) {
        EXPECT_GE(r.train_accuracy, 0.0);
        EXPECT_LE(r.train_accuracy, 1.0);
        EXPECT_GE(r.val_accuracy, 0.0);
        EXPECT_LE(r.val_accuracy, 1.0);
    }
}

TEST(Train, DifferentSeedsDiverge) {
    const auto [tr, va] = split(synth_dataset(5, 6, 8, 1), 0.5, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    Network a = small_net(8, 2), b = small_net(8, 2);
    cfg.seed = 1;
    train(a, tr, va, cfg);
    cfg.seed = 2;
    train(b, tr, va, cfg);
    EXPECT_NE(a.params(), b.params());
}

TEST(Train, InvariantToPresentationOrder) {
    const auto [tr, va] = split(synth_dataset(5, 6, 8, 1), 0.5, 1);
    Dataset reversed = tr;
    std::reverse(reversed.images.begin(), reversed.images.end());
    std::reverse(reversed.labels.begin(), reversed.labels.end());
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 5;
    cfg.augment = AugmentConfig{};
    Network a = small_net(8, 2), b = small_net(8, 2);
    EXPECT_EQ(train(a, tr, va, cfg), train(b, reversed, va, cfg));
    EXPECT_EQ(a.params(), b.params());
}

TEST(Train, EpochsSnapshotMatchesShorterRun) {
    // Stopping after k epochs equals the k-epoch snapshot of a longer run.
    const auto [tr, va] = split(synth_dataset(5, 6, 8, 1), 0.5, 1);
    TrainConfig cfg;
    cfg.seed = 3;
    cfg.epochs = 4;
    Network longer = small_net(8, 2), shorter = small_net(8, 2);
    std::vector<LayerParams> snapshot;
    train(longer, tr, va, cfg, [&](std::size_t epoch, const Network& net, const TrainHistory&) {
        if (epoch == 2) snapshot = net.params();
    });
    cfg.epochs = 2;
    train(shorter, tr, va, cfg);
    EXPECT_EQ(shorter.params(), snapshot);
}

TEST(Train, RejectsBadInputs) {
    const Dataset ds = synth_dataset(5, 2, 8, 1);
    Network net = small_net(8, 2);
    TrainConfig cfg;
    cfg.epochs = 0;
    EXPECT_THROW(train(net, ds, ds, cfg), ArgumentError);
    cfg.epochs = 1;
    EXPECT_THROW(train(net, Dataset{}, ds, cfg), ArgumentError);
    EXPECT_THROW(train(net, synth_dataset(5, 2, 16, 1), ds, cfg), ShapeError);
}

TEST(Train, SmallConfigFitsSyntheticData) {
    const auto [tr, va] = split(synth_dataset(5, 40, 32, 11), 0.8, 11);
    Network net = small_net(32, 11);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 11;
    const TrainHistory h = train(net, tr, va, cfg);
    EXPECT_GE(evaluate(net, tr).accuracy, 0.95);
    EXPECT_LT(h.epochs.back().train_loss, h.epochs.front().train_loss);
}

TEST(History, CsvLayout) {
    TrainHistory h;
    h.epochs.push_back({1.5, 0.25, 2.0, 0.5});
    h.epochs.push_back({0.125, 1.0, 0.75, 0.8});
    std::ostringstream out;
    write_history_csv(out, h);
    EXPECT_EQ(out.str(), "epoch,train_loss,train_acc,val_loss,val_acc\n1,1.5,0.25,2,0.5\n2,0.125,1,0.75,0.8\n");
}
