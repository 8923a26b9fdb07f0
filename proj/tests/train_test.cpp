#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lesionkit/cnn.hpp"
#include "lesionkit/errors.hpp"
#include "lesionkit/grid.hpp"
#include "lesionkit/train.hpp"
#include "support.hpp"

using namespace lesionkit;

namespace {

// Bright-vs-dark toy corpus. A pixel-mean threshold at 0.5 separates it
// perfectly, which the tests verify before asking the network to learn it.
LabeledSet bright_dark_set(int count, int size, std::uint64_t seed) {
    LabeledSet set;
    set.class_names = {"dark", "bright"};
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        const float base = label == 0 ? 0.1f : 0.9f;
        ImageTensor img(size, size, 3, base);
        for (auto& v : img.data) {
            v = std::clamp(v + static_cast<float>(rng.range(-0.05, 0.05)), 0.0f,
                           1.0f);
        }
        set.images.push_back(std::move(img));
        set.labels.push_back(label);
    }
    return set;
}

bool pixel_mean_oracle_separates(const LabeledSet& set) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        double mean = 0.0;
        for (float v : set.images[i].data) mean += v;
        mean /= set.images[i].data.size();
        const int predicted = mean > 0.5 ? 1 : 0;
        if (predicted != set.labels[i]) return false;
    }
    return true;
}

// Perceptron convergence is a certificate of linear separability.
bool perceptron_separates(const std::vector<std::vector<double>>& feats,
                          const std::vector<int>& labels, int max_epochs) {
    const std::size_t dim = feats.front().size() + 1;
    std::vector<double> w(dim, 0.0);
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        bool clean = true;
        for (std::size_t i = 0; i < feats.size(); ++i) {
            double score = w[dim - 1];
            for (std::size_t f = 0; f + 1 < dim; ++f) score += w[f] * feats[i][f];
            const int y = labels[i] == 1 ? 1 : -1;
            if (y * score <= 0) {
                clean = false;
                for (std::size_t f = 0; f + 1 < dim; ++f) w[f] += y * feats[i][f];
                w[dim - 1] += y;
            }
        }
        if (clean) return true;
    }
    return false;
}

CnnArchitecture small_arch(int size) {
    CnnArchitecture arch;
    arch.input_height = size;
    arch.input_width = size;
    arch.input_channels = 3;
    arch.conv_channels = {4};
    arch.class_names = {"dark", "bright"};
    return arch;
}

std::vector<std::vector<float>> conv_snapshot(const ReferenceCnn& model) {
    std::vector<std::vector<float>> snap;
    for (std::size_t b = 0; b + 2 < model.params().blocks.size(); ++b) {
        snap.push_back(model.params().blocks[b].values);
    }
    return snap;
}

}  // namespace

TEST_CASE("training separates the bright-vs-dark corpus") {
    const LabeledSet train_set = bright_dark_set(40, 16, 11);
    const LabeledSet val_set = bright_dark_set(10, 16, 12);
    REQUIRE(pixel_mean_oracle_separates(train_set));

    ReferenceCnn model = ReferenceCnn::initialized(small_arch(16), 5);
    TrainConfig config;
    config.batch_size = 10;
    config.epochs = 30;
    config.learning_rate = 0.001;
    config.seed = 5;

    const TrainingHistory history = train(model, train_set, val_set, config);
    REQUIRE(history.epochs.size() == 30);
    CHECK(history.epochs.back().train_accuracy >= 0.95);
    CHECK(history.epochs.back().val_accuracy >= 0.9);
    for (const auto& e : history.epochs) {
        CHECK(e.train_accuracy >= 0.0);
        CHECK(e.train_accuracy <= 1.0);
        CHECK(e.train_loss >= 0.0);
        CHECK(std::isfinite(e.train_loss));
    }
}

TEST_CASE("one epoch of one batch changes the parameters") {
    const LabeledSet set = bright_dark_set(4, 8, 3);
    ReferenceCnn model = ReferenceCnn::initialized(small_arch(8), 1);
    const auto before = model.params().blocks.back().values;

    TrainConfig config;
    config.batch_size = 4;
    config.epochs = 1;
    config.seed = 9;
    train(model, set, set, config);
    CHECK(model.params().blocks.back().values != before);
}

TEST_CASE("freeze keeps every conv weight bit-identical") {
    const LabeledSet set = bright_dark_set(12, 8, 21);
    ReferenceCnn model = ReferenceCnn::initialized(small_arch(8), 2);
    const auto before = conv_snapshot(model);

    TrainConfig config;
    config.batch_size = 4;
    config.epochs = 12;
    config.freeze_conv = true;
    config.seed = 3;
    train(model, set, set, config);
    CHECK(conv_snapshot(model) == before);
}

TEST_CASE("histories are reproducible from the seed") {
    const LabeledSet train_set = bright_dark_set(16, 8, 7);
    const LabeledSet val_set = bright_dark_set(6, 8, 8);
    TrainConfig config;
    config.batch_size = 5;
    config.epochs = 4;
    config.seed = 1234;

    ReferenceCnn m1 = ReferenceCnn::initialized(small_arch(8), 6);
    ReferenceCnn m2 = ReferenceCnn::initialized(small_arch(8), 6);
    const TrainingHistory h1 = train(m1, train_set, val_set, config);
    const TrainingHistory h2 = train(m2, train_set, val_set, config);

    REQUIRE(h1.epochs.size() == h2.epochs.size());
    for (std::size_t e = 0; e < h1.epochs.size(); ++e) {
        CHECK(h1.epochs[e].train_loss == h2.epochs[e].train_loss);
        CHECK(h1.epochs[e].val_loss == h2.epochs[e].val_loss);
    }
    for (std::size_t b = 0; b < m1.params().blocks.size(); ++b) {
        CHECK(m1.params().blocks[b].values == m2.params().blocks[b].values);
    }
}

TEST_CASE("loss shrinks on a two-sample separable set") {
    LabeledSet set;
    set.class_names = {"dark", "bright"};
    set.images = {lktest::constant_image(8, 8, 3, 0.1f),
                  lktest::constant_image(8, 8, 3, 0.9f)};
    set.labels = {0, 1};

    ReferenceCnn model = ReferenceCnn::initialized(small_arch(8), 4);
    TrainConfig config;
    config.batch_size = 2;
    config.epochs = 50;
    config.learning_rate = 0.001;
    config.seed = 2;
    const TrainingHistory history = train(model, set, set, config);
    CHECK(history.epochs.back().train_loss <
          history.epochs.front().train_loss);
}

TEST_CASE("retrain_head follows the frozen-feature transfer recipe") {
    const LabeledSet train_set = bright_dark_set(24, 8, 31);
    const LabeledSet val_set = bright_dark_set(8, 8, 32);

    // Start from a conv stack trained briefly on the task.
    ReferenceCnn model = ReferenceCnn::initialized(small_arch(8), 8);
    TrainConfig warm;
    warm.batch_size = 8;
    warm.epochs = 5;
    warm.seed = 77;
    train(model, train_set, val_set, warm);

    // The GAP features must be linearly separable; certify with a
    // perceptron before demanding perfect head accuracy.
    std::vector<std::vector<double>> feats;
    for (const auto& img : train_set.images) {
        feats.push_back(model.gap_features(img));
    }
    REQUIRE(perceptron_separates(feats, train_set.labels, 5000));

    const auto conv_before = conv_snapshot(model);
    TrainConfig config;
    config.batch_size = 8;
    config.epochs = 200;
    config.learning_rate = 0.01;
    config.seed = 55;
    const TrainingHistory history =
        retrain_head(model, train_set, val_set, config);

    CHECK(conv_snapshot(model) == conv_before);
    CHECK(history.epochs.back().train_accuracy == 1.0);
}

TEST_CASE("head reinitialization is reproducible") {
    ReferenceCnn a = ReferenceCnn::initialized(small_arch(8), 10);
    ReferenceCnn b = ReferenceCnn::initialized(small_arch(8), 10);
    a.reinitialize_head(123);
    b.reinitialize_head(123);
    CHECK(a.params().block("head.weight").values ==
          b.params().block("head.weight").values);

    a.reinitialize_head(124);
    CHECK(a.params().block("head.weight").values !=
          b.params().block("head.weight").values);
}

TEST_CASE("run averaging") {
    SUBCASE("five identical runs average to themselves") {
        TrainingHistory h;
        h.epochs = {{0.5, 1.0, 0.4, 1.1}, {0.7, 0.8, 0.6, 0.9}};
        const TrainingHistory avg = average_histories({h, h, h, h, h});
        REQUIRE(avg.epochs.size() == 2);
        CHECK(avg.epochs[0].train_accuracy == doctest::Approx(0.5));
        CHECK(avg.epochs[1].val_loss == doctest::Approx(0.9));
    }
    SUBCASE("plain arithmetic mean") {
        std::vector<TrainingHistory> runs;
        for (double acc : {0.8, 0.9, 1.0, 0.7, 0.6}) {
            TrainingHistory h;
            h.epochs = {{acc, 0.0, 0.0, 0.0}};
            runs.push_back(h);
        }
        CHECK(average_histories(runs).epochs[0].train_accuracy ==
              doctest::Approx(0.8));
    }
    SUBCASE("length mismatch is an error") {
        TrainingHistory h1, h2;
        h1.epochs.resize(3);
        h2.epochs.resize(2);
        CHECK_THROWS_AS(average_histories({h1, h2}), std::invalid_argument);
    }
    SUBCASE("metric reports average elementwise") {
        ConfusionMatrix cm;
        cm.class_names = {"a", "b"};
        cm.counts = {{4, 1}, {2, 3}};
        MetricsReport r1 = metrics_report(cm);
        MetricsReport r2 = r1;
        r2.accuracy = 1.0;
        const MetricsReport avg = average_reports({r1, r2});
        CHECK(avg.accuracy == doctest::Approx((r1.accuracy + 1.0) / 2));
    }
    SUBCASE("combined averaging pairs histories with reports") {
        ConfusionMatrix cm;
        cm.class_names = {"a", "b"};
        cm.counts = {{4, 1}, {2, 3}};
        const MetricsReport rep = metrics_report(cm);
        TrainingHistory h;
        h.epochs = {{0.5, 1.0, 0.4, 1.1}};
        const AveragedRuns avg = average_runs({h, h}, {rep, rep});
        CHECK(avg.history.epochs.size() == 1);
        CHECK(avg.report.accuracy == doctest::Approx(rep.accuracy));
        CHECK_THROWS_AS(average_runs({h, h}, {rep}), std::invalid_argument);
    }
}

TEST_CASE("grid search walks cells lexicographically with a stub") {
    GridSpec grid;
    grid.batch_sizes = {5, 10, 20, 40};
    grid.epoch_counts = {20, 30, 40, 50};
    grid.learning_rates = {0.001, 0.01, 0.1};

    // Deterministic objective with a unique optimum at (10, 50, 0.001).
    auto objective = [](const TrainConfig& c) {
        double score = 0.0;
        if (c.batch_size == 10) score += 0.4;
        if (c.epochs == 50) score += 0.3;
        if (c.learning_rate == 0.001) score += 0.2;
        return score + 0.0001 * c.epochs / c.batch_size;
    };

    TrainConfig base;
    base.seed = 9;
    std::size_t calls = 0;
    const GridSearchResult result =
        grid_search(grid, base, [&](const TrainConfig& c) {
            ++calls;
            return objective(c);
        });

    CHECK(calls == 48);
    CHECK(result.cells.size() == 48);

    // Independent argmax over the same objective.
    double best = -1.0;
    TrainConfig expected;
    for (int bs : grid.batch_sizes)
        for (int ep : grid.epoch_counts)
            for (double lr : grid.learning_rates) {
                TrainConfig c = base;
                c.batch_size = bs;
                c.epochs = ep;
                c.learning_rate = lr;
                if (objective(c) > best) {
                    best = objective(c);
                    expected = c;
                }
            }
    CHECK(expected.batch_size == 10);
    CHECK(expected.epochs == 50);
    CHECK(expected.learning_rate == 0.001);
    CHECK(result.best.batch_size == expected.batch_size);
    CHECK(result.best.epochs == expected.epochs);
    CHECK(result.best.learning_rate == expected.learning_rate);

    // Cells arrive in list order.
    CHECK(result.cells[0].config.batch_size == 5);
    CHECK(result.cells[0].config.epochs == 20);
    CHECK(result.cells[0].config.learning_rate == 0.001);
    CHECK(result.cells[1].config.learning_rate == 0.01);
}

TEST_CASE("single-cell grid returns that cell") {
    GridSpec grid;
    grid.batch_sizes = {7};
    grid.epoch_counts = {3};
    grid.learning_rates = {0.05};
    TrainConfig base;
    const GridSearchResult result =
        grid_search(grid, base, [](const TrainConfig&) { return 0.5; });
    CHECK(result.best.batch_size == 7);
    CHECK(result.best.epochs == 3);
    CHECK(result.best.learning_rate == 0.05);
}

TEST_CASE("grid ties break toward the earlier cell") {
    GridSpec grid;
    grid.batch_sizes = {4, 8};
    grid.epoch_counts = {2};
    grid.learning_rates = {0.1};
    TrainConfig base;
    const GridSearchResult result =
        grid_search(grid, base, [](const TrainConfig&) { return 0.7; });
    CHECK(result.best.batch_size == 4);
    CHECK(result.best_cell == 0);
}

TEST_CASE("failing cell reports its coordinates") {
    GridSpec grid;
    grid.batch_sizes = {4};
    grid.epoch_counts = {2};
    grid.learning_rates = {0.1};
    TrainConfig base;
    try {
        grid_search(grid, base, [](const TrainConfig&) -> double {
            throw std::runtime_error("boom");
        });
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string what = e.what();
        CHECK(what.find("batch=4") != std::string::npos);
        CHECK(what.find("epochs=2") != std::string::npos);
    }
}

TEST_CASE("real grid search trains a model per cell") {
    const LabeledSet train_set = bright_dark_set(8, 8, 41);
    const LabeledSet val_set = bright_dark_set(4, 8, 42);
    GridSpec grid;
    grid.batch_sizes = {4};
    grid.epoch_counts = {1, 2};
    grid.learning_rates = {0.01};
    TrainConfig base;
    base.seed = 17;

    const GridSearchResult result =
        grid_search_train(grid, small_arch(8), train_set, val_set, base);
    CHECK(result.cells.size() == 2);
    for (const auto& cell : result.cells) {
        CHECK(cell.mean_val_accuracy >= 0.0);
        CHECK(cell.mean_val_accuracy <= 1.0);
    }
    const std::string csv = result.to_csv();
    CHECK(csv.find("cell,batch_size,epochs,learning_rate") != std::string::npos);
}

TEST_CASE("empty grid lists are rejected") {
    GridSpec grid;
    grid.batch_sizes = {};
    grid.epoch_counts = {1};
    grid.learning_rates = {0.1};
    TrainConfig base;
    CHECK_THROWS_AS(grid_search(grid, base, [](const TrainConfig&) { return 0.0; }),
                    ConfigError);
}

TEST_CASE("history csv round trip") {
    TrainingHistory h;
    h.epochs = {{0.5, 1.25, 0.4, 1.5}, {0.75, 0.5, 0.7, 0.6}};
    const TrainingHistory back = TrainingHistory::from_csv_text(h.to_csv());
    REQUIRE(back.epochs.size() == 2);
    CHECK(back.epochs[1].train_accuracy == doctest::Approx(0.75));
    CHECK(back.epochs[0].val_loss == doctest::Approx(1.5));

    CHECK_THROWS_AS(TrainingHistory::from_csv_text("nope\n"), FormatError);
}
