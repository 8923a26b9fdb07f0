#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "lesionkit/cnn.hpp"
#include "lesionkit/errors.hpp"
#include "lesionkit/train.hpp"
#include "support.hpp"

using namespace lesionkit;
using lktest::TempDir;

namespace {

CnnArchitecture tiny_arch(std::vector<int> channels, int h = 8, int w = 8,
                          int in_c = 3) {
    CnnArchitecture arch;
    arch.input_height = h;
    arch.input_width = w;
    arch.input_channels = in_c;
    arch.conv_channels = std::move(channels);
    arch.class_names = {"lesion", "healthy"};
    return arch;
}

}  // namespace

TEST_CASE("zero head weights give uniform probabilities") {
    ReferenceCnn model(tiny_arch({2}));
    const ImageTensor img = lktest::noise_image(8, 8, 3, 1);
    const auto rows = model.forward({img});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == doctest::Approx(0.5));
    CHECK(rows[0][1] == doctest::Approx(0.5));
}

TEST_CASE("duplicated sample yields identical rows") {
    const ReferenceCnn model =
        ReferenceCnn::initialized(tiny_arch({2, 3}), 42);
    const ImageTensor img = lktest::noise_image(8, 8, 3, 2);
    const auto rows = model.forward({img, img, img});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == rows[1]);
    CHECK(rows[1] == rows[2]);
}

TEST_CASE("single-channel conv model matches a hand-evaluated forward pass") {
    CnnArchitecture arch = tiny_arch({1}, 4, 4, 1);
    ReferenceCnn model(arch);
    // All nine conv taps 0.2, bias 0.1; head weights (1, -1), bias (.2, -.2).
    auto& cw = model.params().block("conv0.weight").values;
    std::fill(cw.begin(), cw.end(), 0.2f);
    model.params().block("conv0.bias").values = {0.1f};
    model.params().block("head.weight").values = {1.0f, -1.0f};
    model.params().block("head.bias").values = {0.2f, -0.2f};

    const float pixel = 0.6f;
    const ImageTensor img = lktest::constant_image(4, 4, 1, pixel);

    // Hand evaluation. Zero padding means the tap count depends on the
    // position: 4 at corners, 6 on edges, 9 inside. Parameters live as
    // float32, so the oracle widens the stored values.
    const double w = static_cast<double>(0.2f);
    const double b = static_cast<double>(0.1f);
    const double v = static_cast<double>(pixel);
    const double corner = 4 * w * v + b;   // 0.58
    const double edge = 6 * w * v + b;     // 0.82
    const double inside = 9 * w * v + b;   // 1.18
    // ReLU keeps all three (positive). Each 2×2 pool window holds one
    // corner, two edges and one interior value; the interior wins.
    const double pooled = std::max({corner, edge, inside});
    const double gap = pooled;  // constant 2×2 map
    const double logit0 = 1.0 * gap + 0.2;
    const double logit1 = -1.0 * gap - 0.2;
    const double p0 = std::exp(logit0) / (std::exp(logit0) + std::exp(logit1));

    const auto rows = model.forward({img});
    CHECK(rows[0][0] == doctest::Approx(p0).epsilon(1e-9));
    CHECK(rows[0][1] == doctest::Approx(1.0 - p0).epsilon(1e-9));
}

TEST_CASE("forward rejects shape mismatches") {
    const ReferenceCnn model = ReferenceCnn::initialized(tiny_arch({2}), 7);
    CHECK_THROWS_AS(model.forward({lktest::noise_image(9, 8, 3, 3)}),
                    ShapeError);
    CHECK_THROWS_AS(model.forward({lktest::noise_image(8, 8, 1, 3)}),
                    ShapeError);
}

TEST_CASE("probability rows form a simplex") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const ReferenceCnn model =
            ReferenceCnn::initialized(tiny_arch({2, 4}, 16, 16), seed);
        const auto rows = model.forward({lktest::noise_image(16, 16, 3, seed),
                                         lktest::smooth_image(16, 16, 3)});
        for (const auto& row : rows) {
            double sum = 0.0;
            for (double p : row) {
                CHECK(p >= 0.0);
                sum += p;
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("cross entropy closed forms") {
    SUBCASE("perfect one-hot prediction is free") {
        CHECK(cross_entropy({{1.0, 0.0}}, {0}) ==
              doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("uniform two-class prediction costs ln 2") {
        CHECK(cross_entropy({{0.5, 0.5}}, {1}) ==
              doctest::Approx(std::log(2.0)));
    }
    SUBCASE("mixed batch mean") {
        const double expected = -(std::log(0.9) + std::log(0.8)) / 2.0;
        CHECK(cross_entropy({{0.9, 0.1}, {0.2, 0.8}}, {0, 1}) ==
              doctest::Approx(expected));
        CHECK(expected == doctest::Approx(0.16425).epsilon(1e-4));
    }
    SUBCASE("label out of range") {
        CHECK_THROWS_AS(cross_entropy({{0.5, 0.5}}, {2}), std::invalid_argument);
    }
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
    ParamStore params;
    params.blocks.push_back({"w", {1}, {1.0f}});
    GradStore grads;
    grads.blocks.push_back({2.0});
    AdamState state = AdamState::zeros_like(params);
    TrainConfig config;
    config.learning_rate = 0.001;

    adam_step(params, grads, state, config);
    CHECK(params.blocks[0].values[0] ==
          doctest::Approx(1.0 - 0.001).epsilon(1e-6));
}

TEST_CASE("zero gradients leave parameters untouched forever") {
    ParamStore params;
    params.blocks.push_back({"w", {2}, {0.25f, -1.5f}});
    GradStore grads;
    grads.blocks.push_back({0.0, 0.0});
    AdamState state = AdamState::zeros_like(params);
    TrainConfig config;
    const auto before = params.blocks[0].values;
    for (int i = 0; i < 10; ++i) adam_step(params, grads, state, config);
    CHECK(params.blocks[0].values == before);
}

TEST_CASE("two adam steps match the hand-evaluated recurrence") {
    const double g = 2.0, lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ParamStore params;
    params.blocks.push_back({"w", {1}, {1.0f}});
    GradStore grads;
    grads.blocks.push_back({g});
    AdamState state = AdamState::zeros_like(params);
    TrainConfig config;
    config.learning_rate = lr;

    // Hand chain, mirroring the float narrowing after each step.
    double m = 0.0, v = 0.0;
    float expected = 1.0f;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double m_hat = m / (1 - std::pow(b1, t));
        const double v_hat = v / (1 - std::pow(b2, t));
        expected = static_cast<float>(static_cast<double>(expected) -
                                      lr * m_hat / (std::sqrt(v_hat) + eps));
        adam_step(params, grads, state, config);
        CHECK(params.blocks[0].values[0] == expected);
    }
    // Constant gradient keeps m̂/√v̂ at sign(g): both steps shift by ≈ lr.
    CHECK(params.blocks[0].values[0] ==
          doctest::Approx(1.0 - 2 * lr).epsilon(1e-6));
}

TEST_CASE("adam rejects non-finite gradients naming the block") {
    ParamStore params;
    params.blocks.push_back({"conv0.weight", {1}, {1.0f}});
    GradStore grads;
    grads.blocks.push_back({std::nan("")});
    AdamState state = AdamState::zeros_like(params);
    TrainConfig config;
    try {
        adam_step(params, grads, state, config);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("conv0.weight") != std::string::npos);
    }
}

TEST_CASE("model file round trip is bit exact") {
    TempDir dir("model");
    const ReferenceCnn model =
        ReferenceCnn::initialized(tiny_arch({2, 3}, 16, 16), 99);
    const auto path = dir.path / "model.bin";
    save_model(model, path);
    const ReferenceCnn loaded = load_model(path);

    CHECK(loaded.arch() == model.arch());
    for (std::size_t b = 0; b < model.params().blocks.size(); ++b) {
        CHECK(loaded.params().blocks[b].values ==
              model.params().blocks[b].values);
    }
    const ImageTensor img = lktest::noise_image(16, 16, 3, 5);
    CHECK(model.forward({img}) == loaded.forward({img}));
}

TEST_CASE("model loader rejects damaged files") {
    TempDir dir("badmodel");
    const ReferenceCnn model = ReferenceCnn::initialized(tiny_arch({2}), 1);
    const auto path = dir.path / "model.bin";
    save_model(model, path);

    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    in.close();

    SUBCASE("truncation") {
        std::ofstream out(dir.path / "cut.bin", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
        out.close();
        CHECK_THROWS_AS(load_model(dir.path / "cut.bin"), FormatError);
    }
    SUBCASE("payload corruption breaks the checksum") {
        bytes[bytes.size() - 20] ^= 0x40;
        std::ofstream out(dir.path / "flip.bin", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_model(dir.path / "flip.bin"), FormatError);
    }
    SUBCASE("wrong magic") {
        bytes[0] = 'X';
        std::ofstream out(dir.path / "magic.bin", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_model(dir.path / "magic.bin"), FormatError);
    }
    SUBCASE("not a model at all") {
        std::ofstream(dir.path / "noise.bin") << "hello";
        CHECK_THROWS_AS(load_model(dir.path / "noise.bin"), FormatError);
    }
}
