#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionkit/augment.hpp"
#include "lesionkit/dataset.hpp"
#include "lesionkit/grid.hpp"
#include "lesionkit/lime.hpp"
#include "lesionkit/segment.hpp"
#include "lesionkit/train.hpp"

namespace lesionkit::cli {

struct ModelOptions {
    int input_size = 64;
    std::vector<int> conv_channels = {16, 32, 64};
};

struct TrainOptions {
    TrainConfig config;
    int runs = 1;
};

struct MetricsOptions {
    std::string positive_class;  // empty: first class in the manifest
    std::string averaging = "weighted";
    double alpha = 0.05;
};

struct AugmentOptions {
    AugmentationPolicy policy = AugmentationPolicy::standard(0);
    int count = 4;
};

struct CamOptions {
    std::string target_class;  // empty: model's own prediction
    double opacity = 0.5;
};

// One document configuring the whole pipeline. Subcommands read their
// section; command-line flags override file values.
struct ExperimentConfig {
    std::filesystem::path data_root;
    std::filesystem::path manifest;
    std::filesystem::path out_dir = "out";
    int threads = 1;

    SplitSpec split;
    AugmentOptions augment;
    ModelOptions model;
    TrainOptions train;
    GridSpec grid{{5, 10, 20, 40}, {20, 30, 40, 50}, {0.001, 0.01, 0.1}, 1};
    MetricsOptions metrics;
    LimeConfig lime;
    CamOptions cam;
    SegmentationConfig segment{ChannelSelector::gray, 0.5f, 1.0f};

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::filesystem::path& path);
};

OffColor off_color_from_string(const std::string& s);
ChannelSelector channel_from_string(const std::string& s);
Averaging averaging_from_string(const std::string& s);

}  // namespace lesionkit::cli
