#include "config.hpp"

#include <fstream>

#include "lesionkit/errors.hpp"

namespace lesionkit::cli {

namespace {

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_pair(const nlohmann::json& j, const char* key, double& lo,
               double& hi) {
    if (!j.contains(key)) return;
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 2) {
        throw ConfigError(std::string(key) + " must be a [lo, hi] pair");
    }
    lo = arr[0].get<double>();
    hi = arr[1].get<double>();
}

}  // namespace

OffColor off_color_from_string(const std::string& s) {
    if (s == "black") return OffColor::black;
    if (s == "mean") return OffColor::image_mean;
    throw ConfigError("off color must be `black` or `mean`, got " + s);
}

ChannelSelector channel_from_string(const std::string& s) {
    if (s == "red") return ChannelSelector::red;
    if (s == "green") return ChannelSelector::green;
    if (s == "blue") return ChannelSelector::blue;
    if (s == "gray") return ChannelSelector::gray;
    throw ConfigError("channel must be red/green/blue/gray, got " + s);
}

Averaging averaging_from_string(const std::string& s) {
    if (s == "weighted") return Averaging::weighted;
    if (s == "positive") return Averaging::positive_class;
    throw ConfigError("averaging must be `weighted` or `positive`, got " + s);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
    if (j.contains("manifest")) c.manifest = j.at("manifest").get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    read_into(j, "threads", c.threads);

    if (j.contains("split")) {
        const auto& s = j.at("split");
        read_into(s, "test_fraction", c.split.test_fraction);
        read_into(s, "seed", c.split.seed);
    }
    if (j.contains("augment")) {
        const auto& a = j.at("augment");
        auto& p = c.augment.policy;
        read_into(a, "flip_horizontal_prob", p.flip_horizontal_prob);
        read_into(a, "flip_vertical_prob", p.flip_vertical_prob);
        read_pair(a, "rotation_range", p.rotation_min_deg, p.rotation_max_deg);
        read_pair(a, "shear_range", p.shear_min, p.shear_max);
        read_pair(a, "scale_range", p.scale_min, p.scale_max);
        read_into(a, "translate_fraction", p.translate_fraction);
        read_into(a, "fill_value", p.fill_value);
        read_into(a, "seed", p.seed);
        read_into(a, "count", c.augment.count);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        read_into(m, "input_size", c.model.input_size);
        read_into(m, "conv_channels", c.model.conv_channels);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        read_into(t, "batch_size", c.train.config.batch_size);
        read_into(t, "epochs", c.train.config.epochs);
        read_into(t, "learning_rate", c.train.config.learning_rate);
        read_into(t, "seed", c.train.config.seed);
        read_into(t, "freeze_conv", c.train.config.freeze_conv);
        read_into(t, "runs", c.train.runs);
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        read_into(g, "batch_sizes", c.grid.batch_sizes);
        read_into(g, "epoch_counts", c.grid.epoch_counts);
        read_into(g, "learning_rates", c.grid.learning_rates);
        read_into(g, "runs_per_cell", c.grid.runs_per_cell);
    }
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        read_into(m, "positive_class", c.metrics.positive_class);
        read_into(m, "averaging", c.metrics.averaging);
        read_into(m, "alpha", c.metrics.alpha);
    }
    if (j.contains("lime")) {
        const auto& l = j.at("lime");
        read_into(l, "num_samples", c.lime.num_samples);
        read_into(l, "kernel_width", c.lime.kernel_width);
        read_into(l, "top_k", c.lime.top_k);
        read_into(l, "ridge_lambda", c.lime.ridge_lambda);
        read_into(l, "target_segments", c.lime.target_segments);
        read_into(l, "grid_segments", c.lime.grid_segments);
        read_into(l, "rank_by_magnitude", c.lime.rank_by_magnitude);
        read_into(l, "seed", c.lime.seed);
        if (l.contains("off_color")) {
            c.lime.off_color =
                off_color_from_string(l.at("off_color").get<std::string>());
        }
    }
    if (j.contains("cam")) {
        const auto& m = j.at("cam");
        read_into(m, "class", c.cam.target_class);
        read_into(m, "opacity", c.cam.opacity);
    }
    if (j.contains("segment")) {
        const auto& s = j.at("segment");
        double lo = c.segment.lo, hi = c.segment.hi;
        read_into(s, "lo", lo);
        read_into(s, "hi", hi);
        c.segment.lo = static_cast<float>(lo);
        c.segment.hi = static_cast<float>(hi);
        if (s.contains("channel")) {
            c.segment.channel =
                channel_from_string(s.at("channel").get<std::string>());
        }
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " +
                          e.what());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

}  // namespace lesionkit::cli
