#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lesionkit/image.hpp"

namespace lesionkit {

// conv blocks (3×3 same-padding conv + ReLU + 2×2 max pool) → global
// average pooling → dense softmax head. An empty conv_channels list is a
// plain softmax regression on per-channel means.
struct CnnArchitecture {
    int input_height = 64;
    int input_width = 64;
    int input_channels = 3;
    std::vector<int> conv_channels = {16, 32, 64};
    std::vector<std::string> class_names = {"class0", "class1"};

    int num_classes() const { return static_cast<int>(class_names.size()); }
    int feature_count() const {
        return conv_channels.empty() ? input_channels : conv_channels.back();
    }
    // Spatial size entering GAP after the pooling cascade.
    void spatial_after_blocks(int& h, int& w) const;
    void validate() const;
    bool operator==(const CnnArchitecture&) const = default;
};

// Named tensor of float32 parameters. Storage is float so the on-disk
// format is exact; every computation widens to double.
struct ParamBlock {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;

    std::size_t size() const { return values.size(); }
};

struct ParamStore {
    std::vector<ParamBlock> blocks;

    std::size_t total_parameters() const;
    ParamBlock& block(const std::string& name);
    const ParamBlock& block(const std::string& name) const;
};

// Per-block gradients, shapes mirroring a ParamStore.
struct GradStore {
    std::vector<std::vector<double>> blocks;
};

// C×H×W activation tensor.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c, int h, int w)
        : channels(c), height(h), width(w),
          v(static_cast<std::size_t>(c) * h * w, 0.0) {}
    double& at(int c, int y, int x) {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

class ReferenceCnn {
public:
    explicit ReferenceCnn(CnnArchitecture arch);

    // He-style uniform fan-in initialization for weights, zero biases.
    static ReferenceCnn initialized(CnnArchitecture arch, std::uint64_t seed);

    const CnnArchitecture& arch() const { return arch_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Reinitialize only the dense head (the transfer-learning step).
    void reinitialize_head(std::uint64_t seed);

    // Softmax probability rows, one per batch image. Throws ShapeError when
    // an image does not match the architecture input.
    std::vector<std::vector<double>> forward(
        const std::vector<ImageTensor>& batch) const;

    // Gradient of the mean cross-entropy over the batch. Frozen conv blocks
    // get zero gradient.
    GradStore gradients(const std::vector<ImageTensor>& batch,
                        const std::vector<int>& labels,
                        bool freeze_conv = false) const;

    // Features after GAP; what the dense head consumes.
    std::vector<double> gap_features(const ImageTensor& img) const;

    // Activations entering GAP (final conv block output after pooling).
    Tensor3 final_conv_maps(const ImageTensor& img) const;

    // Probability row from precomputed GAP features.
    std::vector<double> head_forward(const std::vector<double>& features) const;

    // Head-only gradient for the frozen-conv training path. Returns
    // gradients for head.weight and head.bias.
    void head_gradients(const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels,
                        std::vector<double>& grad_weight,
                        std::vector<double>& grad_bias) const;

    std::size_t num_conv_blocks() const { return arch_.conv_channels.size(); }

private:
    CnnArchitecture arch_;
    ParamStore params_;
};

// Mean of −log p[label] with p clamped to ≥ 1e-12. Throws
// std::invalid_argument for an out-of-range label.
double cross_entropy(const std::vector<std::vector<double>>& probabilities,
                     const std::vector<int>& labels);

std::vector<int> argmax_rows(const std::vector<std::vector<double>>& rows);

// Prediction contract shared by the explanation tooling: anything that maps
// a batch of images to probability rows.
class BlackBoxClassifier {
public:
    virtual ~BlackBoxClassifier() = default;
    virtual std::vector<std::vector<double>> predict(
        const std::vector<ImageTensor>& batch) const = 0;
    virtual const std::vector<std::string>& class_names() const = 0;
};

class CnnClassifier : public BlackBoxClassifier {
public:
    explicit CnnClassifier(ReferenceCnn model) : model_(std::move(model)) {}
    std::vector<std::vector<double>> predict(
        const std::vector<ImageTensor>& batch) const override {
        return model_.forward(batch);
    }
    const std::vector<std::string>& class_names() const override {
        return model_.arch().class_names;
    }
    const ReferenceCnn& model() const { return model_; }

private:
    ReferenceCnn model_;
};

// Binary model file: magic, format version, architecture descriptor,
// little-endian float32 parameter payload, trailing CRC32.
void save_model(const ReferenceCnn& model, const std::filesystem::path& path);
ReferenceCnn load_model(const std::filesystem::path& path);

}  // namespace lesionkit
