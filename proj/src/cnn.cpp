#include "lesionkit/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lesionkit/errors.hpp"
#include "lesionkit/rng.hpp"

namespace lesionkit {

void CnnArchitecture::spatial_after_blocks(int& h, int& w) const {
    h = input_height;
    w = input_width;
    for (std::size_t b = 0; b < conv_channels.size(); ++b) {
        h /= 2;
        w /= 2;
    }
}

void CnnArchitecture::validate() const {
    if (input_height < 1 || input_width < 1)
        throw ShapeError("architecture: empty input");
    if (input_channels != 1 && input_channels != 3)
        throw ShapeError("architecture: input channels must be 1 or 3");
    if (class_names.size() < 2)
        throw ShapeError("architecture: need at least two classes");
    for (int c : conv_channels) {
        if (c < 1) throw ShapeError("architecture: conv channels must be ≥ 1");
    }
    int h = 0, w = 0;
    spatial_after_blocks(h, w);
    if (h < 1 || w < 1) {
        throw ShapeError("architecture: input too small for " +
                         std::to_string(conv_channels.size()) + " pooling stages");
    }
}

std::size_t ParamStore::total_parameters() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
}

ParamBlock& ParamStore::block(const std::string& name) {
    for (auto& b : blocks)
        if (b.name == name) return b;
    throw ShapeError("no parameter block named " + name);
}

const ParamBlock& ParamStore::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw ShapeError("no parameter block named " + name);
}

ReferenceCnn::ReferenceCnn(CnnArchitecture arch) : arch_(std::move(arch)) {
    arch_.validate();
    int in_c = arch_.input_channels;
    for (std::size_t b = 0; b < arch_.conv_channels.size(); ++b) {
        const int out_c = arch_.conv_channels[b];
        ParamBlock w;
        w.name = "conv" + std::to_string(b) + ".weight";
        w.shape = {out_c, in_c, 3, 3};
        w.values.assign(static_cast<std::size_t>(out_c) * in_c * 9, 0.0f);
        params_.blocks.push_back(std::move(w));
        ParamBlock bias;
        bias.name = "conv" + std::to_string(b) + ".bias";
        bias.shape = {out_c};
        bias.values.assign(out_c, 0.0f);
        params_.blocks.push_back(std::move(bias));
        in_c = out_c;
    }
    const int features = arch_.feature_count();
    const int classes = arch_.num_classes();
    ParamBlock hw;
    hw.name = "head.weight";
    hw.shape = {features, classes};
    hw.values.assign(static_cast<std::size_t>(features) * classes, 0.0f);
    params_.blocks.push_back(std::move(hw));
    ParamBlock hb;
    hb.name = "head.bias";
    hb.shape = {classes};
    hb.values.assign(classes, 0.0f);
    params_.blocks.push_back(std::move(hb));
}

namespace {

// He-style uniform fan-in bound.
void init_uniform(ParamBlock& block, int fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : block.values) {
        v = static_cast<float>(limit * (2.0 * rng.unit() - 1.0));
    }
}

}  // namespace

ReferenceCnn ReferenceCnn::initialized(CnnArchitecture arch,
                                       std::uint64_t seed) {
    ReferenceCnn model(std::move(arch));
    int in_c = model.arch_.input_channels;
    for (std::size_t b = 0; b < model.arch_.conv_channels.size(); ++b) {
        Rng rng(mix_seed(seed, b));
        init_uniform(model.params_.blocks[2 * b], in_c * 9, rng);
        in_c = model.arch_.conv_channels[b];
    }
    model.reinitialize_head(seed);
    return model;
}

void ReferenceCnn::reinitialize_head(std::uint64_t seed) {
    const std::size_t head_index = params_.blocks.size() - 2;
    Rng rng(mix_seed(seed, 0x48454144ull));  // distinct stream for the head
    init_uniform(params_.blocks[head_index], arch_.feature_count(), rng);
    auto& bias = params_.blocks[head_index + 1].values;
    std::fill(bias.begin(), bias.end(), 0.0f);
}

namespace {

Tensor3 image_to_tensor(const ImageTensor& img) {
    Tensor3 t(img.channels, img.height, img.width);
    for (int ch = 0; ch < img.channels; ++ch)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t.at(ch, y, x) = static_cast<double>(img.at(y, x, ch));
    return t;
}

// 3×3 convolution, stride 1, zero padding 1 (shape preserving).
Tensor3 conv3x3(const Tensor3& in, const ParamBlock& weight,
                const ParamBlock& bias) {
    const int out_c = weight.shape[0];
    const int in_c = weight.shape[1];
    Tensor3 out(out_c, in.height, in.width);
    const float* w = weight.values.data();
    for (int oc = 0; oc < out_c; ++oc) {
        const double b = bias.values[oc];
        for (int y = 0; y < in.height; ++y) {
            for (int x = 0; x < in.width; ++x) {
                double acc = b;
                for (int ic = 0; ic < in_c; ++ic) {
                    const std::size_t wbase =
                        (static_cast<std::size_t>(oc) * in_c + ic) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = y + ky - 1;
                        if (yy < 0 || yy >= in.height) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int xx = x + kx - 1;
                            if (xx < 0 || xx >= in.width) continue;
                            acc += static_cast<double>(w[wbase + ky * 3 + kx]) *
                                   in.at(ic, yy, xx);
                        }
                    }
                }
                out.at(oc, y, x) = acc;
            }
        }
    }
    return out;
}

void relu_inplace(Tensor3& t) {
    for (auto& v : t.v) v = v > 0.0 ? v : 0.0;
}

// 2×2 max pool, stride 2, floor semantics (odd trailing row/column dropped).
// argmax keeps the flat input index of the first maximum for backprop.
Tensor3 maxpool2(const Tensor3& in, std::vector<std::size_t>* argmax) {
    Tensor3 out(in.channels, in.height / 2, in.width / 2);
    if (argmax) argmax->assign(out.v.size(), 0);
    std::size_t oi = 0;
    for (int c = 0; c < in.channels; ++c) {
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x, ++oi) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t idx =
                            (static_cast<std::size_t>(c) * in.height + 2 * y + dy) *
                                in.width +
                            2 * x + dx;
                        if (in.v[idx] > best) {
                            best = in.v[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.v[oi] = best;
                if (argmax) (*argmax)[oi] = best_idx;
            }
        }
    }
    return out;
}

std::vector<double> gap(const Tensor3& t) {
    std::vector<double> feat(t.channels, 0.0);
    const double inv = 1.0 / (static_cast<double>(t.height) * t.width);
    for (int c = 0; c < t.channels; ++c) {
        double acc = 0.0;
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x) acc += t.at(c, y, x);
        feat[c] = acc * inv;
    }
    return feat;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

struct BlockCache {
    Tensor3 input;                    // activation entering the conv
    Tensor3 pre;                      // conv output before ReLU
    std::vector<std::size_t> argmax;  // pool routing
};

struct SampleCache {
    std::vector<BlockCache> blocks;
    Tensor3 final_maps;  // activation entering GAP
    std::vector<double> features;
    std::vector<double> probs;
};

}  // namespace

std::vector<double> ReferenceCnn::head_forward(
    const std::vector<double>& features) const {
    const ParamBlock& hw = params_.blocks[params_.blocks.size() - 2];
    const ParamBlock& hb = params_.blocks.back();
    const int classes = arch_.num_classes();
    const int f_count = arch_.feature_count();
    if (static_cast<int>(features.size()) != f_count)
        throw ShapeError("head_forward: feature length mismatch");
    std::vector<double> logits(classes);
    for (int k = 0; k < classes; ++k) logits[k] = hb.values[k];
    for (int f = 0; f < f_count; ++f) {
        const double x = features[f];
        for (int k = 0; k < classes; ++k) {
            logits[k] += static_cast<double>(hw.values[f * classes + k]) * x;
        }
    }
    return softmax(logits);
}

namespace {

// Runs the conv cascade; fills cache when provided.
Tensor3 run_blocks(const CnnArchitecture& arch, const ParamStore& params,
                   const ImageTensor& img, std::vector<BlockCache>* cache) {
    if (img.height != arch.input_height || img.width != arch.input_width ||
        img.channels != arch.input_channels) {
        throw ShapeError("forward: image shape " + std::to_string(img.height) +
                         "x" + std::to_string(img.width) + "x" +
                         std::to_string(img.channels) +
                         " does not match architecture input");
    }
    Tensor3 x = image_to_tensor(img);
    for (std::size_t b = 0; b < arch.conv_channels.size(); ++b) {
        BlockCache bc;
        if (cache) bc.input = x;
        Tensor3 pre = conv3x3(x, params.blocks[2 * b], params.blocks[2 * b + 1]);
        if (cache) bc.pre = pre;
        relu_inplace(pre);
        std::vector<std::size_t> argmax;
        x = maxpool2(pre, cache ? &argmax : nullptr);
        if (cache) {
            bc.argmax = std::move(argmax);
            cache->push_back(std::move(bc));
        }
    }
    return x;
}

}  // namespace

std::vector<double> ReferenceCnn::gap_features(const ImageTensor& img) const {
    return gap(run_blocks(arch_, params_, img, nullptr));
}

Tensor3 ReferenceCnn::final_conv_maps(const ImageTensor& img) const {
    return run_blocks(arch_, params_, img, nullptr);
}

std::vector<std::vector<double>> ReferenceCnn::forward(
    const std::vector<ImageTensor>& batch) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(batch.size());
    for (const auto& img : batch) {
        rows.push_back(head_forward(gap_features(img)));
    }
    return rows;
}

void ReferenceCnn::head_gradients(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, std::vector<double>& grad_weight,
    std::vector<double>& grad_bias) const {
    const int classes = arch_.num_classes();
    const int f_count = arch_.feature_count();
    grad_weight.assign(static_cast<std::size_t>(f_count) * classes, 0.0);
    grad_bias.assign(classes, 0.0);
    const double inv_batch = 1.0 / static_cast<double>(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const std::vector<double> probs = head_forward(features[i]);
        for (int k = 0; k < classes; ++k) {
            const double d =
                (probs[k] - (k == labels[i] ? 1.0 : 0.0)) * inv_batch;
            grad_bias[k] += d;
            for (int f = 0; f < f_count; ++f) {
                grad_weight[f * classes + k] += features[i][f] * d;
            }
        }
    }
}

GradStore ReferenceCnn::gradients(const std::vector<ImageTensor>& batch,
                                  const std::vector<int>& labels,
                                  bool freeze_conv) const {
    if (batch.size() != labels.size())
        throw std::invalid_argument("gradients: batch/label length mismatch");
    if (batch.empty()) throw std::invalid_argument("gradients: empty batch");
    const int classes = arch_.num_classes();
    for (int label : labels) {
        if (label < 0 || label >= classes)
            throw std::invalid_argument("gradients: label out of range");
    }

    GradStore grads;
    grads.blocks.resize(params_.blocks.size());
    for (std::size_t i = 0; i < params_.blocks.size(); ++i) {
        grads.blocks[i].assign(params_.blocks[i].size(), 0.0);
    }

    const std::size_t num_blocks = arch_.conv_channels.size();
    const std::size_t head_w = 2 * num_blocks;
    const ParamBlock& hw = params_.blocks[head_w];
    const int f_count = arch_.feature_count();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::vector<BlockCache> cache;
        const Tensor3 final_maps =
            run_blocks(arch_, params_, batch[i], freeze_conv ? nullptr : &cache);
        const std::vector<double> features = gap(final_maps);
        const std::vector<double> probs = head_forward(features);

        // Softmax + cross-entropy composite gradient.
        std::vector<double> dlogits(classes);
        for (int k = 0; k < classes; ++k) {
            dlogits[k] = (probs[k] - (k == labels[i] ? 1.0 : 0.0)) * inv_batch;
        }
        for (int k = 0; k < classes; ++k) {
            grads.blocks[head_w + 1][k] += dlogits[k];
            for (int f = 0; f < f_count; ++f) {
                grads.blocks[head_w][f * classes + k] += features[f] * dlogits[k];
            }
        }
        if (freeze_conv || num_blocks == 0) continue;

        std::vector<double> dfeat(f_count, 0.0);
        for (int f = 0; f < f_count; ++f) {
            for (int k = 0; k < classes; ++k) {
                dfeat[f] += static_cast<double>(hw.values[f * classes + k]) *
                            dlogits[k];
            }
        }

        // GAP spreads each feature gradient uniformly over its map.
        Tensor3 dx(final_maps.channels, final_maps.height, final_maps.width);
        const double inv_area =
            1.0 / (static_cast<double>(final_maps.height) * final_maps.width);
        for (int c = 0; c < dx.channels; ++c) {
            const double g = dfeat[c] * inv_area;
            for (int y = 0; y < dx.height; ++y)
                for (int x = 0; x < dx.width; ++x) dx.at(c, y, x) = g;
        }

        for (std::size_t b = num_blocks; b-- > 0;) {
            const BlockCache& bc = cache[b];
            // Unpool: route gradients to the recorded argmax positions, then
            // apply the ReLU mask.
            Tensor3 dpre(bc.pre.channels, bc.pre.height, bc.pre.width);
            for (std::size_t oi = 0; oi < dx.v.size(); ++oi) {
                dpre.v[bc.argmax[oi]] += dx.v[oi];
            }
            for (std::size_t j = 0; j < dpre.v.size(); ++j) {
                if (bc.pre.v[j] <= 0.0) dpre.v[j] = 0.0;
            }

            // Convolution backward: weight, bias and input gradients.
            const ParamBlock& w = params_.blocks[2 * b];
            const int out_c = w.shape[0];
            const int in_c = w.shape[1];
            auto& gw = grads.blocks[2 * b];
            auto& gb = grads.blocks[2 * b + 1];
            Tensor3 dinput(bc.input.channels, bc.input.height, bc.input.width);
            for (int oc = 0; oc < out_c; ++oc) {
                for (int y = 0; y < dpre.height; ++y) {
                    for (int x = 0; x < dpre.width; ++x) {
                        const double g = dpre.at(oc, y, x);
                        if (g == 0.0) continue;
                        gb[oc] += g;
                        for (int ic = 0; ic < in_c; ++ic) {
                            const std::size_t wbase =
                                (static_cast<std::size_t>(oc) * in_c + ic) * 9;
                            for (int ky = 0; ky < 3; ++ky) {
                                const int yy = y + ky - 1;
                                if (yy < 0 || yy >= bc.input.height) continue;
                                for (int kx = 0; kx < 3; ++kx) {
                                    const int xx = x + kx - 1;
                                    if (xx < 0 || xx >= bc.input.width) continue;
                                    gw[wbase + ky * 3 + kx] +=
                                        g * bc.input.at(ic, yy, xx);
                                    dinput.at(ic, yy, xx) +=
                                        g * static_cast<double>(
                                                w.values[wbase + ky * 3 + kx]);
                                }
                            }
                        }
                    }
                }
            }
            dx = std::move(dinput);
        }
    }
    return grads;
}

double cross_entropy(const std::vector<std::vector<double>>& probabilities,
                     const std::vector<int>& labels) {
    if (probabilities.size() != labels.size())
        throw std::invalid_argument("cross_entropy: row/label length mismatch");
    if (probabilities.empty())
        throw std::invalid_argument("cross_entropy: no rows");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 ||
            labels[i] >= static_cast<int>(probabilities[i].size())) {
            throw std::invalid_argument("cross_entropy: label out of range");
        }
        total += -std::log(std::max(probabilities[i][labels[i]], 1e-12));
    }
    return total / static_cast<double>(labels.size());
}

std::vector<int> argmax_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(static_cast<int>(
            std::max_element(row.begin(), row.end()) - row.begin()));
    }
    return out;
}

}  // namespace lesionkit
