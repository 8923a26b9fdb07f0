#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lesionkit/cnn.hpp"
#include "lesionkit/dataset.hpp"
#include "lesionkit/image.hpp"
#include "lesionkit/metrics.hpp"

namespace lesionkit {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    int batch_size = 10;
    int epochs = 50;
    double learning_rate = 0.001;
    AdamConfig adam;
    std::uint64_t seed = 0;
    bool freeze_conv = false;

    void validate() const;  // throws ConfigError
};

// First-moment/second-moment accumulators per parameter block.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t timestep = 0;

    static AdamState zeros_like(const ParamStore& params);
};

// One bias-corrected Adam update. Throws NumericError naming the parameter
// block when a gradient is not finite.
void adam_step(ParamStore& params, const GradStore& grads, AdamState& state,
               const TrainConfig& config);

struct EpochStats {
    double train_accuracy = 0.0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_loss = 0.0;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;

    // CSV schema: epoch,train_acc,train_loss,val_acc,val_loss
    std::string to_csv() const;
    static TrainingHistory from_csv_text(const std::string& text);
};

// In-memory dataset: images plus class indices into class_names.
struct LabeledSet {
    std::vector<ImageTensor> images;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    std::size_t size() const { return images.size(); }
};

// Load every record of `split` (images resized to target_h × target_w).
// Fails fast with the offending path when a file cannot be decoded.
LabeledSet load_labeled_set(const Manifest& m, Split split, int target_h,
                            int target_w);

// Mini-batch Adam training with a seeded shuffle per epoch; the short final
// batch is kept. Train metrics are the running mean over the epoch's
// batches (computed before each update), validation metrics come from a
// full pass at epoch end. With freeze_conv the conv stack is untouched and
// GAP features are computed once up front.
TrainingHistory train(ReferenceCnn& model, const LabeledSet& train_set,
                      const LabeledSet& val_set, const TrainConfig& config);

// The transfer recipe: keep the conv stack, reseed the dense head, train
// with the conv weights frozen.
TrainingHistory retrain_head(ReferenceCnn& model, const LabeledSet& train_set,
                             const LabeledSet& val_set,
                             const TrainConfig& config);

// (accuracy, mean cross-entropy) over a set.
std::pair<double, double> evaluate_set(const ReferenceCnn& model,
                                       const LabeledSet& set);

// Elementwise means across repeated runs. Epoch counts must agree.
TrainingHistory average_histories(const std::vector<TrainingHistory>& runs);
MetricsReport average_reports(const std::vector<MetricsReport>& runs);

struct AveragedRuns {
    TrainingHistory history;
    MetricsReport report;
};

// Combined mean over matched (history, report) pairs from repeated runs.
AveragedRuns average_runs(const std::vector<TrainingHistory>& histories,
                          const std::vector<MetricsReport>& reports);

}  // namespace lesionkit
