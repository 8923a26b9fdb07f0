#include "lesionkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lesionkit/errors.hpp"
#include "lesionkit/image_io.hpp"
#include "lesionkit/rng.hpp"

namespace lesionkit {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch size must be ≥ 1");
    if (epochs < 1) throw ConfigError("epoch count must be ≥ 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0,1)");
    }
    if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

AdamState AdamState::zeros_like(const ParamStore& params) {
    AdamState st;
    st.m.resize(params.blocks.size());
    st.v.resize(params.blocks.size());
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        st.m[i].assign(params.blocks[i].size(), 0.0);
        st.v[i].assign(params.blocks[i].size(), 0.0);
    }
    return st;
}

void adam_step(ParamStore& params, const GradStore& grads, AdamState& state,
               const TrainConfig& config) {
    if (grads.blocks.size() != params.blocks.size()) {
        throw ShapeError("adam_step: gradient store shape mismatch");
    }
    state.timestep += 1;
    const double b1 = config.adam.beta1;
    const double b2 = config.adam.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.timestep));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.timestep));

    for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
        auto& values = params.blocks[bi].values;
        const auto& g = grads.blocks[bi];
        if (g.size() != values.size()) {
            throw ShapeError("adam_step: block size mismatch at " +
                             params.blocks[bi].name);
        }
        auto& m = state.m[bi];
        auto& v = state.v[bi];
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(g[i])) {
                throw NumericError("non-finite gradient in block " +
                                   params.blocks[bi].name);
            }
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            const double update =
                config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam.epsilon);
            values[i] = static_cast<float>(static_cast<double>(values[i]) - update);
        }
    }
}

std::string TrainingHistory::to_csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "epoch,train_acc,train_loss,val_acc,val_loss\n";
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        out << (e + 1) << ',' << epochs[e].train_accuracy << ','
            << epochs[e].train_loss << ',' << epochs[e].val_accuracy << ','
            << epochs[e].val_loss << '\n';
    }
    return out.str();
}

TrainingHistory TrainingHistory::from_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line.rfind("epoch,train_acc,train_loss,val_acc,val_loss", 0) != 0) {
        throw FormatError("history CSV missing header");
    }
    TrainingHistory h;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        EpochStats s;
        int epoch = 0;
        char c1, c2, c3, c4;
        std::istringstream row(line);
        if (!(row >> epoch >> c1 >> s.train_accuracy >> c2 >> s.train_loss >>
              c3 >> s.val_accuracy >> c4 >> s.val_loss)) {
            throw FormatError("bad history row: " + line);
        }
        h.epochs.push_back(s);
    }
    return h;
}

LabeledSet load_labeled_set(const Manifest& m, Split split, int target_h,
                            int target_w) {
    LabeledSet set;
    set.class_names = m.classes;
    for (const auto& rec : m.records) {
        if (rec.split != split) continue;
        try {
            set.images.push_back(load_image(rec.path, target_h, target_w));
        } catch (const std::exception& e) {
            throw IoError("cannot load sample " + rec.path + ": " + e.what());
        }
        set.labels.push_back(m.class_index(rec.label));
    }
    return set;
}

namespace {

void check_training_inputs(const ReferenceCnn& model, const LabeledSet& train_set,
                           const LabeledSet& val_set, const TrainConfig& config) {
    config.validate();
    if (train_set.size() == 0) throw ConfigError("training set is empty");
    if (train_set.images.size() != train_set.labels.size() ||
        val_set.images.size() != val_set.labels.size()) {
        throw ShapeError("labeled set: image/label count mismatch");
    }
    const int classes = model.arch().num_classes();
    for (int label : train_set.labels) {
        if (label < 0 || label >= classes)
            throw ConfigError("training label out of range");
    }
    for (int label : val_set.labels) {
        if (label < 0 || label >= classes)
            throw ConfigError("validation label out of range");
    }
}

double accuracy_of(const std::vector<std::vector<double>>& probs,
                   const std::vector<int>& labels) {
    const std::vector<int> pred = argmax_rows(probs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (pred[i] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// Frozen-conv path: the conv stack never changes, so GAP features are
// computed once and the loop trains only the dense head. Identical math to
// the full path, minus the dead conv work.
TrainingHistory train_frozen(ReferenceCnn& model, const LabeledSet& train_set,
                             const LabeledSet& val_set,
                             const TrainConfig& config) {
    std::vector<std::vector<double>> train_feats(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        train_feats[i] = model.gap_features(train_set.images[i]);
    }
    std::vector<std::vector<double>> val_feats(val_set.size());
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        val_feats[i] = model.gap_features(val_set.images[i]);
    }

    const std::size_t head_w = model.params().blocks.size() - 2;
    AdamState state = AdamState::zeros_like(model.params());
    TrainingHistory history;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        double acc_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(
                order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<std::vector<double>> feats;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                feats.push_back(train_feats[order[i]]);
                labels.push_back(train_set.labels[order[i]]);
            }
            std::vector<std::vector<double>> probs;
            for (const auto& f : feats) probs.push_back(model.head_forward(f));
            loss_sum += cross_entropy(probs, labels) * feats.size();
            acc_sum += accuracy_of(probs, labels) * feats.size();

            GradStore grads;
            grads.blocks.resize(model.params().blocks.size());
            for (std::size_t bi = 0; bi < grads.blocks.size(); ++bi) {
                grads.blocks[bi].assign(model.params().blocks[bi].size(), 0.0);
            }
            model.head_gradients(feats, labels, grads.blocks[head_w],
                                 grads.blocks[head_w + 1]);
            adam_step(model.params(), grads, state, config);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        stats.train_accuracy = acc_sum / static_cast<double>(train_set.size());
        if (val_set.size() > 0) {
            std::vector<std::vector<double>> vprobs;
            for (const auto& f : val_feats) vprobs.push_back(model.head_forward(f));
            stats.val_loss = cross_entropy(vprobs, val_set.labels);
            stats.val_accuracy = accuracy_of(vprobs, val_set.labels);
        }
        history.epochs.push_back(stats);
    }
    return history;
}

}  // namespace

TrainingHistory train(ReferenceCnn& model, const LabeledSet& train_set,
                      const LabeledSet& val_set, const TrainConfig& config) {
    check_training_inputs(model, train_set, val_set, config);
    if (config.freeze_conv) {
        return train_frozen(model, train_set, val_set, config);
    }

    AdamState state = AdamState::zeros_like(model.params());
    TrainingHistory history;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        double acc_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<ImageTensor> batch;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(train_set.images[order[i]]);
                labels.push_back(train_set.labels[order[i]]);
            }
            const auto probs = model.forward(batch);
            loss_sum += cross_entropy(probs, labels) * batch.size();
            acc_sum += accuracy_of(probs, labels) * batch.size();

            const GradStore grads = model.gradients(batch, labels, false);
            adam_step(model.params(), grads, state, config);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        stats.train_accuracy = acc_sum / static_cast<double>(train_set.size());
        if (val_set.size() > 0) {
            const auto [vacc, vloss] = evaluate_set(model, val_set);
            stats.val_accuracy = vacc;
            stats.val_loss = vloss;
        }
        history.epochs.push_back(stats);
    }
    return history;
}

TrainingHistory retrain_head(ReferenceCnn& model, const LabeledSet& train_set,
                             const LabeledSet& val_set,
                             const TrainConfig& config) {
    model.reinitialize_head(config.seed);
    TrainConfig frozen = config;
    frozen.freeze_conv = true;
    return train(model, train_set, val_set, frozen);
}

std::pair<double, double> evaluate_set(const ReferenceCnn& model,
                                       const LabeledSet& set) {
    if (set.size() == 0) throw ConfigError("cannot evaluate an empty set");
    const auto probs = model.forward(set.images);
    return {accuracy_of(probs, set.labels), cross_entropy(probs, set.labels)};
}

TrainingHistory average_histories(const std::vector<TrainingHistory>& runs) {
    if (runs.empty()) throw std::invalid_argument("no histories to average");
    const std::size_t epochs = runs.front().epochs.size();
    for (const auto& run : runs) {
        if (run.epochs.size() != epochs) {
            throw std::invalid_argument("history epoch counts differ");
        }
    }
    TrainingHistory avg;
    avg.epochs.resize(epochs);
    const double inv = 1.0 / static_cast<double>(runs.size());
    for (std::size_t e = 0; e < epochs; ++e) {
        for (const auto& run : runs) {
            avg.epochs[e].train_accuracy += run.epochs[e].train_accuracy * inv;
            avg.epochs[e].train_loss += run.epochs[e].train_loss * inv;
            avg.epochs[e].val_accuracy += run.epochs[e].val_accuracy * inv;
            avg.epochs[e].val_loss += run.epochs[e].val_loss * inv;
        }
    }
    return avg;
}

AveragedRuns average_runs(const std::vector<TrainingHistory>& histories,
                          const std::vector<MetricsReport>& reports) {
    if (histories.size() != reports.size()) {
        throw std::invalid_argument("history/report run counts differ");
    }
    return {average_histories(histories), average_reports(reports)};
}

MetricsReport average_reports(const std::vector<MetricsReport>& runs) {
    if (runs.empty()) throw std::invalid_argument("no reports to average");
    MetricsReport avg = runs.front();
    for (const auto& run : runs) {
        if (run.class_names != avg.class_names || run.support != avg.support) {
            throw std::invalid_argument(
                "reports to average must share classes and support");
        }
    }
    avg.accuracy = avg.precision = avg.recall = avg.f1 = 0.0;
    avg.sensitivity = avg.specificity = 0.0;
    std::fill(avg.per_class_precision.begin(), avg.per_class_precision.end(), 0.0);
    std::fill(avg.per_class_recall.begin(), avg.per_class_recall.end(), 0.0);
    std::fill(avg.per_class_f1.begin(), avg.per_class_f1.end(), 0.0);
    const double inv = 1.0 / static_cast<double>(runs.size());
    for (const auto& run : runs) {
        avg.accuracy += run.accuracy * inv;
        avg.precision += run.precision * inv;
        avg.recall += run.recall * inv;
        avg.f1 += run.f1 * inv;
        avg.sensitivity += run.sensitivity * inv;
        avg.specificity += run.specificity * inv;
        for (std::size_t c = 0; c < avg.per_class_precision.size(); ++c) {
            avg.per_class_precision[c] += run.per_class_precision[c] * inv;
            avg.per_class_recall[c] += run.per_class_recall[c] * inv;
            avg.per_class_f1[c] += run.per_class_f1[c] * inv;
        }
    }
    return avg;
}

}  // namespace lesionkit
