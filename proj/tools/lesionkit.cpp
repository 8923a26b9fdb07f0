// lesionkit — skin-lesion image classification toolkit.
//
// Subcommands: split, augment, train, gridsearch, evaluate, explain, cam,
// segment, report. Exit codes: 0 success, 1 internal failure, 2 invalid
// configuration, 3 missing prerequisite artifact.

#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "lesionkit/cam.hpp"
#include "lesionkit/errors.hpp"
#include "lesionkit/image_io.hpp"
#include "lesionkit/metrics.hpp"
#include "lesionkit/parallel.hpp"
#include "lesionkit/plot.hpp"
#include "lesionkit/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lesionkit;
using namespace lesionkit::cli;

namespace {

void require_file(const fs::path& path, const std::string& what) {
    if (path.empty() || !fs::exists(path)) {
        throw MissingArtifactError("missing " + what + ": " + path.string());
    }
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create output directory " + dir.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw ConfigError("empty integer list: " + csv);
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ConfigError("empty number list: " + csv);
    return out;
}

fs::path manifest_path(const ExperimentConfig& cfg) {
    return cfg.manifest.empty() ? cfg.out_dir / "manifest.csv" : cfg.manifest;
}

CnnArchitecture architecture_for(const ExperimentConfig& cfg,
                                 const std::vector<std::string>& classes) {
    CnnArchitecture arch;
    arch.input_height = cfg.model.input_size;
    arch.input_width = cfg.model.input_size;
    arch.input_channels = 3;
    arch.conv_channels = cfg.model.conv_channels;
    arch.class_names = classes;
    return arch;
}

int positive_index(const MetricsOptions& opts,
                   const std::vector<std::string>& classes) {
    if (opts.positive_class.empty()) return 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == opts.positive_class) return static_cast<int>(i);
    }
    throw ConfigError("positive class `" + opts.positive_class +
                      "` is not a manifest class");
}

json metrics_to_json(const MetricsReport& rep, const ConfusionMatrix& cm,
                     const ConfidenceInterval& wilson,
                     const ConfidenceInterval& wald, const std::string& split) {
    json per_class = json::object();
    for (std::size_t c = 0; c < rep.class_names.size(); ++c) {
        per_class[rep.class_names[c]] = {
            {"precision", rep.per_class_precision[c]},
            {"recall", rep.per_class_recall[c]},
            {"f1", rep.per_class_f1[c]},
            {"support", rep.support[c]}};
    }
    return json{
        {"split", split},
        {"samples", cm.total()},
        {"correct", wilson.successes},
        {"accuracy", rep.accuracy},
        {"precision", rep.precision},
        {"recall", rep.recall},
        {"f1", rep.f1},
        {"sensitivity", rep.sensitivity},
        {"specificity", rep.specificity},
        {"averaging",
         rep.averaging == Averaging::weighted ? "weighted" : "positive"},
        {"positive_class", cm.class_names[cm.positive_class]},
        {"per_class", per_class},
        {"intervals",
         {{"alpha", wilson.alpha},
          {"wilson", {{"lower", wilson.lower}, {"upper", wilson.upper}}},
          {"wald", {{"lower", wald.lower}, {"upper", wald.upper}}}}}};
}

struct Evaluation {
    MetricsReport report;
    ConfusionMatrix cm;
    ConfidenceInterval wilson;
    ConfidenceInterval wald;
    std::vector<int> predictions;
    std::vector<std::vector<double>> probabilities;
};

Evaluation evaluate_model(const ReferenceCnn& model, const LabeledSet& set,
                          const ExperimentConfig& cfg) {
    Evaluation ev;
    ev.probabilities = model.forward(set.images);
    ev.predictions = argmax_rows(ev.probabilities);
    ev.cm = confusion(ev.predictions, set.labels, set.class_names,
                      positive_index(cfg.metrics, set.class_names));
    ev.report = metrics_report(ev.cm,
                               averaging_from_string(cfg.metrics.averaging));
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
        if (ev.predictions[i] == set.labels[i]) ++correct;
    }
    ev.wilson = wilson_interval(correct, set.size(), cfg.metrics.alpha);
    ev.wald = wald_interval(correct, set.size(), cfg.metrics.alpha);
    return ev;
}

void write_evaluation(const Evaluation& ev, const Manifest& m, Split split,
                      const ExperimentConfig& cfg) {
    const std::string split_name = to_string(split);
    write_text(cfg.out_dir / "metrics.json",
               metrics_to_json(ev.report, ev.cm, ev.wilson, ev.wald, split_name)
                       .dump(2) +
                   "\n");
    write_text(cfg.out_dir / "metrics.csv", ev.report.to_csv());
    write_text(cfg.out_dir / "confusion.csv", ev.cm.to_csv());
    write_text(cfg.out_dir / "intervals.csv",
               interval_table_csv({ev.wilson, ev.wald},
                                  {split_name, split_name}));

    std::ostringstream pred;
    pred << "path,label,predicted";
    for (const auto& name : ev.cm.class_names) pred << ",prob_" << name;
    pred << '\n';
    pred.precision(10);
    std::size_t row = 0;
    for (const auto& rec : m.records) {
        if (rec.split != split) continue;
        pred << rec.path << ',' << rec.label << ','
             << ev.cm.class_names[ev.predictions[row]];
        for (double p : ev.probabilities[row]) pred << ',' << p;
        pred << '\n';
        ++row;
    }
    write_text(cfg.out_dir / "predictions.csv", pred.str());
}

// ---------------------------------------------------------------- commands

int cmd_split(const ExperimentConfig& cfg) {
    if (cfg.data_root.empty() || !fs::is_directory(cfg.data_root)) {
        throw ConfigError("data root is not a directory: " +
                          cfg.data_root.string());
    }
    if (!(cfg.split.test_fraction > 0.0 && cfg.split.test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie in (0,1)");
    }
    ensure_out_dir(cfg.out_dir);
    const Manifest m =
        stratified_split(ingest_directory(cfg.data_root), cfg.split);
    write_manifest_csv(m, manifest_path(cfg));
    const SplitStats st = stats(m);
    write_text(cfg.out_dir / "split_stats.csv", st.to_csv());
    std::cout << st.to_csv();
    std::cout << "manifest: " << manifest_path(cfg).string() << '\n';
    return 0;
}

int cmd_augment(const ExperimentConfig& cfg, const fs::path& image) {
    cfg.augment.policy.validate();
    if (cfg.augment.count < 1) throw ConfigError("augment count must be ≥ 1");
    ensure_out_dir(cfg.out_dir);

    std::vector<std::pair<fs::path, std::string>> sources;  // path, stem
    if (!image.empty()) {
        require_file(image, "image");
        sources.emplace_back(image, image.stem().string());
    } else {
        require_file(manifest_path(cfg), "manifest");
        const Manifest m = read_manifest_csv(manifest_path(cfg));
        for (const auto& rec : m.records) {
            if (rec.split == Split::test) continue;  // augment training data
            sources.emplace_back(rec.path,
                                 rec.label + "_" + fs::path(rec.path).stem().string());
        }
        if (sources.empty()) throw ConfigError("manifest has no training records");
    }

    const int count = cfg.augment.count;
    parallel_chunks(sources.size(), cfg.threads, [&](std::size_t begin,
                                                     std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            const ImageTensor img = decode_image(sources[s].first);
            for (int i = 0; i < count; ++i) {
                const ImageTensor aug = augment_indexed(
                    img, cfg.augment.policy,
                    static_cast<std::uint64_t>(s) * count + i);
                save_png(aug, cfg.out_dir / (sources[s].second + "_aug" +
                                             std::to_string(i) + ".png"));
            }
        }
    });
    std::cout << "augmented " << sources.size() << " image(s) x " << count
              << " variants into " << cfg.out_dir.string() << '\n';
    return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
    cfg.train.config.validate();
    if (cfg.train.runs < 1) throw ConfigError("run count must be ≥ 1");
    require_file(manifest_path(cfg), "manifest");
    ensure_out_dir(cfg.out_dir);

    const Manifest m = read_manifest_csv(manifest_path(cfg));
    const int size = cfg.model.input_size;
    const LabeledSet train_set = load_labeled_set(m, Split::train, size, size);
    const LabeledSet val_set = load_labeled_set(m, Split::test, size, size);
    if (train_set.size() == 0) {
        throw ConfigError("manifest has no train records; run `split` first");
    }
    if (val_set.size() == 0) {
        throw ConfigError("manifest has no test records; run `split` first");
    }
    const CnnArchitecture arch = architecture_for(cfg, m.classes);

    std::vector<TrainingHistory> histories;
    std::vector<MetricsReport> reports;
    std::size_t best_run = 0;
    double best_val = -1.0;
    std::vector<ReferenceCnn> models;

    for (int run = 0; run < cfg.train.runs; ++run) {
        TrainConfig config = cfg.train.config;
        if (cfg.train.runs > 1) {
            config.seed = mix_seed(cfg.train.config.seed,
                                   static_cast<std::uint64_t>(run));
        }
        ReferenceCnn model = ReferenceCnn::initialized(arch, config.seed);
        const TrainingHistory history = train(model, train_set, val_set, config);
        const Evaluation ev = evaluate_model(model, val_set, cfg);

        if (history.epochs.back().val_accuracy > best_val) {
            best_val = history.epochs.back().val_accuracy;
            best_run = run;
        }
        if (cfg.train.runs > 1) {
            const std::string tag = "_run" + std::to_string(run);
            save_model(model, cfg.out_dir / ("model" + tag + ".bin"));
            write_text(cfg.out_dir / ("history" + tag + ".csv"),
                       history.to_csv());
            write_text(
                cfg.out_dir / ("metrics" + tag + ".json"),
                metrics_to_json(ev.report, ev.cm, ev.wilson, ev.wald, "test")
                        .dump(2) +
                    "\n");
        }
        histories.push_back(history);
        reports.push_back(ev.report);
        models.push_back(std::move(model));

        std::cout << "run " << run << ": train_acc "
                  << history.epochs.back().train_accuracy << ", val_acc "
                  << history.epochs.back().val_accuracy << '\n';
    }

    save_model(models[best_run], cfg.out_dir / "model.bin");
    if (cfg.train.runs == 1) {
        write_text(cfg.out_dir / "history.csv", histories.front().to_csv());
    } else {
        const AveragedRuns mean = average_runs(histories, reports);
        write_text(cfg.out_dir / "history.csv", mean.history.to_csv());
        const MetricsReport& mean_report = mean.report;
        json j{{"runs", cfg.train.runs},
               {"best_run", best_run},
               {"mean_val_accuracy", mean_report.accuracy},
               {"mean_metrics",
                {{"accuracy", mean_report.accuracy},
                 {"precision", mean_report.precision},
                 {"recall", mean_report.recall},
                 {"f1", mean_report.f1},
                 {"sensitivity", mean_report.sensitivity},
                 {"specificity", mean_report.specificity}}}};
        write_text(cfg.out_dir / "metrics_mean.json", j.dump(2) + "\n");
    }
    std::cout << "model: " << (cfg.out_dir / "model.bin").string() << '\n';
    return 0;
}

int cmd_gridsearch(const ExperimentConfig& cfg) {
    cfg.grid.validate();
    require_file(manifest_path(cfg), "manifest");
    ensure_out_dir(cfg.out_dir);

    const Manifest m = read_manifest_csv(manifest_path(cfg));
    const int size = cfg.model.input_size;
    const LabeledSet train_set = load_labeled_set(m, Split::train, size, size);
    const LabeledSet val_set = load_labeled_set(m, Split::test, size, size);
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw ConfigError("manifest needs train and test records");
    }

    const GridSearchResult result =
        grid_search_train(cfg.grid, architecture_for(cfg, m.classes), train_set,
                          val_set, cfg.train.config);
    write_text(cfg.out_dir / "grid_results.csv", result.to_csv());
    const json best{{"batch_size", result.best.batch_size},
                    {"epochs", result.best.epochs},
                    {"learning_rate", result.best.learning_rate},
                    {"val_accuracy",
                     result.cells[result.best_cell].mean_val_accuracy}};
    write_text(cfg.out_dir / "best_config.json", best.dump(2) + "\n");
    std::cout << "evaluated " << result.cells.size() << " cells; best: batch "
              << result.best.batch_size << ", epochs " << result.best.epochs
              << ", lr " << result.best.learning_rate << '\n';
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const fs::path& model_path,
                 const std::string& split_name) {
    require_file(model_path, "model file");
    require_file(manifest_path(cfg), "manifest");
    ensure_out_dir(cfg.out_dir);
    const Split split = split_from_string(split_name);

    const ReferenceCnn model = load_model(model_path);
    const Manifest m = read_manifest_csv(manifest_path(cfg));
    if (m.classes != model.arch().class_names) {
        throw ConfigError("manifest classes do not match the model's classes");
    }
    const LabeledSet set = load_labeled_set(
        m, split, model.arch().input_height, model.arch().input_width);
    if (set.size() == 0) {
        throw ConfigError("manifest has no `" + split_name + "` records");
    }

    const Evaluation ev = evaluate_model(model, set, cfg);
    write_evaluation(ev, m, split, cfg);
    std::cout << ev.report.to_csv();
    return 0;
}

int cmd_explain(const ExperimentConfig& cfg, const fs::path& model_path,
                const fs::path& image_path) {
    cfg.lime.validate();
    require_file(model_path, "model file");
    require_file(image_path, "image");
    ensure_out_dir(cfg.out_dir);

    const ReferenceCnn model = load_model(model_path);
    const ImageTensor img =
        load_image(image_path, model.arch().input_height,
                   model.arch().input_width);
    const CnnClassifier classifier(model);

    const SuperpixelMap map =
        cfg.lime.grid_segments
            ? grid_superpixels(img.height, img.width, cfg.lime.target_segments)
            : slic_superpixels(img, cfg.lime.target_segments);
    if (cfg.lime.num_samples < map.count) {
        std::cerr << "warning: " << cfg.lime.num_samples << " samples for "
                  << map.count << " segments; the surrogate fit leans on the "
                  << "ridge penalty\n";
    }
    const LimeExplanation exp =
        lime_explain(classifier, img, map, cfg.lime, cfg.threads);

    write_text(cfg.out_dir / "lime.json", exp.to_json());
    save_png(exp.mask_image, cfg.out_dir / "lime_mask.png");
    save_png(draw_segment_boundaries(img, map, 1.0f, 1.0f, 0.0f),
             cfg.out_dir / "lime_boundaries.png");
    std::cout << "explained class " << exp.target_class_name << "; top segments:";
    for (int s : exp.top_segments) std::cout << ' ' << s;
    std::cout << '\n';
    return 0;
}

int cmd_cam(const ExperimentConfig& cfg, const fs::path& model_path,
            const fs::path& image_path) {
    if (!(cfg.cam.opacity >= 0.0 && cfg.cam.opacity <= 1.0)) {
        throw ConfigError("cam opacity must lie in [0,1]");
    }
    require_file(model_path, "model file");
    require_file(image_path, "image");
    ensure_out_dir(cfg.out_dir);

    const ReferenceCnn model = load_model(model_path);
    const ImageTensor img =
        load_image(image_path, model.arch().input_height,
                   model.arch().input_width);

    int class_index = 0;
    if (cfg.cam.target_class.empty()) {
        const auto probs = model.forward({img});
        class_index = argmax_rows(probs)[0];
    } else {
        class_index = -1;
        const auto& names = model.arch().class_names;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == cfg.cam.target_class)
                class_index = static_cast<int>(i);
        }
        if (class_index < 0) {
            throw ConfigError("class `" + cfg.cam.target_class +
                              "` is not one of the model's classes");
        }
    }

    const CamHeatmap heat = cam(model, img, class_index);
    ImageTensor heat_img(heat.height, heat.width, 1);
    heat_img.data = heat.values;
    save_png(heat_img, cfg.out_dir / "cam_heatmap.png");
    save_png(overlay(img, heat, cfg.cam.opacity),
             cfg.out_dir / "cam_overlay.png");
    std::cout << "class activation map for `"
              << model.arch().class_names[class_index] << "`\n";
    return 0;
}

int cmd_segment(const ExperimentConfig& cfg, const fs::path& image_path) {
    cfg.segment.validate();
    require_file(image_path, "image");
    ensure_out_dir(cfg.out_dir);

    const ImageTensor img = decode_image(image_path);
    const SegmentationResult res = threshold_segment(img, cfg.segment);

    save_png(img, cfg.out_dir / "segment_original.png");
    save_png(res.mask, cfg.out_dir / "segment_mask.png");
    save_png(res.roi ? draw_box(img, *res.roi, 1.0f, 0.0f, 0.0f) : img,
             cfg.out_dir / "segment_roi.png");
    if (res.roi) {
        save_png(res.segmented, cfg.out_dir / "segment_segmented.png");
    }

    std::size_t mask_pixels = 0;
    for (float v : res.mask.data) mask_pixels += v > 0.0f ? 1 : 0;
    json j{{"lo", cfg.segment.lo},
           {"hi", cfg.segment.hi},
           {"mask_pixels", mask_pixels},
           {"roi", nullptr}};
    if (res.roi) {
        j["roi"] = {{"row0", res.roi->row0},
                    {"col0", res.roi->col0},
                    {"row1", res.roi->row1},
                    {"col1", res.roi->col1}};
    }
    write_text(cfg.out_dir / "segment.json", j.dump(2) + "\n");
    std::cout << "mask pixels: " << mask_pixels << '\n';
    return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
    for (const char* needed :
         {"metrics.json", "confusion.csv", "intervals.csv", "history.csv"}) {
        require_file(cfg.out_dir / needed, needed);
    }

    const json metrics = json::parse(read_text(cfg.out_dir / "metrics.json"));
    const TrainingHistory history = TrainingHistory::from_csv_text(
        read_text(cfg.out_dir / "history.csv"));

    json history_json = json::array();
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        history_json.push_back({{"epoch", e + 1},
                                {"train_acc", history.epochs[e].train_accuracy},
                                {"train_loss", history.epochs[e].train_loss},
                                {"val_acc", history.epochs[e].val_accuracy},
                                {"val_loss", history.epochs[e].val_loss}});
    }

    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ",
                  std::gmtime(&now));

    json report{{"generated_at", stamp},
                {"metrics", metrics},
                {"confusion_csv", read_text(cfg.out_dir / "confusion.csv")},
                {"intervals_csv", read_text(cfg.out_dir / "intervals.csv")},
                {"history", history_json}};
    write_text(cfg.out_dir / "report.json", report.dump(2) + "\n");

    std::ostringstream csv;
    csv.precision(10);
    csv << "key,value\n";
    for (const char* key : {"accuracy", "precision", "recall", "f1",
                            "sensitivity", "specificity"}) {
        csv << key << ',' << metrics.at(key).get<double>() << '\n';
    }
    csv << "wilson_lower," << metrics.at("intervals").at("wilson").at("lower").get<double>()
        << "\nwilson_upper," << metrics.at("intervals").at("wilson").at("upper").get<double>()
        << "\nwald_lower," << metrics.at("intervals").at("wald").at("lower").get<double>()
        << "\nwald_upper," << metrics.at("intervals").at("wald").at("upper").get<double>()
        << '\n';
    write_text(cfg.out_dir / "report.csv", csv.str());

    std::vector<double> ta, va, tl, vl;
    for (const auto& e : history.epochs) {
        ta.push_back(e.train_accuracy);
        va.push_back(e.val_accuracy);
        tl.push_back(e.train_loss);
        vl.push_back(e.val_loss);
    }
    save_png(render_line_chart({{ta, 0.1f, 0.3f, 0.9f}, {va, 0.9f, 0.2f, 0.1f}}),
             cfg.out_dir / "accuracy.png");
    save_png(render_line_chart({{tl, 0.1f, 0.3f, 0.9f}, {vl, 0.9f, 0.2f, 0.1f}}),
             cfg.out_dir / "loss.png");

    std::cout << "report bundle in " << cfg.out_dir.string() << '\n';
    return 0;
}

int dispatch(int argc, char** argv) {
    // --config is honored before CLI11 runs so that explicit flags override
    // values taken from the file.
    ExperimentConfig cfg;
    for (int i = 1; i + 1 < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config") cfg = ExperimentConfig::from_file(argv[i + 1]);
    }

    CLI::App app{"skin-lesion classification, explanation and reporting toolkit"};
    app.require_subcommand(1);
    std::string config_dummy;
    app.add_option("--config", config_dummy, "JSON experiment config")
        ->expected(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_dummy, "JSON experiment config");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--threads", cfg.threads, "worker threads (1 = serial)");
    };

    // split
    auto* split_cmd = app.add_subcommand("split", "ingest a class-per-directory "
                                                  "tree and write a stratified "
                                                  "train/test manifest");
    add_common(split_cmd);
    split_cmd->add_option("--data", cfg.data_root, "dataset root directory");
    split_cmd->add_option("--manifest", cfg.manifest, "manifest output path");
    split_cmd->add_option("--test-fraction", cfg.split.test_fraction,
                          "held-out fraction");
    split_cmd->add_option("--seed", cfg.split.seed, "shuffle seed");

    // augment
    fs::path aug_image;
    auto* aug_cmd = app.add_subcommand(
        "augment", "write randomly augmented copies of training images");
    add_common(aug_cmd);
    aug_cmd->add_option("--image", aug_image, "augment one image file");
    aug_cmd->add_option("--manifest", cfg.manifest, "augment manifest records");
    aug_cmd->add_option("--count", cfg.augment.count, "variants per image");
    aug_cmd->add_option("--seed", cfg.augment.policy.seed, "sampling seed");
    aug_cmd->add_option("--flip-prob", cfg.augment.policy.flip_horizontal_prob,
                        "horizontal flip probability");
    aug_cmd->add_option("--rotation-max", cfg.augment.policy.rotation_max_deg,
                        "max rotation (degrees)");
    aug_cmd->add_option("--shear-max", cfg.augment.policy.shear_max,
                        "max shear (≤ 0.2)");
    aug_cmd->add_option("--translate", cfg.augment.policy.translate_fraction,
                        "translation fraction");

    // train
    auto* train_cmd =
        app.add_subcommand("train", "train the reference CNN on a manifest");
    add_common(train_cmd);
    train_cmd->add_option("--manifest", cfg.manifest, "manifest CSV");
    train_cmd->add_option("--batch-size", cfg.train.config.batch_size, "");
    train_cmd->add_option("--epochs", cfg.train.config.epochs, "");
    train_cmd->add_option("--learning-rate", cfg.train.config.learning_rate, "");
    train_cmd->add_option("--seed", cfg.train.config.seed, "");
    train_cmd->add_flag("--freeze-conv", cfg.train.config.freeze_conv,
                        "train only the dense head");
    train_cmd->add_option("--runs", cfg.train.runs,
                          "repeated runs averaged into history.csv");
    train_cmd->add_option("--input-size", cfg.model.input_size, "square input");
    std::string conv_channels_csv;
    train_cmd->add_option("--conv-channels", conv_channels_csv,
                          "comma-separated conv widths, e.g. 16,32,64");

    // gridsearch
    auto* grid_cmd = app.add_subcommand(
        "gridsearch", "train one model per (batch, epochs, lr) cell");
    add_common(grid_cmd);
    grid_cmd->add_option("--manifest", cfg.manifest, "manifest CSV");
    std::string grid_batches, grid_epochs, grid_lrs;
    grid_cmd->add_option("--batch-sizes", grid_batches, "e.g. 5,10,20,40");
    grid_cmd->add_option("--epoch-counts", grid_epochs, "e.g. 20,30,40,50");
    grid_cmd->add_option("--learning-rates", grid_lrs, "e.g. 0.001,0.01,0.1");
    grid_cmd->add_option("--runs-per-cell", cfg.grid.runs_per_cell, "");
    grid_cmd->add_option("--seed", cfg.train.config.seed, "");
    grid_cmd->add_option("--input-size", cfg.model.input_size, "");
    std::string grid_conv_csv;
    grid_cmd->add_option("--conv-channels", grid_conv_csv, "");

    // evaluate
    fs::path model_path;
    std::string eval_split = "test";
    auto* eval_cmd = app.add_subcommand(
        "evaluate", "confusion matrix, metrics and intervals for a model");
    add_common(eval_cmd);
    eval_cmd->add_option("--model", model_path, "model file");
    eval_cmd->add_option("--manifest", cfg.manifest, "manifest CSV");
    eval_cmd->add_option("--split", eval_split, "train|test");
    eval_cmd->add_option("--positive-class", cfg.metrics.positive_class, "");
    eval_cmd->add_option("--averaging", cfg.metrics.averaging,
                         "weighted|positive");
    eval_cmd->add_option("--alpha", cfg.metrics.alpha, "interval significance");

    // explain
    fs::path explain_image;
    std::string off_color;
    auto* explain_cmd = app.add_subcommand(
        "explain", "local surrogate explanation for one prediction");
    add_common(explain_cmd);
    explain_cmd->add_option("--model", model_path, "model file");
    explain_cmd->add_option("--image", explain_image, "image to explain");
    explain_cmd->add_option("--num-samples", cfg.lime.num_samples, "");
    explain_cmd->add_option("--kernel-width", cfg.lime.kernel_width, "");
    explain_cmd->add_option("--top-k", cfg.lime.top_k, "");
    explain_cmd->add_option("--ridge-lambda", cfg.lime.ridge_lambda, "");
    explain_cmd->add_option("--segments", cfg.lime.target_segments, "");
    explain_cmd->add_option("--off-color", off_color, "black|mean");
    explain_cmd->add_flag("--grid-segments", cfg.lime.grid_segments,
                          "rectangular tiling instead of k-means");
    explain_cmd->add_flag("--rank-by-magnitude", cfg.lime.rank_by_magnitude,
                          "rank segments by |coefficient|");
    explain_cmd->add_option("--seed", cfg.lime.seed, "");

    // cam
    fs::path cam_image;
    auto* cam_cmd = app.add_subcommand(
        "cam", "class activation heatmap from the GAP head");
    add_common(cam_cmd);
    cam_cmd->add_option("--model", model_path, "model file");
    cam_cmd->add_option("--image", cam_image, "input image");
    cam_cmd->add_option("--class", cfg.cam.target_class,
                        "class name (default: predicted)");
    cam_cmd->add_option("--opacity", cfg.cam.opacity, "overlay opacity");

    // segment
    fs::path segment_image;
    std::string channel_name;
    auto* segment_cmd = app.add_subcommand(
        "segment", "threshold segmentation: mask, roi and cropped output");
    add_common(segment_cmd);
    segment_cmd->add_option("--image", segment_image, "input image");
    segment_cmd->add_option("--lo", cfg.segment.lo, "lower intensity bound");
    segment_cmd->add_option("--hi", cfg.segment.hi, "upper intensity bound");
    segment_cmd->add_option("--channel", channel_name, "red|green|blue|gray");

    // report
    auto* report_cmd = app.add_subcommand(
        "report", "collate metrics, intervals, confusion and curves");
    add_common(report_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 2;
    }

    if (!off_color.empty()) cfg.lime.off_color = off_color_from_string(off_color);
    if (!channel_name.empty())
        cfg.segment.channel = channel_from_string(channel_name);
    if (!conv_channels_csv.empty())
        cfg.model.conv_channels = parse_int_list(conv_channels_csv);
    if (!grid_conv_csv.empty())
        cfg.model.conv_channels = parse_int_list(grid_conv_csv);
    if (!grid_batches.empty()) cfg.grid.batch_sizes = parse_int_list(grid_batches);
    if (!grid_epochs.empty()) cfg.grid.epoch_counts = parse_int_list(grid_epochs);
    if (!grid_lrs.empty()) cfg.grid.learning_rates = parse_double_list(grid_lrs);
    if (cfg.threads < 1) throw ConfigError("thread count must be ≥ 1");

    if (split_cmd->parsed()) return cmd_split(cfg);
    if (aug_cmd->parsed()) return cmd_augment(cfg, aug_image);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (grid_cmd->parsed()) return cmd_gridsearch(cfg);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, model_path, eval_split);
    if (explain_cmd->parsed()) return cmd_explain(cfg, model_path, explain_image);
    if (cam_cmd->parsed()) return cmd_cam(cfg, model_path, cam_image);
    if (segment_cmd->parsed()) return cmd_segment(cfg, segment_image);
    if (report_cmd->parsed()) return cmd_report(cfg);
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
