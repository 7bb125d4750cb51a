// octrestore: phantom generation, two-phase training, inference and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "oct/checkpoint.hpp"
#include "oct/config.hpp"
#include "oct/dataset.hpp"
#include "oct/error.hpp"
#include "oct/evaluate.hpp"
#include "oct/io.hpp"
#include "oct/trainer.hpp"

namespace fs = std::filesystem;
using namespace oct;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string output_dir;
};

struct TrainFlags {
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<int> batch_size;
    std::optional<int> base_channels;
    std::optional<int> patience;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--epochs", f.epochs, "Maximum epochs");
    cmd->add_option("--lr", f.lr, "Initial learning rate");
    cmd->add_option("--batch-size", f.batch_size, "Batch size");
    cmd->add_option("--base-channels", f.base_channels, "UNet width at the first level");
    cmd->add_option("--patience", f.patience, "Early-stop patience in epochs");
}

void apply_train_flags(TrainConfig& t, const TrainFlags& f) {
    if (f.epochs) t.max_epochs = *f.epochs;
    if (f.lr) t.learning_rate = *f.lr;
    if (f.batch_size) t.batch_size = *f.batch_size;
    if (f.base_channels) t.base_channels = *f.base_channels;
    if (f.patience) t.patience = *f.patience;
}

AppConfig base_config(const Globals& g) {
    AppConfig c = g.config_path.empty() ? AppConfig{} : load_config(g.config_path);
    if (g.seed) c.seed = *g.seed;
    if (g.workers) c.workers = *g.workers;
    if (!g.output_dir.empty()) c.output_dir = g.output_dir;
    c.output_dir = resolve_output_root(c.output_dir);
    c.measure.seed = c.seed;
    return c;
}

fs::path or_default(const std::string& value, const fs::path& root, const char* name) {
    return value.empty() ? root / name : fs::path(value);
}

void print_epoch(const char* role, const EpochRecord& r) {
    std::fprintf(stderr, "[%s] epoch %d lr %.3g train %.6g val %.6g", role, r.epoch, r.learning_rate, r.train_loss,
                 r.validation_loss);
    if (!std::isnan(r.validation_dice)) std::fprintf(stderr, " dice %.4f", r.validation_dice);
    std::fprintf(stderr, "\n");
}

std::vector<BScan> load_inputs(const fs::path& input) {
    std::vector<BScan> out;
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file()) {
                const auto ext = e.path().extension();
                if (ext == ".png" || ext == ".tif" || ext == ".tiff") files.push_back(e.path());
            }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out.push_back(load_image(f, ImageKind::noisy));
    } else {
        out.push_back(load_image(input, ImageKind::noisy));
    }
    if (out.empty()) throw DataError("no input images in " + input.string());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OCT B-scan denoising and shadow removal"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Global seed");
    app.add_option("--workers", g.workers, "Worker threads (1 = deterministic)");
    app.add_option("--output-dir", g.output_dir, "Artifact root (default $OCTRESTORE_OUTPUT_DIR)");

    // generate
    auto* gen = app.add_subcommand("generate", "Write a phantom dataset");
    std::string gen_out, gen_size, gen_prefix = "phantom";
    std::optional<int> gen_count, gen_h, gen_w;
    std::optional<double> gen_amp;
    gen->add_option("--out", gen_out, "Dataset directory");
    gen->add_option("--count", gen_count, "Number of phantoms");
    gen->add_option("--size", gen_size, "Image size as HxW");
    gen->add_option("--height", gen_h);
    gen->add_option("--width", gen_w);
    gen->add_option("--texture-amplitude", gen_amp);
    gen->add_option("--prefix", gen_prefix, "Id prefix");

    // train-detector
    auto* td = app.add_subcommand("train-detector", "Train the shadow detector");
    std::string td_data, td_out;
    TrainFlags td_flags;
    td->add_option("--data", td_data, "Dataset directory")->required();
    td->add_option("--out", td_out, "Checkpoint directory");
    add_train_flags(td, td_flags);

    // train-processor
    auto* tp = app.add_subcommand("train-processor", "Train the image processor against a frozen detector");
    std::string tp_data, tp_out, tp_detector, tp_weights, tp_source, tp_weights_dir;
    TrainFlags tp_flags;
    bool tp_alternating = false;
    tp->add_option("--data", tp_data, "Dataset directory")->required();
    tp->add_option("--detector", tp_detector, "Detector checkpoint");
    tp->add_option("--out", tp_out, "Checkpoint directory");
    tp->add_option("--weights", tp_weights, "Loss-weight JSON from calibrate-weights");
    tp->add_option("--extractor-source", tp_source, "imagenet_pretrained or frozen_random");
    tp->add_option("--extractor-weights-dir", tp_weights_dir);
    tp->add_flag("--alternating", tp_alternating, "Interleave detector epochs");
    add_train_flags(tp, tp_flags);

    // calibrate-weights
    auto* cw = app.add_subcommand("calibrate-weights", "Balance content and style weights against the shadow loss");
    std::string cw_data, cw_detector, cw_out;
    int cw_window = 50;
    TrainFlags cw_flags;
    cw->add_option("--data", cw_data, "Dataset directory")->required();
    cw->add_option("--detector", cw_detector, "Detector checkpoint");
    cw->add_option("--out", cw_out, "Weight JSON path");
    cw->add_option("--window", cw_window, "Running-mean window in batches");
    add_train_flags(cw, cw_flags);

    // infer
    auto* inf = app.add_subcommand("infer", "Restore single-frame B-scans");
    std::string inf_processor, inf_input, inf_out;
    inf->add_option("--processor", inf_processor, "Processor checkpoint");
    inf->add_option("--input", inf_input, "Image file or directory")->required();
    inf->add_option("--out", inf_out, "Output directory");

    // evaluate / report
    std::string ev_data, ev_processor, ev_detector, ev_out, ev_split = "all";
    int rp_images = 4;
    auto* ev = app.add_subcommand("evaluate", "Metric report on a dataset");
    auto* rp = app.add_subcommand("report", "Metric report plus comparison grids and LPI plots");
    for (auto* cmd : {ev, rp}) {
        cmd->add_option("--data", ev_data, "Dataset directory")->required();
        cmd->add_option("--processor", ev_processor, "Processor checkpoint");
        cmd->add_option("--detector", ev_detector, "Detector checkpoint (adds shadow_loss rows)");
        cmd->add_option("--out", ev_out, "Report directory");
        cmd->add_option("--split", ev_split, "all, train, validation or test")
            ->check(CLI::IsMember({"all", "train", "validation", "test"}));
    }
    rp->add_option("--max-images", rp_images, "Images to render");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        AppConfig config = base_config(g);
        const fs::path root = config.output_dir;

        if (gen->parsed()) {
            if (gen_count) config.data.count = *gen_count;
            if (!gen_size.empty()) {
                int h = 0, w = 0;
                char tail = 0;
                if (std::sscanf(gen_size.c_str(), "%dx%d%c", &h, &w, &tail) != 2)
                    throw ConfigError("--size expects HxW, got '" + gen_size + "'");
                config.data.height = h;
                config.data.width = w;
            }
            if (gen_h) config.data.height = *gen_h;
            if (gen_w) config.data.width = *gen_w;
            if (gen_amp) config.data.texture_amplitude = *gen_amp;
            config.validate();
            const fs::path out = or_default(gen_out, root, "data");
            save_dataset(make_dataset(config, config.seed, gen_prefix), out);
            std::printf("wrote %d phantoms to %s\n", config.data.count, out.string().c_str());
        } else if (td->parsed()) {
            apply_train_flags(config.detector, td_flags);
            config.validate();
            const auto split = split_dataset(load_dataset(td_data));
            TrainOptions opts{or_default(td_out, root, "detector"),
                              [](const EpochRecord& r) { print_epoch("detector", r); }};
            const TrainResult r = train_detector(split.train, split.validation, config, opts);
            std::printf("best epoch %d, validation loss %.6g, dice %.4f\n", r.best_epoch, r.best_validation_loss,
                        r.best_epoch >= 0 ? r.history[r.best_epoch].validation_dice : 0.0);
        } else if (tp->parsed()) {
            apply_train_flags(config.processor, tp_flags);
            if (tp_alternating) config.alternating = true;
            if (!tp_source.empty()) config.extractor_source = weights_source_from_string(tp_source);
            if (!tp_weights_dir.empty()) config.extractor_weights_dir = tp_weights_dir;
            if (!tp_weights.empty()) config.weights = load_weights(tp_weights);
            config.validate();
            const auto split = split_dataset(load_dataset(tp_data));
            LoadedCheckpoint det = load_checkpoint(or_default(tp_detector, root, "detector"));
            const auto extractors = make_extractors(config);
            const fs::path out = or_default(tp_out, root, "processor");
            TrainOptions opts{out, [](const EpochRecord& r) { print_epoch("processor", r); }};
            const TrainResult r =
                train_processor(split.train, split.validation, det.model, extractors, config.weights, config, opts);
            if (config.alternating)
                save_checkpoint(out / "detector", {det.model.config(), "detector", r.best_epoch, config.seed,
                                                   config_snapshot(config)},
                                det.model);
            std::printf("best epoch %d, validation loss %.6g\n", r.best_epoch, r.best_validation_loss);
        } else if (cw->parsed()) {
            apply_train_flags(config.processor, cw_flags);
            config.validate();
            const auto split = split_dataset(load_dataset(cw_data));
            LoadedCheckpoint det = load_checkpoint(or_default(cw_detector, root, "detector"));
            CalibrationOptions copts;
            copts.window = cw_window;
            const CalibrationResult r =
                calibrate_processor_weights(split.train, det.model, make_extractors(config), config, copts);
            for (const auto& line : r.log) std::fprintf(stderr, "%s\n", line.c_str());
            const fs::path out = or_default(cw_out, root, "weights.json");
            save_weights(r.weights, out);
            std::printf("wrote %s\n", out.string().c_str());
        } else if (inf->parsed()) {
            const LoadedCheckpoint proc = load_checkpoint(or_default(inf_processor, root, "processor"));
            const auto inputs = load_inputs(inf_input);
            const fs::path out = or_default(inf_out, root, "infer");
            fs::create_directories(out);
            double total = 0.0;
            for (const auto& r : infer_batch(inputs, proc.model, config.workers)) {
                save_image(r.output, out / (r.output.id() + ".png"), BitDepth::u16);
                total += r.latency_ms;
            }
            std::printf("restored %zu images, mean latency %.2f ms\n", inputs.size(), total / inputs.size());
        } else if (ev->parsed() || rp->parsed()) {
            config.validate();
            Dataset data = load_dataset(ev_data);
            if (ev_split != "all") {
                const auto split = split_dataset(data);
                data = ev_split == "train" ? split.train : ev_split == "validation" ? split.validation : split.test;
            }
            const LoadedCheckpoint proc = load_checkpoint(or_default(ev_processor, root, "processor"));
            std::optional<LoadedCheckpoint> det;
            if (!ev_detector.empty()) det.emplace(load_checkpoint(ev_detector));
            EvaluateOptions eo{config.measure, config.workers};
            const Evaluation e = evaluate(data, proc.model, det ? &det->model : nullptr, eo);
            const fs::path out = or_default(ev_out, root, "report");
            fs::create_directories(out);
            e.report.write((out / "report.csv").string(), (out / "summary.json").string());
            if (rp->parsed()) render_report(data, e, out / "figures", rp_images);
            std::printf("evaluated %zu images, mean latency %.2f ms, report in %s\n", data.size(), e.mean_latency_ms,
                        out.string().c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "training error: %s\n", e.what());
        return kExitDivergence;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitData;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return 0;
}
