#include "oct/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "oct/error.hpp"
#include "oct/noise.hpp"
#include "oct/seed.hpp"

namespace oct {
namespace {

namespace fs = std::filesystem;

enum Stream : std::uint64_t {
    detector_noise = 20,
    detector_augment = 21,
    processor_noise = 22,
    validation_noise = 23,
    shuffle_stream = 24,
    init_stream = 25,
};

std::vector<AlignedVector<float>> snapshot(const ParamStore<float>& params) {
    std::vector<AlignedVector<float>> out;
    for (const auto& p : params) out.push_back(p.value);
    return out;
}

void restore(ParamStore<float>& params, const std::vector<AlignedVector<float>>& values) {
    std::size_t i = 0;
    for (auto& p : params) p.value = values[i++];
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, int epoch, const char* role) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, role, static_cast<std::uint64_t>(epoch), shuffle_stream));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

[[noreturn]] void diverged(const TrainOptions& options, const std::string& role, int epoch, int batch, double lr,
                           const std::string& detail) {
    const std::string msg = role + " training diverged at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch) + " (lr " + std::to_string(lr) + "): " + detail;
    if (!options.output_dir.empty()) {
        fs::create_directories(options.output_dir);
        std::ofstream dump(options.output_dir / "divergence.txt");
        dump << msg << '\n';
    }
    throw TrainingError(msg);
}

void check_dataset(const Dataset& data, const char* what) {
    if (data.empty()) throw ArgumentError(std::string(what) + " dataset is empty");
    for (const Sample& s : data)
        if (!s.mask.binary()) throw ArgumentError("mask of " + s.id + " is not binary");
}

Checkpoint checkpoint_meta(const UNet<float>& model, const char* role, int epoch, const AppConfig& config) {
    Checkpoint meta;
    meta.architecture = model.config();
    meta.role = role;
    meta.epoch = epoch;
    meta.global_seed = config.seed;
    meta.config_snapshot = config_snapshot(config);
    return meta;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// One detector epoch over `train`; returns the mean training BCE.
double detector_epoch(UNet<float>& detector, const Dataset& train, const AppConfig& config, Adam& adam, int epoch,
                      const TrainOptions& options, std::ofstream* log) {
    const TrainConfig& tc = config.detector;
    const auto order = shuffled(train.size(), config.seed, epoch, "detector");
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
        const std::size_t n = end - start;
        std::vector<ImagePair> inputs(n);
        parallel_for(n, config.workers, [&](std::size_t k) {
            const Sample& s = train[order[start + k]];
            const auto ep = static_cast<std::uint64_t>(epoch);
            const Image field = sample_noise(s.clean.height(), s.clean.width(), config.noise,
                                             derive_seed(config.seed, s.id, ep, detector_noise));
            ImagePair pair{s.multiframe, s.mask, add_noise(s.multiframe, field)};
            inputs[k] = augment(pair, config.augment, derive_seed(config.seed, s.id, ep, detector_augment));
        });
        detector.params().zero_grad();
        double batch_loss = 0.0;
        for (const ImagePair& pair : inputs) {
            Graph<float> g;
            const auto x = g.input(to_tensor<float>(pair.noisy->image()));
            const auto out = detector.forward_train(g, x);
            Tensor<float> grad;
            batch_loss += bce_with_logits(g.value(out.logits), to_tensor<float>(pair.mask.values()), &grad);
            g.backward(out.logits, std::move(grad));
        }
        batch_loss /= static_cast<double>(n);
        if (!std::isfinite(batch_loss))
            diverged(options, "detector", epoch, batches, adam.learning_rate(), "loss is " + fmt(batch_loss));
        detector.params().scale_grad(1.0f / static_cast<float>(n));
        adam.step(detector.params());
        if (log) *log << epoch << ',' << batches << ',' << fmt(batch_loss) << '\n';
        total += batch_loss;
        ++batches;
    }
    return batches ? total / batches : 0.0;
}

BScan validation_input(const Sample& s, const AppConfig& config) {
    const Image field = sample_noise(s.clean.height(), s.clean.width(), config.noise,
                                     derive_seed(config.seed, s.id, 0, validation_noise));
    return add_noise(s.multiframe, field);
}

std::pair<double, double> detector_validation(const UNet<float>& detector, const Dataset& validation,
                                              const AppConfig& config) {
    std::vector<double> loss(validation.size()), d(validation.size());
    parallel_for(validation.size(), config.workers, [&](std::size_t i) {
        const Sample& s = validation[i];
        const BScan input = validation_input(s, config);
        Graph<float> g;
        const auto out = detector.forward(g, g.input(to_tensor<float>(input.image())));
        loss[i] = bce_with_logits(g.value(out.logits), to_tensor<float>(s.mask.values()));
        d[i] = dice(ShadowMask::binarize(to_image(g.value(out.output))), s.mask);
    });
    const double n = static_cast<double>(validation.size());
    return {std::accumulate(loss.begin(), loss.end(), 0.0) / n, std::accumulate(d.begin(), d.end(), 0.0) / n};
}

}  // namespace

double dice(const ShadowMask& prediction, const ShadowMask& truth) {
    if (!prediction.values().same_shape(truth.values())) throw ArgumentError("dice: mask shapes differ");
    auto p = prediction.values().pixels();
    auto t = truth.values().pixels();
    double inter = 0.0, sp = 0.0, st = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool a = p[i] >= 0.5f;
        const bool b = t[i] >= 0.5f;
        inter += a && b;
        sp += a;
        st += b;
    }
    if (sp + st == 0.0) return 1.0;
    return 2.0 * inter / (sp + st);
}

ShadowMask predict_mask(const UNet<float>& detector, const BScan& image) {
    return ShadowMask::binarize(to_image(detector.predict(to_tensor<float>(image.image()))));
}

double bce_with_logits(const Tensor<float>& logits, const Tensor<float>& target, Tensor<float>* grad) {
    if (!logits.same_shape(target)) throw ArgumentError("bce: logits and target shapes differ");
    const double n = static_cast<double>(logits.data.size());
    if (grad) *grad = Tensor<float>(logits.channels, logits.height, logits.width);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        const double z = logits.data[i];
        const double t = target.data[i];
        total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
        if (grad) grad->data[i] = static_cast<float>((1.0 / (1.0 + std::exp(-z)) - t) / n);
    }
    return total / n;
}

UNet<float> make_detector(const AppConfig& config) {
    return UNet<float>(UNetConfig::with_base(config.detector.base_channels, config.detector.depth,
                                             FinalActivation::sigmoid),
                       derive_seed(config.seed, "detector", 0, init_stream));
}

UNet<float> make_processor(const AppConfig& config) {
    return UNet<float>(UNetConfig::with_base(config.processor.base_channels, config.processor.depth,
                                             FinalActivation::minmax_scale),
                       derive_seed(config.seed, "processor", 0, init_stream));
}

std::vector<FeatureExtractor<float>> make_extractors(const AppConfig& config) {
    std::vector<FeatureExtractor<float>> out;
    for (const auto& name : kPerceptualNetworks) {
        auto spec = FeatureExtractorSpec::named(name, config.extractor_source, config.extractor_weights_dir);
        spec.seed = derive_seed(config.seed, name, 0, init_stream);
        out.emplace_back(spec);
    }
    return out;
}

TrainResult train_detector(const Dataset& train, const Dataset& validation, const AppConfig& config,
                           const TrainOptions& options) {
    check_dataset(train, "detector training");
    const Dataset& val = validation.empty() ? train : validation;
    const TrainConfig& tc = config.detector;
    tc.validate();
    TrainResult result(make_detector(config));
    UNet<float>& detector = result.model;
    Adam adam(tc.learning_rate);
    std::ofstream log;
    if (!options.output_dir.empty()) {
        fs::create_directories(options.output_dir);
        log.open(options.output_dir / "losses.csv");
        log << "epoch,batch,bce\n";
    }
    auto best = snapshot(detector.params());
    int since_best = 0;
    for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = tc.learning_rate_at(epoch);
        adam.set_learning_rate(rec.learning_rate);
        rec.train_loss = detector_epoch(detector, train, config, adam, epoch, options, log.is_open() ? &log : nullptr);
        std::tie(rec.validation_loss, rec.validation_dice) = detector_validation(detector, val, config);
        if (!std::isfinite(rec.validation_loss))
            diverged(options, "detector", epoch, -1, rec.learning_rate, "validation loss is not finite");
        result.history.push_back(rec);
        if (log.is_open()) log.flush();
        if (options.on_epoch) options.on_epoch(rec);
        if (rec.validation_loss < result.best_validation_loss) {
            result.best_validation_loss = rec.validation_loss;
            result.best_epoch = epoch;
            best = snapshot(detector.params());
            since_best = 0;
            if (!options.output_dir.empty())
                save_checkpoint(options.output_dir, checkpoint_meta(detector, "detector", epoch, config), detector, &adam);
        } else if (++since_best >= tc.patience) {
            result.stopped_early = true;
            break;
        }
    }
    restore(detector.params(), best);
    if (!options.output_dir.empty())
        save_checkpoint(options.output_dir, checkpoint_meta(detector, "detector", result.best_epoch, config), detector,
                        &adam);
    return result;
}

ProcessorSession::ProcessorSession(const AppConfig& config, UNet<float>& processor, const UNet<float>& detector,
                                   const std::vector<FeatureExtractor<float>>& extractors)
    : config_(config), processor_(processor), detector_(detector), extractors_(extractors) {
    if (extractors_.empty()) throw ConfigError("processor training needs at least one perceptual network");
}

BScan ProcessorSession::noisy_input(const Sample& sample, int epoch, bool validation) const {
    if (validation) return validation_input(sample, config_);
    const Image field = sample_noise(sample.clean.height(), sample.clean.width(), config_.noise,
                                     derive_seed(config_.seed, sample.id, static_cast<std::uint64_t>(epoch),
                                                 processor_noise));
    return add_noise(sample.multiframe, field);
}

LossTerms ProcessorSession::sample_terms(const Sample& sample, const BScan& noisy, const LossWeights& weights,
                                         bool train) {
    if (weights.content.size() != extractors_.size() || weights.style.size() != extractors_.size())
        throw ConfigError("loss weights do not match the number of perceptual networks");
    Graph<float> g;
    const auto x = g.input(to_tensor<float>(noisy.image()));
    const auto out = train ? processor_.forward_train(g, x) : processor_.forward(g, x);

    const Tensor<float> keep = shadow_keep_map<float>(sample.mask);
    const auto d_masked = g.multiply(out.output, keep);
    Tensor<float> c_masked = to_tensor<float>(sample.multiframe.image());
    for (std::size_t i = 0; i < c_masked.data.size(); ++i) c_masked.data[i] *= keep.data[i];

    LossTerms terms;
    std::vector<std::pair<Graph<float>::NodeId, Tensor<float>>> seeds;
    for (std::size_t j = 0; j < extractors_.size(); ++j) {
        const auto taps = extractors_[j].features(g, d_masked);
        std::vector<Tensor<float>> fd;
        for (auto id : taps) fd.push_back(g.value(id));
        const std::vector<Tensor<float>> fc = extractors_[j].extract(c_masked);
        std::vector<Tensor<float>> gc, gs;
        terms.content.push_back(content_loss<float>(fd, fc, train ? &gc : nullptr));
        terms.style.push_back(style_loss<float>(fd, fc, train ? &gs : nullptr));
        if (!train) continue;
        const auto wc = static_cast<float>(weights.content[j]);
        const auto ks = static_cast<float>(weights.style[j]);
        for (std::size_t i = 0; i < taps.size(); ++i) {
            Tensor<float> seed = std::move(gc[i]);
            for (std::size_t e = 0; e < seed.data.size(); ++e) seed.data[e] = wc * seed.data[e] + ks * gs[i].data[e];
            seeds.emplace_back(taps[i], std::move(seed));
        }
    }

    const auto det = detector_.forward(g, out.output);
    const Tensor<float> gt = to_tensor<float>(sample.mask.values());
    if (sample.mask.sum() > 0.0) {
        Tensor<float> gsh;
        terms.shadow = shadow_loss<float>(g.value(det.output), gt, train ? &gsh : nullptr);
        if (train) seeds.emplace_back(det.output, std::move(gsh));
    }
    terms.total = total_loss(terms.content, terms.style, terms.shadow, weights);
    if (train) g.backward(seeds);
    return terms;
}

namespace {

LossTerms mean_terms(const std::vector<LossTerms>& all) {
    LossTerms m;
    if (all.empty()) return m;
    m.content.assign(all[0].content.size(), 0.0);
    m.style.assign(all[0].style.size(), 0.0);
    for (const auto& t : all) {
        for (std::size_t j = 0; j < t.content.size(); ++j) {
            m.content[j] += t.content[j];
            m.style[j] += t.style[j];
        }
        m.shadow += t.shadow;
        m.total += t.total;
    }
    const double n = static_cast<double>(all.size());
    for (auto& v : m.content) v /= n;
    for (auto& v : m.style) v /= n;
    m.shadow /= n;
    m.total /= n;
    return m;
}

bool finite_terms(const LossTerms& t) {
    if (!std::isfinite(t.total) || !std::isfinite(t.shadow)) return false;
    for (double v : t.content)
        if (!std::isfinite(v)) return false;
    for (double v : t.style)
        if (!std::isfinite(v)) return false;
    return true;
}

void log_terms(std::ofstream& log, int epoch, int batch, const LossTerms& t) {
    log << epoch << ',' << batch;
    for (double v : t.content) log << ',' << fmt(v);
    for (double v : t.style) log << ',' << fmt(v);
    log << ',' << fmt(t.shadow) << ',' << fmt(t.total) << '\n';
}

}  // namespace

LossTerms ProcessorSession::train_batch(std::span<const Sample* const> batch, int epoch, const LossWeights& weights,
                                        Adam& adam) {
    std::vector<BScan> inputs(batch.size());
    parallel_for(batch.size(), config_.workers,
                 [&](std::size_t k) { inputs[k] = noisy_input(*batch[k], epoch, false); });
    processor_.params().zero_grad();
    std::vector<LossTerms> all;
    for (std::size_t k = 0; k < batch.size(); ++k) all.push_back(sample_terms(*batch[k], inputs[k], weights, true));
    processor_.params().scale_grad(1.0f / static_cast<float>(batch.size()));
    const LossTerms mean = mean_terms(all);
    if (finite_terms(mean)) adam.step(processor_.params());
    return mean;
}

LossTerms ProcessorSession::evaluate(const Dataset& data, const LossWeights& weights) {
    std::vector<LossTerms> all(data.size());
    parallel_for(data.size(), config_.workers, [&](std::size_t i) {
        all[i] = sample_terms(data[i], noisy_input(data[i], 0, true), weights, false);
    });
    return mean_terms(all);
}

TrainResult train_processor(const Dataset& train, const Dataset& validation, UNet<float>& detector,
                            const std::vector<FeatureExtractor<float>>& extractors, const LossWeights& weights,
                            const AppConfig& config, const TrainOptions& options) {
    check_dataset(train, "processor training");
    const Dataset& val = validation.empty() ? train : validation;
    const TrainConfig& tc = config.processor;
    tc.validate();
    weights.validate();
    TrainResult result(make_processor(config));
    UNet<float>& processor = result.model;
    ProcessorSession session(config, processor, detector, extractors);
    Adam adam(tc.learning_rate);
    Adam detector_adam(config.detector.learning_rate);
    std::ofstream log;
    if (!options.output_dir.empty()) {
        fs::create_directories(options.output_dir);
        log.open(options.output_dir / "losses.csv");
        log << "epoch,batch";
        for (std::size_t j = 1; j <= extractors.size(); ++j) log << ",content_" << j;
        for (std::size_t j = 1; j <= extractors.size(); ++j) log << ",style_" << j;
        log << ",shadow,total\n";
    }
    auto best = snapshot(processor.params());
    int since_best = 0;
    for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = tc.learning_rate_at(epoch);
        adam.set_learning_rate(rec.learning_rate);
        const auto order = shuffled(train.size(), config.seed, epoch, "processor");
        double total = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
            std::vector<const Sample*> batch;
            for (std::size_t k = start; k < end; ++k) batch.push_back(&train[order[k]]);
            const LossTerms t = session.train_batch(batch, epoch, weights, adam);
            if (!finite_terms(t))
                diverged(options, "processor", epoch, batches, rec.learning_rate, "loss is " + fmt(t.total));
            if (log.is_open()) log_terms(log, epoch, batches, t);
            total += t.total;
            ++batches;
        }
        rec.train_loss = batches ? total / batches : 0.0;
        if (config.alternating && (epoch + 1) % config.detector_epoch_every == 0) {
            detector_adam.set_learning_rate(config.detector.learning_rate_at(epoch / config.detector_epoch_every));
            detector_epoch(detector, train, config, detector_adam, epoch, options, nullptr);
        }
        rec.validation_loss = session.evaluate(val, weights).total;
        if (!std::isfinite(rec.validation_loss))
            diverged(options, "processor", epoch, -1, rec.learning_rate, "validation loss is not finite");
        result.history.push_back(rec);
        if (log.is_open()) log.flush();
        if (options.on_epoch) options.on_epoch(rec);
        if (rec.validation_loss < result.best_validation_loss) {
            result.best_validation_loss = rec.validation_loss;
            result.best_epoch = epoch;
            best = snapshot(processor.params());
            since_best = 0;
            if (!options.output_dir.empty())
                save_checkpoint(options.output_dir, checkpoint_meta(processor, "processor", epoch, config), processor, &adam);
        } else if (++since_best >= tc.patience) {
            result.stopped_early = true;
            break;
        }
    }
    restore(processor.params(), best);
    if (!options.output_dir.empty())
        save_checkpoint(options.output_dir, checkpoint_meta(processor, "processor", result.best_epoch, config),
                        processor, &adam);
    return result;
}

CalibrationResult calibrate_processor_weights(const Dataset& train, const UNet<float>& detector,
                                              const std::vector<FeatureExtractor<float>>& extractors,
                                              const AppConfig& config, const CalibrationOptions& options) {
    check_dataset(train, "calibration");
    UNet<float> processor = make_processor(config);
    ProcessorSession session(config, processor, detector, extractors);
    Adam adam(config.processor.learning_rate);
    int epoch = 0;
    std::size_t cursor = 0;
    auto order = shuffled(train.size(), config.seed, epoch, "calibration");
    CalibrationRunner runner = [&](const LossWeights& weights, int batches) {
        std::vector<LossTerms> out;
        for (int b = 0; b < batches; ++b) {
            std::vector<const Sample*> batch;
            while (static_cast<int>(batch.size()) < config.processor.batch_size) {
                if (cursor == order.size()) {
                    order = shuffled(train.size(), config.seed, ++epoch, "calibration");
                    cursor = 0;
                }
                batch.push_back(&train[order[cursor++]]);
            }
            const LossTerms t = session.train_batch(batch, epoch, weights, adam);
            if (!finite_terms(t)) throw TrainingError("calibration run diverged");
            out.push_back(t);
        }
        return out;
    };
    return calibrate_weights(runner, static_cast<int>(extractors.size()), options);
}

void save_weights(const LossWeights& weights, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << nlohmann::json{{"content", weights.content}, {"style", weights.style}}.dump(2) << '\n';
}

LossWeights load_weights(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open loss-weight file " + path.string());
    LossWeights w;
    try {
        const auto j = nlohmann::json::parse(in);
        w.content = j.at("content").get<std::vector<double>>();
        w.style = j.at("style").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad loss-weight file " + path.string() + ": " + e.what());
    }
    w.validate();
    return w;
}

}  // namespace oct
