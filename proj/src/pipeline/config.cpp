#include "oct/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "oct/error.hpp"

namespace oct {
namespace {

namespace pt = boost::property_tree;

template <class V>
V parse_value(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    V v{};
    in >> v;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) out.push_back(parse_value<double>(key, item));
    return out;
}

std::string join(const std::vector<double>& v) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
}

template <class V>
std::string str(const V& v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

void apply_train(TrainConfig& t, const std::string& key, const std::string& name, const std::string& v) {
    if (name == "optimizer") t.optimizer = v;
    else if (name == "learning_rate") t.learning_rate = parse_value<double>(key, v);
    else if (name == "batch_size") t.batch_size = parse_value<int>(key, v);
    else if (name == "lr_halving_epochs") t.lr_halving_epochs = parse_value<int>(key, v);
    else if (name == "max_epochs") t.max_epochs = parse_value<int>(key, v);
    else if (name == "patience") t.patience = parse_value<int>(key, v);
    else if (name == "base_channels") t.base_channels = parse_value<int>(key, v);
    else if (name == "depth") t.depth = parse_value<int>(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

void snapshot_train(std::map<std::string, std::string>& m, const std::string& s, const TrainConfig& t) {
    m[s + ".optimizer"] = t.optimizer;
    m[s + ".learning_rate"] = str(t.learning_rate);
    m[s + ".batch_size"] = str(t.batch_size);
    m[s + ".lr_halving_epochs"] = str(t.lr_halving_epochs);
    m[s + ".max_epochs"] = str(t.max_epochs);
    m[s + ".patience"] = str(t.patience);
    m[s + ".base_channels"] = str(t.base_channels);
    m[s + ".depth"] = str(t.depth);
}

void apply(AppConfig& c, const std::string& section, const std::string& name, const std::string& v) {
    const std::string key = section + "." + name;
    if (section == "run") {
        if (name == "seed") c.seed = parse_value<std::uint64_t>(key, v);
        else if (name == "workers") c.workers = parse_value<int>(key, v);
        else if (name == "output_dir") c.output_dir = v;
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "data") {
        if (name == "count") c.data.count = parse_value<int>(key, v);
        else if (name == "height") c.data.height = parse_value<int>(key, v);
        else if (name == "width") c.data.width = parse_value<int>(key, v);
        else if (name == "texture_amplitude") c.data.texture_amplitude = parse_value<double>(key, v);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "noise") {
        if (name == "amplitude_low") c.noise.amplitude_low = parse_value<double>(key, v);
        else if (name == "amplitude_high") c.noise.amplitude_high = parse_value<double>(key, v);
        else if (name == "gaussian_mu") c.noise.gaussian_mu = parse_value<double>(key, v);
        else if (name == "gaussian_sigma") c.noise.gaussian_sigma = parse_value<double>(key, v);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "augment") {
        if (name == "rotation_degrees") c.augment.rotation_degrees = parse_value<double>(key, v);
        else if (name == "translate_fraction") c.augment.translate_fraction = parse_value<double>(key, v);
        else if (name == "scale_fraction") c.augment.scale_fraction = parse_value<double>(key, v);
        else if (name == "hflip_probability") c.augment.hflip_probability = parse_value<double>(key, v);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "detector") {
        apply_train(c.detector, key, name, v);
    } else if (section == "processor") {
        if (name == "alternating") c.alternating = parse_bool(key, v);
        else if (name == "detector_epoch_every") c.detector_epoch_every = parse_value<int>(key, v);
        else apply_train(c.processor, key, name, v);
    } else if (section == "losses") {
        if (name == "content") c.weights.content = parse_list(key, v);
        else if (name == "style") c.weights.style = parse_list(key, v);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "extractors") {
        if (name == "weights_source") {
            try {
                c.extractor_source = weights_source_from_string(v);
            } catch (const Error& e) {
                throw ConfigError("config key '" + key + "': " + e.what());
            }
        } else if (name == "weights_dir") {
            c.extractor_weights_dir = v;
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    } else if (section == "metrics") {
        if (name == "tissue_rois") c.measure.tissue_rois = parse_value<int>(key, v);
        else if (name == "tissue_size") c.measure.tissue_size = parse_value<int>(key, v);
        else if (name == "ilc_rois") c.measure.ilc_rois = parse_value<int>(key, v);
        else if (name == "ilc_size") c.measure.ilc_size = parse_value<int>(key, v);
        else if (name == "background_rows") c.measure.background_rows = parse_value<int>(key, v);
        else if (name == "lpi_band") c.measure.lpi_band = parse_value<int>(key, v);
        else throw ConfigError("unknown config key '" + key + "'");
    } else {
        throw ConfigError("unknown config section '[" + section + "]'");
    }
}

AppConfig from_tree(const pt::ptree& tree) {
    AppConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config key '" + section + "' lies outside any section");
        for (const auto& [name, value] : body) apply(c, section, name, value.data());
    }
    c.measure.seed = c.seed;
    c.validate();
    return c;
}

}  // namespace

void TrainConfig::validate() const {
    if (optimizer != "adam") throw ConfigError("unsupported optimizer '" + optimizer + "' (only adam)");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (lr_halving_epochs < 1) throw ConfigError("lr_halving_epochs must be >= 1");
    if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
    if (depth < 1) throw ConfigError("depth must be >= 1");
}

double TrainConfig::learning_rate_at(int epoch) const {
    return learning_rate * std::ldexp(1.0, -(epoch / lr_halving_epochs));
}

void DataConfig::validate() const {
    if (count < 0) throw ConfigError("data.count must be >= 0");
    if (height < kMinScanSide || width < kMinScanSide)
        throw ConfigError("data height/width must be at least " + std::to_string(kMinScanSide));
    if (!(texture_amplitude >= 0.0)) throw ConfigError("data.texture_amplitude must be >= 0");
}

void AppConfig::validate() const {
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (detector_epoch_every < 1) throw ConfigError("processor.detector_epoch_every must be >= 1");
    data.validate();
    detector.validate();
    processor.validate();
    try {
        noise.validate();
        augment.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    weights.validate();
    if (weights.content.size() != kPerceptualNetworks.size())
        throw ConfigError("losses need one content/style weight per perceptual network (" +
                          std::to_string(kPerceptualNetworks.size()) + ")");
    if (measure.tissue_rois < 1 || measure.tissue_size < 1 || measure.ilc_rois < 1 || measure.ilc_size < 1 ||
        measure.background_rows < 1 || measure.lpi_band < 0)
        throw ConfigError("metrics ROI settings must be positive");
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

AppConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    return from_tree(tree);
}

std::map<std::string, std::string> config_snapshot(const AppConfig& c) {
    std::map<std::string, std::string> m;
    m["run.seed"] = str(c.seed);
    m["run.workers"] = str(c.workers);
    m["data.count"] = str(c.data.count);
    m["data.height"] = str(c.data.height);
    m["data.width"] = str(c.data.width);
    m["data.texture_amplitude"] = str(c.data.texture_amplitude);
    m["noise.amplitude_low"] = str(c.noise.amplitude_low);
    m["noise.amplitude_high"] = str(c.noise.amplitude_high);
    m["noise.gaussian_mu"] = str(c.noise.gaussian_mu);
    m["noise.gaussian_sigma"] = str(c.noise.gaussian_sigma);
    m["augment.rotation_degrees"] = str(c.augment.rotation_degrees);
    m["augment.translate_fraction"] = str(c.augment.translate_fraction);
    m["augment.scale_fraction"] = str(c.augment.scale_fraction);
    m["augment.hflip_probability"] = str(c.augment.hflip_probability);
    snapshot_train(m, "detector", c.detector);
    snapshot_train(m, "processor", c.processor);
    m["processor.alternating"] = c.alternating ? "true" : "false";
    m["processor.detector_epoch_every"] = str(c.detector_epoch_every);
    m["losses.content"] = join(c.weights.content);
    m["losses.style"] = join(c.weights.style);
    m["extractors.weights_source"] = to_string(c.extractor_source);
    m["extractors.weights_dir"] = c.extractor_weights_dir.string();
    return m;
}

std::filesystem::path resolve_output_root(const std::filesystem::path& explicit_dir) {
    if (!explicit_dir.empty()) return explicit_dir;
    if (const char* env = std::getenv("OCTRESTORE_OUTPUT_DIR"); env && *env) return env;
    return "octrestore_out";
}

}  // namespace oct
