#include "oct/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "oct/error.hpp"
#include "oct/seed.hpp"

namespace oct {
namespace {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw FormatError("report: bad number '" + s + "'");
    }
    if (used != s.size()) throw FormatError("report: bad number '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

struct Stats {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
};

Stats stats_of(const std::vector<double>& v) {
    Stats s;
    s.n = v.size();
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double sq = 0.0;
        for (double x : v) sq += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(sq / static_cast<double>(v.size() - 1));
    }
    return s;
}

auto row_key(const MetricRow& r) { return std::tie(r.image_id, r.kind, r.metric, r.layer); }

}  // namespace

bool is_noise_metric(const std::string& metric) {
    return metric == metric_names::agm || metric == metric_names::paper_psnr || metric == metric_names::psnr ||
           metric == metric_names::cnr || metric == metric_names::ssim;
}

void MetricReport::merge(const MetricReport& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    rois.insert(rois.end(), other.rois.begin(), other.rois.end());
    profiles.insert(profiles.end(), other.profiles.begin(), other.profiles.end());
    notes.insert(notes.end(), other.notes.begin(), other.notes.end());
    if (normalization_reference.empty()) normalization_reference = other.normalization_reference;
}

void MetricReport::sort() {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MetricRow& a, const MetricRow& b) { return row_key(a) < row_key(b); });
    std::stable_sort(rois.begin(), rois.end(), [](const RoiRecord& a, const RoiRecord& b) {
        return std::tie(a.image_id, a.purpose, a.layer) < std::tie(b.image_id, b.purpose, b.layer);
    });
    std::stable_sort(profiles.begin(), profiles.end(), [](const ProfileRecord& a, const ProfileRecord& b) {
        return std::tie(a.image_id, a.kind, a.layer) < std::tie(b.image_id, b.kind, b.layer);
    });
    std::sort(notes.begin(), notes.end());
    notes.erase(std::unique(notes.begin(), notes.end()), notes.end());
}

std::vector<const MetricRow*> MetricReport::find(const std::string& kind, const std::string& metric) const {
    std::vector<const MetricRow*> out;
    for (const auto& r : rows)
        if (r.kind == kind && r.metric == metric) out.push_back(&r);
    return out;
}

std::vector<MetricSummary> MetricReport::aggregate() const {
    std::map<std::tuple<std::string, std::string, int>, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::map<std::tuple<std::string, std::string, int>, std::size_t> counts;
    for (const auto& r : rows) {
        auto key = std::make_tuple(r.kind, r.metric, r.layer);
        auto& g = groups[key];
        ++counts[key];
        if (std::isfinite(r.value)) g.first.push_back(r.value);
        if (r.normalized && std::isfinite(*r.normalized)) g.second.push_back(*r.normalized);
    }
    std::vector<MetricSummary> out;
    for (const auto& [key, g] : groups) {
        MetricSummary s;
        std::tie(s.kind, s.metric, s.layer) = key;
        s.rows = counts[key];
        const Stats raw = stats_of(g.first);
        s.finite = raw.n;
        s.mean = raw.mean;
        s.stddev = raw.sd;
        const Stats norm = stats_of(g.second);
        s.normalized_rows = norm.n;
        s.normalized_mean = norm.mean;
        s.normalized_stddev = norm.sd;
        out.push_back(s);
    }
    return out;
}

std::optional<double> MetricReport::mean_of(const std::string& kind, const std::string& metric) const {
    std::vector<double> v;
    for (const auto& r : rows)
        if (r.kind == kind && r.metric == metric && std::isfinite(r.value)) v.push_back(r.value);
    if (v.empty()) return std::nullopt;
    return stats_of(v).mean;
}

std::string MetricReport::to_csv() const {
    std::ostringstream out;
    out << "image_id,kind,metric,layer,value,normalized\n";
    for (const auto& r : rows) {
        if (r.image_id.find(',') != std::string::npos || r.kind.find(',') != std::string::npos)
            throw ArgumentError("report: image ids and kinds may not contain commas");
        out << r.image_id << ',' << r.kind << ',' << r.metric << ',' << r.layer << ',' << format_double(r.value)
            << ',' << (r.normalized ? format_double(*r.normalized) : std::string()) << '\n';
    }
    return out.str();
}

MetricReport MetricReport::from_csv(const std::string& text) {
    MetricReport report;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split(line, ',').size() != 6 || line.rfind("image_id,", 0) != 0)
        throw FormatError("report: missing CSV header");
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split(line, ',');
        if (f.size() != 6) throw FormatError("report: expected 6 fields in '" + line + "'");
        MetricRow r;
        r.image_id = f[0];
        r.kind = f[1];
        r.metric = f[2];
        try {
            r.layer = std::stoi(f[3]);
        } catch (const std::exception&) {
            throw FormatError("report: bad layer '" + f[3] + "'");
        }
        r.value = parse_double(f[4]);
        if (!f[5].empty()) r.normalized = parse_double(f[5]);
        report.rows.push_back(std::move(r));
    }
    return report;
}

nlohmann::json MetricReport::summary_json() const {
    nlohmann::json j;
    j["normalization_reference"] = normalization_reference;
    j["paper_psnr_definition"] = "-10 log10(sum (f0 - f)^2 / sum f0^2), normalized by reference signal energy";
    j["psnr_definition"] = "10 log10(1 / MSE), peak intensity 1";
    std::set<std::string> ids;
    for (const auto& r : rows) ids.insert(r.image_id);
    j["images"] = ids.size();
    auto& metrics = j["metrics"] = nlohmann::json::array();
    for (const auto& s : aggregate()) {
        nlohmann::json m;
        m["kind"] = s.kind;
        m["metric"] = s.metric;
        m["layer"] = s.layer;
        m["rows"] = s.rows;
        m["finite"] = s.finite;
        m["mean"] = s.mean;
        m["std"] = s.stddev;
        if (s.normalized_rows > 0) {
            m["normalized_rows"] = s.normalized_rows;
            m["normalized_mean"] = s.normalized_mean;
            m["normalized_std"] = s.normalized_stddev;
        }
        metrics.push_back(std::move(m));
    }
    auto& roi_list = j["rois"] = nlohmann::json::array();
    for (const auto& r : rois)
        roi_list.push_back({{"image_id", r.image_id},
                            {"purpose", r.purpose},
                            {"layer", r.layer},
                            {"label", to_string(r.roi.label)},
                            {"row", r.roi.row},
                            {"col", r.roi.col},
                            {"height", r.roi.height},
                            {"width", r.roi.width}});
    j["notes"] = notes;
    return j;
}

void MetricReport::write(const std::string& csv_path, const std::string& json_path) const {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path);
    csv << to_csv();
    std::ofstream js(json_path, std::ios::binary);
    if (!js) throw IoError("cannot write " + json_path);
    js << summary_json().dump(2) << '\n';
    if (!csv || !js) throw IoError("short write of the metric report");
}

MetricReport normalize_report(const MetricReport& report, const MetricReport& multiframe_report) {
    MetricReport out = report;
    if (report.empty()) return out;
    std::map<std::tuple<std::string, std::string, int>, double> ref;
    std::set<std::string> ref_ids;
    for (const auto& r : multiframe_report.rows) {
        ref[{r.image_id, r.metric, r.layer}] = r.value;
        ref_ids.insert(r.image_id);
        if (out.normalization_reference.empty()) out.normalization_reference = r.kind;
    }
    for (const auto& r : report.rows)
        if (!ref_ids.count(r.image_id))
            throw ArgumentError("normalize_report: no multi-frame rows for image '" + r.image_id + "'");
    for (auto& r : out.rows) {
        if (!is_noise_metric(r.metric)) continue;
        auto it = ref.find({r.image_id, r.metric, r.layer});
        if (it == ref.end()) {
            out.notes.push_back("no multi-frame counterpart for " + r.image_id + "/" + r.metric + "; left raw");
            continue;
        }
        if (!std::isfinite(it->second) || it->second == 0.0 || !std::isfinite(r.value)) {
            out.notes.push_back("multi-frame " + r.metric + " of " + r.image_id + " is " + format_double(it->second) +
                                "; " + r.kind + " value left raw");
            continue;
        }
        r.normalized = r.value / it->second;
    }
    return out;
}

ImageRois plan_rois(const PhantomSpec& spec, const ShadowMask& mask, const std::string& image_id,
                    const MeasureOptions& options) {
    const PixelSet shadow = PixelSet::from_mask(mask);
    ImageRois out;
    out.background = background_roi(spec.width, options.background_rows);
    if (!out.background.inside(spec.height, spec.width))
        throw ArgumentError("background strip does not fit the image");
    // layer 0 is the vitreous background above the retina
    for (int k = 1; k < spec.layer_count(); ++k) {
        const PixelSet region = layer_region(spec, k);
        const PixelSet free = region.minus(shadow);
        try {
            auto t = sample_rois(free, options.tissue_rois, options.tissue_size,
                                 derive_seed(options.seed, image_id, static_cast<std::uint64_t>(k), 1),
                                 RoiLabel::tissue);
            for (const Roi& roi : t)
                if (roi_intersects(roi, shadow)) throw DataError("tissue ROI intersects the shadow mask");
            out.tissue.emplace_back(k, std::move(t));
        } catch (const SamplingError& e) {
            out.notes.push_back(image_id + " layer " + std::to_string(k) + ": no CNR (" + e.what() + ")");
        }
        const PixelSet shadowed = region.intersect(shadow);
        if (shadowed.count() == 0) continue;
        try {
            ImageRois::IlcSet set;
            set.layer = k;
            set.shadow_free = sample_rois(free, options.ilc_rois, options.ilc_size,
                                          derive_seed(options.seed, image_id, static_cast<std::uint64_t>(k), 2),
                                          RoiLabel::shadow_free);
            set.shadowed = sample_rois(shadowed, options.ilc_rois, options.ilc_size,
                                       derive_seed(options.seed, image_id, static_cast<std::uint64_t>(k), 3),
                                       RoiLabel::shadowed);
            out.ilc.push_back(std::move(set));
        } catch (const SamplingError& e) {
            out.notes.push_back(image_id + " layer " + std::to_string(k) + ": no ILC (" + e.what() + ")");
        }
    }
    return out;
}

void record_rois(MetricReport& report, const std::string& image_id, const ImageRois& rois) {
    report.rois.push_back({image_id, "cnr", -1, rois.background});
    for (const auto& [layer, list] : rois.tissue)
        for (const Roi& r : list) report.rois.push_back({image_id, "cnr", layer, r});
    for (const auto& set : rois.ilc) {
        for (const Roi& r : set.shadow_free) report.rois.push_back({image_id, "ilc", set.layer, r});
        for (const Roi& r : set.shadowed) report.rois.push_back({image_id, "ilc", set.layer, r});
    }
    report.notes.insert(report.notes.end(), rois.notes.begin(), rois.notes.end());
}

void measure_image(MetricReport& report, const Image& image, const std::string& image_id, const std::string& kind,
                   const Image& reference, const PhantomSpec& spec, const ImageRois& rois,
                   const MeasureOptions& options) {
    auto add = [&](const char* metric, int layer, double value) {
        report.add(MetricRow{image_id, kind, metric, layer, value, std::nullopt});
    };
    add(metric_names::agm, -1, agm(image));
    add(metric_names::paper_psnr, -1, paper_psnr(image, reference));
    add(metric_names::psnr, -1, standard_psnr(image, reference));
    add(metric_names::ssim, -1, ssim(image, reference));
    for (const auto& [layer, list] : rois.tissue) {
        double v;
        try {
            v = cnr(image, list, rois.background);
        } catch (const DegenerateError&) {
            v = std::nan("");
        }
        add(metric_names::cnr, layer, v);
    }
    for (const auto& set : rois.ilc) {
        double v;
        try {
            v = ilc(image, set.shadow_free, set.shadowed);
        } catch (const DegenerateError&) {
            v = std::nan("");
        }
        add(metric_names::ilc, set.layer, v);
    }
    for (int k = 1; k < spec.layer_count(); ++k) {
        const std::vector<int> path = layer_center_path(spec, k);
        try {
            LpiProfile p = lpi_profile(image, path, options.lpi_band);
            add(metric_names::lpi_flatness, k, p.flatness);
            report.profiles.push_back({image_id, kind, k, std::move(p.profile)});
        } catch (const ArgumentError&) {
            report.notes.push_back(image_id + " layer " + std::to_string(k) + ": LPI band leaves the image");
        } catch (const DegenerateError&) {
            add(metric_names::lpi_flatness, k, std::nan(""));
        }
    }
}

}  // namespace oct
