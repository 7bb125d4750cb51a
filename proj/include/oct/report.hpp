#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oct/metrics.hpp"
#include "oct/phantom.hpp"

namespace oct {

// Metric names used in report rows.
namespace metric_names {
inline constexpr const char* agm = "agm";
inline constexpr const char* paper_psnr = "paper_psnr";
inline constexpr const char* psnr = "psnr";
inline constexpr const char* cnr = "cnr";
inline constexpr const char* ssim = "ssim";
inline constexpr const char* ilc = "ilc";
inline constexpr const char* lpi_flatness = "lpi_flatness";
inline constexpr const char* shadow_loss = "shadow_loss";
}  // namespace metric_names

// The noise-removal metrics, i.e. the ones divided by the multi-frame value.
bool is_noise_metric(const std::string& metric);

struct MetricRow {
    std::string image_id;
    std::string kind;    // noisy, processed, multiframe, ...
    std::string metric;
    int layer = -1;      // -1 for whole-image metrics
    double value = 0.0;
    std::optional<double> normalized;

    bool operator==(const MetricRow&) const = default;
};

struct RoiRecord {
    std::string image_id;
    std::string purpose;  // e.g. "cnr", "ilc"
    int layer = -1;
    Roi roi;

    bool operator==(const RoiRecord&) const = default;
};

struct ProfileRecord {
    std::string image_id;
    std::string kind;
    int layer = -1;
    std::vector<double> values;

    bool operator==(const ProfileRecord&) const = default;
};

struct MetricSummary {
    std::string kind;
    std::string metric;
    int layer = -1;
    std::size_t rows = 0;
    std::size_t finite = 0;  // rows entering mean/std
    double mean = 0.0;
    double stddev = 0.0;     // sample (n-1); 0 when finite < 2
    std::size_t normalized_rows = 0;
    double normalized_mean = 0.0;
    double normalized_stddev = 0.0;
};

class MetricReport {
public:
    std::vector<MetricRow> rows;
    std::vector<RoiRecord> rois;
    std::vector<ProfileRecord> profiles;
    std::vector<std::string> notes;
    std::string normalization_reference;  // kind the normalized values were divided by

    bool empty() const { return rows.empty(); }
    void add(MetricRow row) { rows.push_back(std::move(row)); }
    void merge(const MetricReport& other);
    // Sorts every record by image id, then kind/metric/layer.
    void sort();

    std::vector<const MetricRow*> find(const std::string& kind, const std::string& metric) const;
    std::vector<MetricSummary> aggregate() const;
    // Mean of finite raw values for one (kind, metric) over all layers.
    std::optional<double> mean_of(const std::string& kind, const std::string& metric) const;

    std::string to_csv() const;
    static MetricReport from_csv(const std::string& text);
    nlohmann::json summary_json() const;

    void write(const std::string& csv_path, const std::string& json_path) const;

    bool operator==(const MetricReport&) const = default;
};

// Divides each noise-removal metric by the multi-frame row with the same
// image id, metric and layer. ILC, LPI and shadow-loss rows stay raw; rows
// whose counterpart is zero or non-finite stay raw and are noted.
MetricReport normalize_report(const MetricReport& report, const MetricReport& multiframe_report);

struct MeasureOptions {
    int tissue_rois = 25;
    int tissue_size = 8;
    int ilc_rois = 5;
    int ilc_size = 5;
    int background_rows = 20;
    int lpi_band = 1;
    std::uint64_t seed = 0;
};

// ROIs used for every kind of a given image; drawn once from
// (seed, image id) so noisy/processed/multi-frame see identical regions.
struct ImageRois {
    Roi background;
    std::vector<std::pair<int, std::vector<Roi>>> tissue;  // per layer
    struct IlcSet {
        int layer = -1;
        std::vector<Roi> shadow_free;
        std::vector<Roi> shadowed;
    };
    std::vector<IlcSet> ilc;
    std::vector<std::string> notes;
};

ImageRois plan_rois(const PhantomSpec& spec, const ShadowMask& mask, const std::string& image_id,
                    const MeasureOptions& options);

// Appends the rows of one image to `report`. `reference` is the shadow-free
// clean image that PSNR/SSIM compare against.
void measure_image(MetricReport& report, const Image& image, const std::string& image_id, const std::string& kind,
                   const Image& reference, const PhantomSpec& spec, const ImageRois& rois,
                   const MeasureOptions& options);

void record_rois(MetricReport& report, const std::string& image_id, const ImageRois& rois);

}  // namespace oct
