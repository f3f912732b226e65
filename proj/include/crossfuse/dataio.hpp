#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crossfuse/densify.hpp"
#include "crossfuse/geometry.hpp"
#include "crossfuse/ops.hpp"

namespace crossfuse {

/// Interleaved 8-bit image (channels 1 or 3), row-major.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int width, int height, int channels, std::uint8_t fill = 0)
        : width(width), height(height), channels(channels),
          data(static_cast<std::size_t>(width) * height * channels, fill)
    {
    }
    std::uint8_t& at(int x, int y, int c = 0)
    {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const
    {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool operator==(const Image8&) const = default;
};

// ---- point clouds: little-endian float32 quadruplets (x, y, z, reflectance)

PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);

// ---- calibration: "KEY: v1 v2 ..." lines

struct CalibrationKeys {
    /// Projection matrix key, e.g. P2 for the left color camera.
    std::string projection = "P2";
};

/// Accepts the road/object layout (P2, R0_rect, Tr_velo_to_cam) and the raw
/// layout names (P_rect_02, R_rect_00, Tr_velo_cam). Throws ParseError with
/// the line number on a non-numeric token and ParseError naming a missing key.
CalibrationSet read_calibration(const std::filesystem::path& path, const CalibrationKeys& keys = {});
CalibrationSet parse_calibration(const std::string& text, const CalibrationKeys& keys = {});
void write_calibration(const CalibrationSet& calib, const std::filesystem::path& path,
                       const CalibrationKeys& keys = {});

// ---- images: binary PPM (P6) / PGM (P5), and PNG when built with libpng

Image8 read_image(const std::filesystem::path& path);
/// Format chosen by extension: .ppm, .pgm or .png.
void write_image(const Image8& img, const std::filesystem::path& path);

// ---- ground truth

/// Road color (violet) and background color of ground-truth images.
inline constexpr std::uint8_t kRoadColor[3] = {255, 0, 255};
inline constexpr std::uint8_t kNotRoadColor[3] = {255, 0, 0};

/// Exact color match: road -> 1, not-road -> 0, anything else -> ignore.
LabelMap decode_ground_truth(const Image8& img);
Image8 encode_ground_truth(const LabelMap& labels);

// ---- canvas padding (content anchored top-left, zero fill)

inline constexpr int kCanvasHeight = 384;
inline constexpr int kCanvasWidth = 1248;

Image8 pad_to_canvas(const Image8& img, int height = kCanvasHeight, int width = kCanvasWidth);
/// Padded label pixels become ignore.
LabelMap pad_to_canvas(const LabelMap& labels, int height = kCanvasHeight, int width = kCanvasWidth);
Image8 crop_canvas(const Image8& img, int height, int width);
LabelMap crop_canvas(const LabelMap& labels, int height, int width);

// ---- segmentation outputs

/// value = round(255 * confidence), 8-bit grayscale.
Image8 confidence_image(std::span<const double> confidence, int width, int height);
void write_segmentation(std::span<const double> confidence, int width, int height,
                        const std::filesystem::path& path,
                        std::optional<double> binarize_threshold = std::nullopt,
                        const std::filesystem::path& binary_path = {});
/// Green TP, red FN, blue FP over the darkened RGB image; ignore pixels untouched.
Image8 overlay_image(const Image8& rgb, std::span<const double> confidence, const LabelMap& gt,
                     double threshold);

// ---- dense ZYX files

/// "ZYXD" magic, u32 width, u32 height, float32 planes z, y, x, u8 fill plane.
void write_dense_zyx(const DenseZyxImage& img, const std::filesystem::path& path);
DenseZyxImage read_dense_zyx(const std::filesystem::path& path);

// ---- frame manifests

struct FrameRecord {
    std::string id;
    std::string category;  // um, umm, uu, challenging, ...
    int camera = 2;        // selects the P<camera> projection key
    std::string rgb;       // empty when absent
    std::string cloud;
    std::string calib;
    std::string gt;

    bool operator==(const FrameRecord&) const = default;
};

/// Tab-separated: id, category, camera, rgb, cloud, calib, gt; "-" marks an
/// absent path; '#' starts a comment line.
std::vector<FrameRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<FrameRecord>& frames, const std::filesystem::path& path);

/// Resolves a manifest path: absolute paths unchanged; relative ones against
/// $CROSSFUSE_DATA_ROOT when set, otherwise against `base_dir`.
std::filesystem::path resolve_path(const std::string& path, const std::filesystem::path& base_dir);

/// Throws IoError naming the first referenced file that does not exist.
void check_frame_files(const FrameRecord& frame, const std::filesystem::path& base_dir);

}  // namespace crossfuse
