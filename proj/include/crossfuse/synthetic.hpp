#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossfuse/dataio.hpp"
#include "crossfuse/densify.hpp"
#include "crossfuse/geometry.hpp"
#include "crossfuse/trainer.hpp"

namespace crossfuse {

/// Procedural driving scenes: a curved flat road between raised sidewalks and
/// building facades, seen by a 64-beam spinning LIDAR and a forward camera.
struct SyntheticOptions {
    int width = 156;
    int height = 48;
    std::uint64_t seed = 1;
    int beams = 64;
    double azimuth_step_deg = 0.4;
};

struct SyntheticFrame {
    std::string id;
    CalibrationSet calib;
    PointCloud cloud;
    Image8 rgb;
    /// Road / not-road colored ground truth.
    Image8 gt;
};

/// KITTI-style matrices with the focal length and principal point scaled to the image size.
CalibrationSet synthetic_calibration(int width, int height);

SyntheticFrame make_synthetic_frame(int index, const SyntheticOptions& options = {});

/// Projects, densifies and normalizes a frame into a training sample.
Sample synthetic_sample(const SyntheticFrame& frame, const DensifyOptions& densify_options = {},
                        const std::string& category = "um");

/// Writes `count` frames (rgb/*.png, velodyne/*.bin, calib/*.txt, gt/*.png)
/// and a manifest.tsv under `dir`; returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, int count,
                                              const SyntheticOptions& options = {});

}  // namespace crossfuse
