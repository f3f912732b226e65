#include "crossfuse/synthetic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "crossfuse/errors.hpp"

namespace crossfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLidarHeight = 1.73;
constexpr double kMaxRange = 80.0;
constexpr double kMarchStep = 0.1;

enum class Material { none, road, sidewalk, wall };

struct Scene {
    double offset = 0.0;
    double amplitude = 0.0;
    double wavelength = 30.0;
    double phase = 0.0;
    double half_width = 4.0;
    double curb = 0.2;
    double wall_left = 6.0;   // distance of the left facade from the road edge
    double wall_right = 6.0;
    double wall_height = 6.0;
    double lane_phase = 0.0;
    double road_gray = 90.0;
    double walk_rgb[3] = {150, 140, 125};
    double wall_rgb[3] = {170, 150, 130};

    double center(double x) const { return offset + amplitude * std::sin(x / wavelength + phase); }

    Material material(double x, double y) const
    {
        const double d = y - center(x);
        if (std::abs(d) <= half_width) {
            return Material::road;
        }
        if (d > half_width + wall_left || d < -(half_width + wall_right)) {
            return Material::wall;
        }
        return Material::sidewalk;
    }

    double surface(double x, double y) const
    {
        switch (material(x, y)) {
        case Material::road: return -kLidarHeight;
        case Material::sidewalk: return -kLidarHeight + curb;
        default: return -kLidarHeight + wall_height;
        }
    }
};

Scene make_scene(RngState& rng)
{
    Scene s;
    s.offset = rng.uniform(-1.5, 1.5);
    s.amplitude = rng.uniform(0.0, 4.0);
    s.wavelength = rng.uniform(12.0, 30.0);
    s.phase = rng.uniform(0.0, 2.0 * kPi);
    s.half_width = rng.uniform(3.0, 5.0);
    s.curb = rng.uniform(0.15, 0.3);
    s.wall_left = rng.uniform(3.0, 8.0);
    s.wall_right = rng.uniform(3.0, 8.0);
    s.wall_height = rng.uniform(4.0, 9.0);
    s.lane_phase = rng.uniform(0.0, 8.0);
    s.road_gray = rng.uniform(70.0, 110.0);
    for (int c = 0; c < 3; ++c) {
        s.walk_rgb[c] = rng.uniform(115.0, 175.0);
        s.wall_rgb[c] = rng.uniform(90.0, 210.0);
    }
    return s;
}

struct Hit {
    Material material = Material::none;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    double range = 0.0;
};

Hit cast(const Scene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir)
{
    auto below = [&](double t) {
        const Eigen::Vector3d p = origin + t * dir;
        return p.z() <= scene.surface(p.x(), p.y());
    };
    double prev = 0.0;
    for (double t = kMarchStep; t <= kMaxRange; t += kMarchStep) {
        if (below(t)) {
            double lo = prev;
            double hi = t;
            for (int i = 0; i < 30; ++i) {
                const double mid = 0.5 * (lo + hi);
                (below(mid) ? hi : lo) = mid;
            }
            Hit h;
            h.range = hi;
            h.point = origin + hi * dir;
            h.material = scene.material(h.point.x(), h.point.y());
            return h;
        }
        prev = t;
    }
    return {};
}

double clamp255(double v)
{
    return std::clamp(v, 0.0, 255.0);
}

}  // namespace

CalibrationSet synthetic_calibration(int width, int height)
{
    // Full-resolution reference camera: 1242 x 375, f = 721.5377.
    const double sx = width / 1242.0;
    const double sy = height / 375.0;
    CalibrationSet c;
    c.P << 721.5377 * sx, 0.0, 609.5593 * sx, 44.85728 * sx,
           0.0, 721.5377 * sy, 172.854 * sy, 0.2163791 * sy,
           0.0, 0.0, 1.0, 0.002745884;
    const double a = 0.4 * kPi / 180.0;
    c.R = Eigen::Matrix4d::Identity();
    c.R(0, 0) = std::cos(a);
    c.R(0, 2) = std::sin(a);
    c.R(2, 0) = -std::sin(a);
    c.R(2, 2) = std::cos(a);
    c.T = Eigen::Matrix4d::Identity();
    c.T.block<3, 3>(0, 0) << 0.0, -1.0, 0.0,
                             0.0, 0.0, -1.0,
                             1.0, 0.0, 0.0;
    c.T.block<3, 1>(0, 3) << -0.004069766, -0.07631618, -0.2717806;
    return c;
}

SyntheticFrame make_synthetic_frame(int index, const SyntheticOptions& options)
{
    if (options.width < 8 || options.height < 8 || options.beams < 1 || !(options.azimuth_step_deg > 0.0)) {
        throw DomainError("synthetic frame: invalid options");
    }
    RngState rng(options.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index));
    const Scene scene = make_scene(rng);

    SyntheticFrame f;
    char id[32];
    std::snprintf(id, sizeof id, "um_%06d", index);
    f.id = id;
    f.calib = synthetic_calibration(options.width, options.height);

    // LIDAR sweep, beams from +2 to -24.8 degrees elevation.
    const Eigen::Vector3d lidar_origin = Eigen::Vector3d::Zero();
    const int azimuths = static_cast<int>(std::lround(360.0 / options.azimuth_step_deg));
    for (int b = 0; b < options.beams; ++b) {
        const double elev =
            (2.0 - (options.beams > 1 ? 26.8 * b / (options.beams - 1) : 0.0)) * kPi / 180.0;
        for (int a = 0; a < azimuths; ++a) {
            const double az = (a * options.azimuth_step_deg - 180.0) * kPi / 180.0;
            const Eigen::Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
            const Hit h = cast(scene, lidar_origin, dir);
            if (h.material == Material::none) {
                continue;
            }
            float refl = 0.0f;
            switch (h.material) {
            case Material::road: refl = 0.15f; break;
            case Material::sidewalk: refl = 0.35f; break;
            default: refl = 0.6f; break;
            }
            f.cloud.points.push_back(LidarPoint{static_cast<float>(h.point.x()), static_cast<float>(h.point.y()),
                                                static_cast<float>(h.point.z()), refl});
        }
    }

    // Camera rays through each pixel, expressed in the LIDAR frame.
    const Eigen::Matrix<double, 3, 4> m = f.calib.chain();
    const Eigen::Matrix3d ainv = m.leftCols<3>().inverse();
    const Eigen::Vector3d cam_origin = -ainv * m.col(3);
    f.rgb = Image8(options.width, options.height, 3);
    f.gt = Image8(options.width, options.height, 3);
    for (int v = 0; v < options.height; ++v) {
        for (int u = 0; u < options.width; ++u) {
            const Eigen::Vector3d dir = (ainv * Eigen::Vector3d(u, v, 1.0)).normalized();
            const Hit h = cast(scene, cam_origin, dir);
            const double noise = rng.uniform(-8.0, 8.0);
            double rgb[3] = {140.0 + 0.8 * v, 180.0 + 0.5 * v, 225.0};
            if (h.material == Material::road) {
                const double d = h.point.y() - scene.center(h.point.x());
                const bool marking = std::abs(d) < 0.12 && std::fmod(h.point.x() + scene.lane_phase, 8.0) < 4.0;
                const double g = marking ? 225.0 : scene.road_gray;
                rgb[0] = g + noise;
                rgb[1] = g + noise;
                rgb[2] = g + 5.0 + noise;
            } else if (h.material == Material::sidewalk) {
                for (int c = 0; c < 3; ++c) {
                    rgb[c] = scene.walk_rgb[c] + noise;
                }
            } else if (h.material == Material::wall) {
                const bool window = std::fmod(h.point.z() + 10.0, 3.0) > 1.6 &&
                                    std::fmod(h.point.x() + 100.0, 4.0) > 2.0;
                for (int c = 0; c < 3; ++c) {
                    rgb[c] = (window ? 0.45 : 1.0) * scene.wall_rgb[c] + noise;
                }
            }
            if (h.material != Material::none) {
                const double haze = std::min(h.range / 120.0, 0.6);
                for (int c = 0; c < 3; ++c) {
                    rgb[c] = (1.0 - haze) * rgb[c] + haze * 190.0;
                }
            }
            const std::uint8_t* label = h.material == Material::road ? kRoadColor : kNotRoadColor;
            for (int c = 0; c < 3; ++c) {
                f.rgb.at(u, v, c) = static_cast<std::uint8_t>(std::lround(clamp255(rgb[c])));
                f.gt.at(u, v, c) = label[c];
            }
        }
    }
    return f;
}

Sample synthetic_sample(const SyntheticFrame& frame, const DensifyOptions& densify_options,
                        const std::string& category)
{
    const SparseZyxImage sparse = project_cloud(frame.cloud, frame.calib, frame.rgb.width, frame.rgb.height);
    const DenseZyxImage dense = densify(sparse, densify_options);
    const LabelMap labels = decode_ground_truth(frame.gt);
    return make_sample(frame.id, category, &frame.rgb, &dense, &labels);
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, int count,
                                              const SyntheticOptions& options)
{
    namespace fs = std::filesystem;
    for (const char* sub : {"rgb", "velodyne", "calib", "gt"}) {
        fs::create_directories(dir / sub);
    }
    std::vector<FrameRecord> records;
    for (int i = 0; i < count; ++i) {
        const SyntheticFrame f = make_synthetic_frame(i, options);
        FrameRecord r;
        r.id = f.id;
        r.category = "um";
        r.rgb = "rgb/" + f.id + ".png";
        r.cloud = "velodyne/" + f.id + ".bin";
        r.calib = "calib/" + f.id + ".txt";
        r.gt = "gt/" + f.id + ".png";
        write_image(f.rgb, dir / r.rgb);
        write_cloud(f.cloud, dir / r.cloud);
        write_calibration(f.calib, dir / r.calib);
        write_image(f.gt, dir / r.gt);
        records.push_back(r);
    }
    const fs::path manifest = dir / "manifest.tsv";
    write_manifest(records, manifest);
    return manifest;
}

}  // namespace crossfuse
