#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace crossfuse {

struct LidarPoint {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;
    float reflectance = 0.0f;

    bool operator==(const LidarPoint&) const = default;
};

/// Points in the LIDAR frame, meters.
struct PointCloud {
    std::vector<LidarPoint> points;

    std::size_t count() const { return points.size(); }
    bool operator==(const PointCloud&) const = default;
};

/// Matrices of  lambda [u v 1]^T = P R T p.
struct CalibrationSet {
    Eigen::Matrix<double, 3, 4> P = Eigen::Matrix<double, 3, 4>::Identity();
    /// Rectification, 3x3 block embedded in a homogeneous 4x4.
    Eigen::Matrix4d R = Eigen::Matrix4d::Identity();
    /// LIDAR-to-camera rigid transform.
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();

    /// Throws DomainError unless T's rotation block is orthonormal with det +1 (1e-4).
    void validate() const;
    /// P * R * T.
    Eigen::Matrix<double, 3, 4> chain() const { return P * R * T; }
};

struct PixelProjection {
    double u = 0.0;       // column
    double v = 0.0;       // row
    double lambda = 0.0;  // depth scale
};

/// Solves the projection for one homogeneous point; empty when lambda <= 0.
std::optional<PixelProjection> project_point(const Eigen::Vector4d& p, const CalibrationSet& calib);

enum class CoordinateFrame { lidar, camera };

/// Projected coordinates before densification. Unmasked pixels hold 0.
struct SparseZyxImage {
    int width = 0;
    int height = 0;
    std::vector<double> z;
    std::vector<double> y;
    std::vector<double> x;
    std::vector<std::uint8_t> mask;
    /// Lambda of the winning point per masked pixel, 0 elsewhere.
    std::vector<double> depth;

    SparseZyxImage() = default;
    SparseZyxImage(int width, int height);

    std::size_t index(int col, int row) const
    {
        return static_cast<std::size_t>(row) * width + col;
    }
    std::size_t masked_count() const;
};

struct ProjectionStats {
    std::size_t points_in = 0;
    std::size_t behind_camera = 0;
    std::size_t outside_image = 0;
    /// Points that landed in the image, including ones that lost a collision.
    std::size_t points_kept = 0;
    std::size_t masked_pixels = 0;
};

/// Writes every point with lambda > 0 that lands inside the image into the
/// pixel nearest (u, v); the smallest lambda wins a pixel, the earlier point on ties.
SparseZyxImage project_cloud(const PointCloud& cloud, const CalibrationSet& calib, int width,
                             int height, CoordinateFrame frame = CoordinateFrame::lidar,
                             ProjectionStats* stats = nullptr);

}  // namespace crossfuse
