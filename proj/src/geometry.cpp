#include "crossfuse/geometry.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

#include "crossfuse/errors.hpp"

namespace crossfuse {

void CalibrationSet::validate() const
{
    const Eigen::Matrix3d rot = T.topLeftCorner<3, 3>();
    const double orth = (rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    const double det = rot.determinant();
    if (orth > 1e-4 || std::abs(det - 1.0) > 1e-4) {
        throw DomainError("calibration: LIDAR-to-camera rotation is not orthonormal (residual " +
                          std::to_string(orth) + ", det " + std::to_string(det) + ")");
    }
    if (!P.allFinite() || !R.allFinite() || !T.allFinite()) {
        throw DomainError("calibration: non-finite matrix entry");
    }
}

std::optional<PixelProjection> project_point(const Eigen::Vector4d& p, const CalibrationSet& calib)
{
    const Eigen::Vector3d q = calib.P * (calib.R * (calib.T * p));
    if (!(q(2) > 0.0)) {
        return std::nullopt;
    }
    return PixelProjection{q(0) / q(2), q(1) / q(2), q(2)};
}

SparseZyxImage::SparseZyxImage(int width, int height)
    : width(width), height(height)
{
    if (width <= 0 || height <= 0) {
        throw DomainError("SparseZyxImage: non-positive size " + std::to_string(width) + "x" +
                          std::to_string(height));
    }
    const std::size_t n = static_cast<std::size_t>(width) * height;
    z.assign(n, 0.0);
    y.assign(n, 0.0);
    x.assign(n, 0.0);
    mask.assign(n, 0);
    depth.assign(n, 0.0);
}

std::size_t SparseZyxImage::masked_count() const
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

SparseZyxImage project_cloud(const PointCloud& cloud, const CalibrationSet& calib, int width,
                             int height, CoordinateFrame frame, ProjectionStats* stats)
{
    SparseZyxImage img(width, height);
    ProjectionStats local;
    local.points_in = cloud.count();

    const Eigen::Matrix4d to_camera = calib.R * calib.T;
    for (const LidarPoint& pt : cloud.points) {
        const Eigen::Vector4d p(pt.x, pt.y, pt.z, 1.0);
        const std::optional<PixelProjection> proj = project_point(p, calib);
        if (!proj) {
            ++local.behind_camera;
            continue;
        }
        const double lambda = proj->lambda;
        const double col = std::floor(proj->u + 0.5);
        const double row = std::floor(proj->v + 0.5);
        if (!(col >= 0.0 && col < width && row >= 0.0 && row < height)) {
            ++local.outside_image;
            continue;
        }
        ++local.points_kept;
        const std::size_t idx = img.index(static_cast<int>(col), static_cast<int>(row));
        if (img.mask[idx] != 0 && img.depth[idx] <= lambda) {
            continue;
        }
        Eigen::Vector3d v(pt.x, pt.y, pt.z);
        if (frame == CoordinateFrame::camera) {
            v = (to_camera * p).head<3>();
        }
        img.mask[idx] = 1;
        img.depth[idx] = lambda;
        img.x[idx] = v(0);
        img.y[idx] = v(1);
        img.z[idx] = v(2);
    }
    local.masked_pixels = img.masked_count();
    if (stats != nullptr) {
        *stats = local;
    }
    return img;
}

}  // namespace crossfuse
