#pragma once

// Hand-written calibration and random point/image fixtures.

#include <cstdint>

#include "crossfuse/geometry.hpp"
#include "crossfuse/tensor.hpp"

namespace fixtures {

using crossfuse::CalibrationSet;

/// Camera 02 of a typical KITTI drive, typed in from a calibration file.
inline CalibrationSet kitti_calibration()
{
    CalibrationSet c;
    c.P << 7.215377e+02, 0.0, 6.095593e+02, 4.485728e+01,
           0.0, 7.215377e+02, 1.728540e+02, 2.163791e-01,
           0.0, 0.0, 1.0, 2.745884e-03;
    c.R.setIdentity();
    c.R.topLeftCorner<3, 3>() << 9.999239e-01, 9.837760e-03, -7.445048e-03,
                                 -9.869795e-03, 9.999421e-01, -4.278459e-03,
                                 7.402527e-03, 4.351614e-03, 9.999631e-01;
    c.T.setIdentity();
    c.T.topRows<3>() << 7.533745e-03, -9.999714e-01, -6.166020e-04, -4.069766e-03,
                        1.480249e-02, 7.280733e-04, -9.998902e-01, -7.631618e-02,
                        9.998621e-01, 7.523790e-03, 1.480755e-02, -2.717806e-01;
    return c;
}

/// Pinhole camera with focal f and principal point (cx, cy); LIDAR x forward,
/// y left, z up mapped to camera x right, y down, z forward.
inline CalibrationSet axis_calibration(double f, double cx, double cy)
{
    CalibrationSet c;
    c.P << f, 0, cx, 0,
           0, f, cy, 0,
           0, 0, 1, 0;
    c.T << 0, -1, 0, 0,
           0, 0, -1, 0,
           1, 0, 0, 0,
           0, 0, 0, 1;
    return c;
}

/// Points spread in front of and behind the sensor.
inline crossfuse::PointCloud random_cloud(std::size_t n, crossfuse::RngState& rng)
{
    crossfuse::PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        crossfuse::LidarPoint p;
        p.x = static_cast<float>(rng.uniform(-20.0, 60.0));
        p.y = static_cast<float>(rng.uniform(-25.0, 25.0));
        p.z = static_cast<float>(rng.uniform(-3.0, 2.0));
        p.reflectance = static_cast<float>(rng.uniform());
        cloud.points.push_back(p);
    }
    return cloud;
}

}  // namespace fixtures
