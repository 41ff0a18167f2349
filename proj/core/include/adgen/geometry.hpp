#pragma once

#include <vector>

#include <Eigen/Core>

namespace adgen {

using Vec3 = Eigen::Vector3d;
using PointCloud = std::vector<Vec3>;

/// Pinhole intrinsics in pixels. Camera frame is y-down, z-forward.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    bool valid_for(int width, int height) const;
};

inline constexpr double kDefaultHorizontalFovDeg = 55.0;

/// fx = width / (2 tan(hfov / 2)), fy = fx, principal point at the centre.
CameraIntrinsics intrinsics_from_fov(int width, int height, double hfov_deg = kDefaultHorizontalFovDeg);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace adgen
