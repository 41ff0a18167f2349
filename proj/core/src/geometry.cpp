#include "adgen/geometry.hpp"

#include <cmath>
#include <numbers>

namespace adgen {

bool CameraIntrinsics::valid_for(int width, int height) const {
    return fx > 0 && fy > 0 && cx > 0 && cx < width && cy > 0 && cy < height;
}

CameraIntrinsics intrinsics_from_fov(int width, int height, double hfov_deg) {
    const double fx = width / (2.0 * std::tan(deg_to_rad(hfov_deg) / 2.0));
    return CameraIntrinsics{fx, fx, width / 2.0, height / 2.0};
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace adgen
