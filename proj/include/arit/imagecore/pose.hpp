#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "arit/common/error.hpp"

namespace arit::img {

// Camera pose: position in millimeters, orientation as a unit quaternion
// rotating camera-frame vectors into the world frame. Camera convention:
// +Z forward (viewing direction), +X right, +Y down (image rows).
struct CameraPose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity(); // (w,x,y,z)

    void validate() const {
        if (std::abs(orientation.norm() - 1.0) > 1e-6)
            throw DataError("CameraPose: quaternion norm must be 1 within 1e-6");
    }

    Eigen::Vector3d to_world(const Eigen::Vector3d& cam) const {
        return orientation * cam + position;
    }
    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
        return orientation.conjugate() * (world - position);
    }
};

// Builds the camera frame from a forward direction and an up hint.
inline CameraPose look_along(const Eigen::Vector3d& position, const Eigen::Vector3d& forward,
                             const Eigen::Vector3d& up_hint = Eigen::Vector3d(0, -1, 0)) {
    Eigen::Vector3d z = forward.normalized();
    Eigen::Vector3d x = up_hint.cross(z);
    if (x.norm() < 1e-9) x = Eigen::Vector3d(1, 0, 0);
    x.normalize();
    Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix3d r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    CameraPose pose;
    pose.position = position;
    pose.orientation = Eigen::Quaterniond(r).normalized();
    return pose;
}

} // namespace arit::img
