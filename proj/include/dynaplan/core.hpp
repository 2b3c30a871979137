/**
 * @file core.hpp
 * @brief Common geometry types, frame transforms, and error taxonomy.
 */

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynaplan {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidPoseError : Error {
    using Error::Error;
};
struct EmptyMapError : Error {
    using Error::Error;
};
struct InvalidIntervalError : Error {
    using Error::Error;
};
struct NumericalFailureError : Error {
    using Error::Error;
};
struct SolveFailureError : Error {
    using Error::Error;
};
struct PredictionExpiredError : Error {
    using Error::Error;
};
struct DegenerateRepulsionError : Error {
    using Error::Error;
};
struct ScenarioError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

/// Rigid body transform from sensor frame to world frame.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    /// True when rotation is orthonormal with positive determinant.
    bool valid(double tol = 1e-9) const {
        const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
        return err.cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol;
    }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

/**
 * @brief One sensor scan. Points are either sensor-frame or world-frame
 * depending on pipeline stage; `labels` is an optional per-point ground
 * truth channel (object index, -1 for static surfaces) used by the
 * simulator and offline evaluation.
 */
struct PointCloud {
    double timestamp = 0.0;
    std::int64_t frame_id = 0;
    std::vector<Vec3> points;
    std::vector<int> labels;  // empty, or aligned with points

    bool has_labels() const { return labels.size() == points.size() && !points.empty(); }
};

/// Applies an SE(3) transform to every point; timestamp and frame_id carry over.
inline PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose) {
    if (!pose.valid()) {
        throw InvalidPoseError("transform_cloud: rotation is not orthonormal");
    }
    PointCloud out;
    out.timestamp = cloud.timestamp;
    out.frame_id = cloud.frame_id;
    out.labels = cloud.labels;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) {
        out.points.push_back(pose.apply(p));
    }
    return out;
}

}  // namespace dynaplan
