#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace satslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// 6-vector of local pose coordinates: 3 rotation (rad), then 3 translation (m).
using Tangent6 = Vec6;

class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateGeometryError : public std::runtime_error {
public:
    explicit DegenerateGeometryError(const std::string& what) : std::runtime_error(what) {}
};

class BehindCameraError : public std::runtime_error {
public:
    explicit BehindCameraError(const std::string& what) : std::runtime_error(what) {}
};

class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Normal equations are singular; carries the estimated null-space dimension.
class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(const std::string& what, int nullspace_dim)
        : std::runtime_error(what + " (null-space dimension " + std::to_string(nullspace_dim) + ")"),
          nullspace_dim_(nullspace_dim) {}
    int nullspace_dim() const { return nullspace_dim_; }
private:
    int nullspace_dim_;
};

class SingularInformationError : public std::runtime_error {
public:
    explicit SingularInformationError(const std::string& what) : std::runtime_error(what) {}
};

class NoInformativePlanError : public std::runtime_error {
public:
    explicit NoInformativePlanError(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateSceneError : public std::runtime_error {
public:
    explicit DegenerateSceneError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace satslam
