#include "rig/se3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rig/error.hpp"

namespace rig {

namespace {

constexpr double kGimbalLockDeg = 89.99;

// Maps atan2's -180 onto +180 so angles live in (-180, 180].
double wrap_half_open(double deg) { return deg <= -180.0 ? deg + 360.0 : deg; }

}  // namespace

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0) {
    throw Error(Errc::InvalidArgument, "quaternion must be finite and nonzero");
  }
  w_ = w / n;
  x_ = x / n;
  y_ = y / n;
  z_ = z / n;
  canonicalize_sign();
}

UnitQuaternion UnitQuaternion::from_serialized(double w, double x, double y, double z,
                                               double tolerance) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (std::isfinite(n) && std::abs(n - 1.0) <= tolerance) {
    UnitQuaternion q(Raw{}, w, x, y, z);
    q.canonicalize_sign();
    return q;
  }
  return UnitQuaternion(w, x, y, z);
}

void UnitQuaternion::canonicalize_sign() {
  bool flip = false;
  if (w_ < 0.0) {
    flip = true;
  } else if (w_ == 0.0) {
    if (x_ != 0.0) {
      flip = x_ < 0.0;
    } else if (y_ != 0.0) {
      flip = y_ < 0.0;
    } else {
      flip = z_ < 0.0;
    }
  }
  if (flip) {
    w_ = -w_;
    x_ = -x_;
    y_ = -y_;
    z_ = -z_;
  }
  // no negative zeros, so text output is stable
  w_ += 0.0;
  x_ += 0.0;
  y_ += 0.0;
  z_ += 0.0;
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw Error(Errc::InvalidArgument, "rotation axis must be nonzero");
  const Eigen::Vector3d u = axis / n;
  const double s = std::sin(angle_rad / 2.0);
  return {std::cos(angle_rad / 2.0), u.x() * s, u.y() * s, u.z() * s};
}

UnitQuaternion UnitQuaternion::from_matrix(const Eigen::Matrix3d& rotation) {
  const Eigen::Quaterniond q(rotation);
  return {q.w(), q.x(), q.y(), q.z()};
}

Eigen::Matrix3d UnitQuaternion::matrix() const {
  return Eigen::Quaterniond(w_, x_, y_, z_).toRotationMatrix();
}

Eigen::Vector3d UnitQuaternion::rotate(const Eigen::Vector3d& v) const { return matrix() * v; }

UnitQuaternion UnitQuaternion::conjugate() const { return {w_, -x_, -y_, -z_}; }

UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return {a.w_ * b.w_ - a.x_ * b.x_ - a.y_ * b.y_ - a.z_ * b.z_,
          a.w_ * b.x_ + a.x_ * b.w_ + a.y_ * b.z_ - a.z_ * b.y_,
          a.w_ * b.y_ - a.x_ * b.z_ + a.y_ * b.w_ + a.z_ * b.x_,
          a.w_ * b.z_ + a.x_ * b.y_ - a.y_ * b.x_ + a.z_ * b.w_};
}

const char* to_string(EulerConvention c) {
  switch (c) {
    case EulerConvention::IntrinsicXYZ: return "intrinsic_xyz";
    case EulerConvention::ExtrinsicXYZ: return "extrinsic_xyz";
    case EulerConvention::IntrinsicZYX: return "intrinsic_zyx";
  }
  return "?";
}

EulerConvention parse_euler_convention(const std::string& name) {
  if (name == "intrinsic_xyz") return EulerConvention::IntrinsicXYZ;
  if (name == "extrinsic_xyz") return EulerConvention::ExtrinsicXYZ;
  if (name == "intrinsic_zyx") return EulerConvention::IntrinsicZYX;
  throw Error(Errc::InvalidArgument, "unknown Euler convention '" + name + "'");
}

UnitQuaternion quat_from_euler(const EulerAnglesDeg& e, EulerConvention convention) {
  const auto qx = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitX(), deg2rad(e.x_deg));
  const auto qy = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitY(), deg2rad(e.y_deg));
  const auto qz = UnitQuaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), deg2rad(e.z_deg));
  switch (convention) {
    case EulerConvention::IntrinsicXYZ:
      return qx * qy * qz;
    case EulerConvention::ExtrinsicXYZ:
    case EulerConvention::IntrinsicZYX:
      return qz * qy * qx;
  }
  return {};
}

EulerSolution euler_from_quat(const UnitQuaternion& q, EulerConvention convention) {
  const Eigen::Matrix3d r = q.matrix();
  double ax = 0.0;
  double ay = 0.0;
  double az = 0.0;
  bool lock = false;
  if (convention == EulerConvention::IntrinsicXYZ) {
    // R = Rx(a) Ry(b) Rz(c); R(0,2) = sin b
    ay = std::atan2(r(0, 2), std::hypot(r(0, 0), r(0, 1)));
    lock = std::abs(rad2deg(ay)) > kGimbalLockDeg;
    if (lock) {
      ax = std::atan2(r(2, 1), r(1, 1));
    } else {
      ax = std::atan2(-r(1, 2), r(2, 2));
      az = std::atan2(-r(0, 1), r(0, 0));
    }
  } else {
    // R = Rz(c) Ry(b) Rx(a); R(2,0) = -sin b
    ay = std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2)));
    lock = std::abs(rad2deg(ay)) > kGimbalLockDeg;
    if (lock) {
      ax = std::atan2(-r(1, 2), r(1, 1));
    } else {
      ax = std::atan2(r(2, 1), r(2, 2));
      az = std::atan2(r(1, 0), r(0, 0));
    }
  }
  EulerSolution out;
  out.angles = {wrap_half_open(rad2deg(ax)), rad2deg(ay), wrap_half_open(rad2deg(az))};
  out.gimbal_lock = lock;
  return out;
}

Transform Transform::from_matrix(const Eigen::Matrix4d& m) {
  Transform t;
  t.rotation = UnitQuaternion::from_matrix(m.topLeftCorner<3, 3>());
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

Eigen::Matrix4d Transform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Transform compose(const Transform& a, const Transform& b) {
  Transform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation.rotate(b.translation) + a.translation;
  return out;
}

Transform invert(const Transform& t) {
  Transform out;
  out.rotation = t.rotation.conjugate();
  out.translation = -out.rotation.rotate(t.translation);
  return out;
}

Eigen::Vector3d transform_point(const Transform& t, const Eigen::Vector3d& p) {
  return t.rotation.rotate(p) + t.translation;
}

double rotation_angle_between(const UnitQuaternion& a, const UnitQuaternion& b) {
  // Half-angle via atan2 of chord lengths; stable near 0 and 180, and
  // symmetric because only |a -+ b| enter.
  const Eigen::Vector4d va(a.w(), a.x(), a.y(), a.z());
  Eigen::Vector4d vb(b.w(), b.x(), b.y(), b.z());
  if (va.dot(vb) < 0.0) vb = -vb;
  const double phi = 2.0 * std::atan2((va - vb).norm(), (va + vb).norm());
  return std::clamp(rad2deg(2.0 * phi), 0.0, 180.0);
}

double translation_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return (a - b).norm();
}

}  // namespace rig
