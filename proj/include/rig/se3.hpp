#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rig {

/**
 * @brief Unit quaternion with a canonical sign.
 *
 * Every constructor normalizes and flips the sign so that w >= 0 (when
 * w == 0, the first nonzero of x, y, z is positive). Two quaternions
 * describing the same rotation therefore compare and serialize identically.
 */
class UnitQuaternion {
 public:
  UnitQuaternion() = default;

  /// Throws Error(InvalidArgument) for a zero or non-finite input.
  UnitQuaternion(double w, double x, double y, double z);

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Eigen::Vector3d& axis, double angle_rad);
  static UnitQuaternion from_matrix(const Eigen::Matrix3d& rotation);

  /// Keeps the given components verbatim when their norm is already within
  /// `tolerance` of one; only the sign is canonicalized. Used by readers so
  /// that re-serializing parsed values reproduces the same decimal text.
  static UnitQuaternion from_serialized(double w, double x, double y, double z,
                                        double tolerance = 1e-9);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Eigen::Matrix3d matrix() const;
  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const;
  UnitQuaternion conjugate() const;

  /// Hamilton product; (a * b).rotate(v) == a.rotate(b.rotate(v)).
  friend UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b);

  friend bool operator==(const UnitQuaternion&, const UnitQuaternion&) = default;

 private:
  struct Raw {};
  UnitQuaternion(Raw, double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}
  void canonicalize_sign();

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Degrees, as printed in calibration tables.
struct EulerAnglesDeg {
  double x_deg = 0.0;
  double y_deg = 0.0;
  double z_deg = 0.0;
};

/**
 * Axis conventions for Euler triples [X, Y, Z].
 *
 * IntrinsicXYZ: R = Rx(x) * Ry(y) * Rz(z)   (canonical)
 * ExtrinsicXYZ: R = Rz(z) * Ry(y) * Rx(x)
 * IntrinsicZYX: R = Rz(z) * Ry(y) * Rx(x)   (yaw-pitch-roll; same matrix as ExtrinsicXYZ)
 */
enum class EulerConvention { IntrinsicXYZ, ExtrinsicXYZ, IntrinsicZYX };

inline constexpr EulerConvention kCanonicalEuler = EulerConvention::IntrinsicXYZ;

const char* to_string(EulerConvention c);
/// Accepts "intrinsic_xyz", "extrinsic_xyz", "intrinsic_zyx".
EulerConvention parse_euler_convention(const std::string& name);

struct EulerSolution {
  EulerAnglesDeg angles;
  /// Set when |pitch| > 89.99 deg. The x/z split is then conventional:
  /// z_deg = 0 and x_deg carries the whole residual rotation.
  bool gimbal_lock = false;
};

UnitQuaternion quat_from_euler(const EulerAnglesDeg& e,
                               EulerConvention convention = kCanonicalEuler);
EulerSolution euler_from_quat(const UnitQuaternion& q,
                              EulerConvention convention = kCanonicalEuler);

/// Rigid transform. Applied to a point p as rotation * p + translation.
struct Transform {
  UnitQuaternion rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Transform identity() { return {}; }
  static Transform from_matrix(const Eigen::Matrix4d& m);
  Eigen::Matrix4d matrix() const;
};

/// a ∘ b: apply b first, then a.
Transform compose(const Transform& a, const Transform& b);
Transform invert(const Transform& t);
Eigen::Vector3d transform_point(const Transform& t, const Eigen::Vector3d& p);

/// Geodesic angle of the relative rotation, degrees in [0, 180]. Exactly symmetric.
double rotation_angle_between(const UnitQuaternion& a, const UnitQuaternion& b);
double translation_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace rig
