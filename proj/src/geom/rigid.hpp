#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "num/rng.hpp"

namespace vfn::geom {

struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point3 operator*(double s, Point3 p) { return {s * p.x, s * p.y, s * p.z}; }
inline double dot(Point3 a, Point3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(Point3 a, Point3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Point3 p) { return std::sqrt(dot(p, p)); }
inline bool finite(Point3 p) { return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z); }

/// Rotation + translation; apply(T, x) = R x + t. Rotation is stored
/// row-major; its columns are the frame axes in parent coordinates.
struct RigidTransform {
  std::array<double, 9> r{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Point3 t;

  Point3 column(int c) const { return {r[static_cast<std::size_t>(c)], r[static_cast<std::size_t>(3 + c)], r[static_cast<std::size_t>(6 + c)]}; }
};

Point3 apply(const RigidTransform& t, Point3 p);
/// Rotation only, no translation; for transforming directions.
Point3 rotate(const RigidTransform& t, Point3 p);

/// (a ∘ b)(x) = a(b(x)). Drift beyond 1e-9 from orthonormality is
/// repaired by a Gram-Schmidt refresh so long chains stay proper.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
/// The frame-change map taking j-local coordinates into i-local ones:
/// invert(ti) ∘ tj.
RigidTransform relative_transform(const RigidTransform& ti, const RigidTransform& tj);

/// Gram-Schmidt frame anchored at ca: x axis toward c, n fixed into the
/// xy half-plane, z completing a right-handed triad. `residue` tags
/// degenerate-input errors with the offending residue.
RigidTransform frame_from_three_points(Point3 n, Point3 ca, Point3 c, std::int64_t residue = -1);

/// max |R^T R - I| entry; 0 for a perfectly orthonormal rotation.
double orthonormality_deviation(const RigidTransform& t);
double rotation_det(const RigidTransform& t);
RigidTransform orthonormalized(const RigidTransform& t);

/// Uniform random rotation (quaternion method) with translation
/// components uniform in [-100, 100].
RigidTransform random_rigid(num::Rng& rng);
RigidTransform random_rigid(std::uint64_t seed);

}  // namespace vfn::geom
