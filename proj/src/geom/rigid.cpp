#include "geom/rigid.hpp"

#include <algorithm>
#include <string>

#include "common/error.hpp"

namespace vfn::geom {

namespace {

constexpr double kDegenerateTol = 1e-6;
constexpr double kDriftTol = 1e-9;

RigidTransform from_columns(Point3 e1, Point3 e2, Point3 e3, Point3 t) {
  RigidTransform out;
  out.r = {e1.x, e2.x, e3.x, e1.y, e2.y, e3.y, e1.z, e2.z, e3.z};
  out.t = t;
  return out;
}

}  // namespace

Point3 apply(const RigidTransform& t, Point3 p) { return rotate(t, p) + t.t; }

Point3 rotate(const RigidTransform& t, Point3 p) {
  return {t.r[0] * p.x + t.r[1] * p.y + t.r[2] * p.z,
          t.r[3] * p.x + t.r[4] * p.y + t.r[5] * p.z,
          t.r[6] * p.x + t.r[7] * p.y + t.r[8] * p.z};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) {
        s += a.r[static_cast<std::size_t>(3 * i + k)] * b.r[static_cast<std::size_t>(3 * k + j)];
      }
      out.r[static_cast<std::size_t>(3 * i + j)] = s;
    }
  }
  out.t = rotate(a, b.t) + a.t;
  if (orthonormality_deviation(out) > kDriftTol) out = orthonormalized(out);
  return out;
}

RigidTransform invert(const RigidTransform& t) {
  RigidTransform out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      out.r[static_cast<std::size_t>(3 * i + j)] = t.r[static_cast<std::size_t>(3 * j + i)];
    }
  }
  out.t = -1.0 * rotate(out, t.t);
  return out;
}

RigidTransform relative_transform(const RigidTransform& ti, const RigidTransform& tj) {
  return compose(invert(ti), tj);
}

RigidTransform frame_from_three_points(Point3 n, Point3 ca, Point3 c, std::int64_t residue) {
  const auto degenerate = [residue](const char* why) {
    raise(ErrorCode::degenerate_frame,
          "degenerate frame at residue " + std::to_string(residue) + ": " + why);
  };
  if (!finite(n) || !finite(ca) || !finite(c)) degenerate("non-finite input point");
  const Point3 v1 = c - ca;
  const double l1 = norm(v1);
  if (l1 <= kDegenerateTol) degenerate("C coincides with CA");
  const Point3 e1 = (1.0 / l1) * v1;
  const Point3 vn = n - ca;
  const Point3 rej = vn - dot(e1, vn) * e1;
  const double l2 = norm(rej);
  if (l2 <= kDegenerateTol) degenerate("N is collinear with CA and C");
  const Point3 e2 = (1.0 / l2) * rej;
  const Point3 e3 = cross(e1, e2);
  return from_columns(e1, e2, e3, ca);
}

double orthonormality_deviation(const RigidTransform& t) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) {
        s += t.r[static_cast<std::size_t>(3 * k + i)] * t.r[static_cast<std::size_t>(3 * k + j)];
      }
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

double rotation_det(const RigidTransform& t) {
  const auto& r = t.r;
  return r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
         r[2] * (r[3] * r[7] - r[4] * r[6]);
}

RigidTransform orthonormalized(const RigidTransform& t) {
  Point3 c1 = t.column(0);
  const double l1 = norm(c1);
  if (l1 < kDegenerateTol) raise(ErrorCode::degenerate_frame, "cannot orthonormalize a collapsed rotation");
  c1 = (1.0 / l1) * c1;
  Point3 c2 = t.column(1);
  c2 = c2 - dot(c1, c2) * c1;
  const double l2 = norm(c2);
  if (l2 < kDegenerateTol) raise(ErrorCode::degenerate_frame, "cannot orthonormalize a collapsed rotation");
  c2 = (1.0 / l2) * c2;
  const Point3 c3 = cross(c1, c2);
  return from_columns(c1, c2, c3, t.t);
}

RigidTransform random_rigid(num::Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double qx = std::sqrt(1.0 - u1) * std::sin(2.0 * M_PI * u2);
  const double qy = std::sqrt(1.0 - u1) * std::cos(2.0 * M_PI * u2);
  const double qz = std::sqrt(u1) * std::sin(2.0 * M_PI * u3);
  const double qw = std::sqrt(u1) * std::cos(2.0 * M_PI * u3);
  RigidTransform out;
  out.r = {1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw),     2 * (qx * qz + qy * qw),
           2 * (qx * qy + qz * qw),     1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
           2 * (qx * qz - qy * qw),     2 * (qy * qz + qx * qw),     1 - 2 * (qx * qx + qy * qy)};
  out.t = {rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
  return out;
}

RigidTransform random_rigid(std::uint64_t seed) {
  num::Rng rng(seed);
  return random_rigid(rng);
}

}  // namespace vfn::geom
