#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "topomap/common.hpp"
#include "topomap/pointcloud.hpp"

namespace topomap {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  return {a.x / n, a.y / n, a.z / n};
}

/// Total-least-squares plane through a cloud: the centroid plus an
/// orthonormal frame. basis_u/basis_v span the plane, normal = u x v.
struct SupportPlane {
  Point3 centroid;
  Vec3 normal;
  Vec3 basis_u;
  Vec3 basis_v;
};

/// Per-point plane coordinates: in-plane (u, v) and the signed distance d
/// along the plane normal. Order matches the input cloud.
struct ProjectedPoints {
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> d;

  std::size_t count() const { return d.size(); }
};

namespace detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Cyclic Jacobi for symmetric 3x3 matrices. Eigenvalues land on the
// diagonal of a, eigenvectors in the columns of v.
inline void jacobi_eigen3(Mat3& a, Mat3& v) {
  v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    double diag = std::abs(a[0][0]) + std::abs(a[1][1]) + std::abs(a[2][2]);
    if (off <= 1e-14 * std::max(diag, 1e-300)) return;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        double apq = a[p][q];
        if (apq == 0.0) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < 3; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        a[p][q] = a[q][p] = 0.0;  // exact by construction; scrub rounding residue
        for (int k = 0; k < 3; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  fail(errc::numerical_failure, "jacobi eigensolver did not converge");
}

}  // namespace detail

/// Fits the least-squares support plane (perpendicular distances) via an
/// eigendecomposition of the point covariance. The normal is the smallest
/// eigenvector, oriented so its z component is positive (then y, then x),
/// and basis_u is the in-plane projection of the global x axis.
inline SupportPlane fit_support_plane(const PointCloud& cloud) {
  const std::size_t n = cloud.count();
  if (n < 3) fail(errc::degenerate_cloud, "plane fit needs at least 3 points, got " + std::to_string(n));

  double cx = 0, cy = 0, cz = 0;
  for (const Point3& p : cloud.points) { cx += p.x; cy += p.y; cz += p.z; }
  cx /= static_cast<double>(n); cy /= static_cast<double>(n); cz /= static_cast<double>(n);

  detail::Mat3 cov = {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}};
  for (const Point3& p : cloud.points) {
    double dx = p.x - cx, dy = p.y - cy, dz = p.z - cz;
    cov[0][0] += dx * dx; cov[0][1] += dx * dy; cov[0][2] += dx * dz;
    cov[1][1] += dy * dy; cov[1][2] += dy * dz;
    cov[2][2] += dz * dz;
  }
  cov[1][0] = cov[0][1]; cov[2][0] = cov[0][2]; cov[2][1] = cov[1][2];

  detail::Mat3 evec;
  detail::jacobi_eigen3(cov, evec);
  std::array<double, 3> eval = {cov[0][0], cov[1][1], cov[2][2]};
  int lo = 0, hi = 0;
  for (int i = 1; i < 3; ++i) {
    if (eval[i] < eval[lo]) lo = i;
    if (eval[i] > eval[hi]) hi = i;
  }
  int mid = 3 - lo - hi;
  if (lo == hi) mid = (lo + 1) % 3;  // isotropic cloud: any axis works
  // Collinear clouds have two vanishing eigenvalues and no defined normal.
  if (eval[mid] <= 1e-12 * std::max(eval[hi], 1e-300))
    fail(errc::degenerate_cloud, "points are collinear or coincident");

  Vec3 normal{evec[0][lo], evec[1][lo], evec[2][lo]};
  normal = normalized(normal);
  bool flip = false;
  if (normal.z != 0.0) flip = normal.z < 0.0;
  else if (normal.y != 0.0) flip = normal.y < 0.0;
  else flip = normal.x < 0.0;
  if (flip) normal = normal * -1.0;

  Vec3 axis{1, 0, 0};
  Vec3 u = axis - normal * dot(axis, normal);
  if (norm(u) < 1e-9) {
    axis = {0, 1, 0};
    u = axis - normal * dot(axis, normal);
  }
  u = normalized(u);
  Vec3 v = cross(normal, u);

  SupportPlane plane;
  plane.centroid = {cx, cy, cz};
  plane.normal = normal;
  plane.basis_u = u;
  plane.basis_v = v;
  return plane;
}

inline double signed_distance(const SupportPlane& plane, const Point3& p) {
  Vec3 r{p.x - plane.centroid.x, p.y - plane.centroid.y, p.z - plane.centroid.z};
  return dot(r, plane.normal);
}

inline ProjectedPoints project_to_plane(const PointCloud& cloud, const SupportPlane& plane) {
  ProjectedPoints out;
  const std::size_t n = cloud.count();
  out.u.resize(n);
  out.v.resize(n);
  out.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point3& p = cloud.points[i];
    Vec3 r{p.x - plane.centroid.x, p.y - plane.centroid.y, p.z - plane.centroid.z};
    out.u[i] = dot(r, plane.basis_u);
    out.v[i] = dot(r, plane.basis_v);
    out.d[i] = dot(r, plane.normal);
  }
  return out;
}

}  // namespace topomap
