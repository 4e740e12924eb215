// mtlplan/geometry.hpp -- planar convex polygons as halfspace intersections
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtlplan {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed halfspace {x : h.x <= k}. Normals are kept at unit length so offsets
// are plain distances and inflation is k + r.
struct Halfspace {
  Eigen::Vector2d h;
  double k = 0.0;

  Halfspace() : h(0, 0) {}
  Halfspace(const Eigen::Vector2d& normal, double offset) : h(normal), k(offset) {
    double n = h.norm();
    if (!(n > 0.0)) throw GeometryError("halfspace normal must be nonzero");
    h /= n;
    k /= n;
  }

  bool contains(const Eigen::Vector2d& x, double tol = 0.0) const { return h.dot(x) <= k + tol; }
  // signed distance of x to the boundary; positive outside
  double violation(const Eigen::Vector2d& x) const { return h.dot(x) - k; }
};

// Convex polygon stored as counter-clockwise vertices plus one outward
// halfspace per edge. Vertices given clockwise are reversed on construction;
// collinear or reflex corners are rejected.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Eigen::Vector2d> vertices) : verts_(std::move(vertices)) {
    if (verts_.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
    double area2 = 0.0;  // shoelace, positive for counter-clockwise
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      const auto& a = verts_[i];
      const auto& b = verts_[(i + 1) % verts_.size()];
      area2 += a.x() * b.y() - b.x() * a.y();
    }
    if (area2 < 0.0) std::reverse(verts_.begin(), verts_.end());

    double scale = 0.0;
    for (const auto& v : verts_) scale = std::max(scale, v.lpNorm<Eigen::Infinity>());
    double eps = 1e-9 * std::max(1.0, scale * scale);
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      Eigen::Vector2d e0 = verts_[(i + 1) % verts_.size()] - verts_[i];
      Eigen::Vector2d e1 = verts_[(i + 2) % verts_.size()] - verts_[(i + 1) % verts_.size()];
      double cross = e0.x() * e1.y() - e0.y() * e1.x();
      if (cross <= eps)
        throw GeometryError(cross > -eps ? "degenerate (collinear) polygon vertices"
                                         : "polygon is not convex");
    }

    hs_.reserve(verts_.size());
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      const auto& a = verts_[i];
      const auto& b = verts_[(i + 1) % verts_.size()];
      Eigen::Vector2d d = b - a;
      Eigen::Vector2d n(d.y(), -d.x());  // outward for counter-clockwise order
      hs_.emplace_back(n, n.dot(a));
    }
  }

  static ConvexPolygon axis_aligned_box(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
    if (!(lo.x() < hi.x() && lo.y() < hi.y()))
      throw GeometryError("box requires lo < hi componentwise");
    return ConvexPolygon({{lo.x(), lo.y()}, {hi.x(), lo.y()}, {hi.x(), hi.y()}, {lo.x(), hi.y()}});
  }

  const std::vector<Eigen::Vector2d>& vertices() const { return verts_; }
  const std::vector<Halfspace>& halfspaces() const { return hs_; }

  bool contains(const Eigen::Vector2d& x, double tol = 0.0) const {
    for (const auto& hs : hs_)
      if (!hs.contains(x, tol)) return false;
    return true;
  }

  // largest boundary violation; negative strictly inside, positive outside
  double signed_distance_bound(const Eigen::Vector2d& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& hs : hs_) worst = std::max(worst, hs.violation(x));
    return worst;
  }

  Eigen::Vector2d centroid() const {
    Eigen::Vector2d c(0, 0);
    for (const auto& v : verts_) c += v;
    return c / static_cast<double>(verts_.size());
  }

  std::pair<Eigen::Vector2d, Eigen::Vector2d> bounding_box() const {
    Eigen::Vector2d lo = verts_[0], hi = verts_[0];
    for (const auto& v : verts_) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return {lo, hi};
  }

  ConvexPolygon translated(const Eigen::Vector2d& d) const {
    std::vector<Eigen::Vector2d> moved = verts_;
    for (auto& v : moved) v += d;
    return ConvexPolygon(std::move(moved));
  }

  // Outward offset: every halfspace moves out by r, vertices re-derived by
  // intersecting adjacent offset edges. Contains the Minkowski sum with the
  // r-ball (corners stay sharp rather than rounding).
  ConvexPolygon inflated(double r) const {
    if (r < 0.0) throw GeometryError("inflation margin must be >= 0");
    if (r == 0.0) return *this;
    std::vector<Eigen::Vector2d> out(verts_.size());
    std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
      // vertex i sits on edges i-1 and i
      const Halfspace& p = hs_[(i + n - 1) % n];
      const Halfspace& q = hs_[i];
      Eigen::Matrix2d lhs;
      lhs.row(0) = p.h.transpose();
      lhs.row(1) = q.h.transpose();
      Eigen::Vector2d rhs(p.k + r, q.k + r);
      out[i] = lhs.partialPivLu().solve(rhs);
    }
    return ConvexPolygon(std::move(out));
  }

 private:
  std::vector<Eigen::Vector2d> verts_;
  std::vector<Halfspace> hs_;
};

inline const std::vector<Halfspace>& halfspaces_of(const ConvexPolygon& p) {
  return p.halfspaces();
}

inline ConvexPolygon inflate(const ConvexPolygon& p, double r) { return p.inflated(r); }

}  // namespace mtlplan
