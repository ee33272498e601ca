#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ngash/mesh.hpp"

namespace ngash {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool contains(const Aabb& b) const {
    return (lo.array() <= b.lo.array()).all() && (hi.array() >= b.hi.array()).all();
  }
};

struct RayStats {
  std::size_t nodes_visited = 0;
  std::size_t triangles_tested = 0;
};

class Bvh {
 public:
  static constexpr std::uint32_t kLeafSize = 4;

  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first slot in order(); inner: left child
    std::uint32_t count = 0;  // > 0 for leaves
    std::uint32_t right = 0;  // inner: right child
    bool is_leaf() const { return count > 0; }
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  // Triangle id stored at each leaf slot.
  const std::vector<std::uint32_t>& order() const { return order_; }
  std::size_t triangle_count() const { return order_.size(); }

  // Any hit with t > t_min along the ray.
  bool occluded(const Vec3& origin, const Vec3& dir, double t_min,
                RayStats* stats = nullptr) const;

  friend Bvh build_bvh(const Mesh& mesh);

 private:
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<std::array<Vec3, 3>> tris_;  // in slot order
};

// Median split on the longest axis of the centroid bounds, leaves <= 4.
Bvh build_bvh(const Mesh& mesh);

bool ray_occluded(const Bvh& bvh, const Vec3& origin, const Vec3& dir,
                  double t_min, RayStats* stats = nullptr);

// Reference: loop over every triangle.
bool ray_occluded_brute(const Mesh& mesh, const Vec3& origin, const Vec3& dir,
                        double t_min);

// Watertight ray/triangle test; hit distance along dir (may be negative for
// hits behind the origin), or nullopt on a miss.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                          const Vec3& b, const Vec3& c);

}  // namespace ngash
