#include "ngash/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ngash/errors.hpp"

namespace ngash {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// 1 + 2 * gamma(3): pads the slab exit distance so the box test stays
// conservative under rounding.
constexpr double kSlabPad =
    1.0 + 2.0 * (3.0 * std::numeric_limits<double>::epsilon() * 0.5) /
              (1.0 - 3.0 * std::numeric_limits<double>::epsilon() * 0.5);

bool hit_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir,
             const Vec3& dir, double t_min) {
  double t0 = t_min, t1 = kInf;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return false;
      continue;
    }
    double n = (box.lo[a] - origin[a]) * inv_dir[a];
    double f = (box.hi[a] - origin[a]) * inv_dir[a];
    if (n > f) std::swap(n, f);
    f *= kSlabPad;
    t0 = std::max(t0, n);
    t1 = std::min(t1, f);
    if (t0 > t1) return false;
  }
  return true;
}

struct Builder {
  const Mesh& mesh;
  std::vector<Vec3> centroid;
  std::vector<std::uint32_t> order;
  std::vector<Bvh::Node> nodes;

  Aabb bounds(std::uint32_t begin, std::uint32_t end) const {
    Aabb b;
    for (auto i = begin; i < end; ++i)
      for (auto v : mesh.triangles[order[i]]) b.extend(mesh.vertices[v]);
    return b;
  }

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    auto index = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    nodes[index].box = bounds(begin, end);
    if (end - begin <= Bvh::kLeafSize) {
      nodes[index].first = begin;
      nodes[index].count = end - begin;
      return index;
    }
    Aabb cb;
    for (auto i = begin; i < end; ++i) cb.extend(centroid[order[i]]);
    int axis = 0;
    Vec3 ext = cb.hi - cb.lo;
    if (ext.y() > ext[axis]) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    auto mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid,
                     order.begin() + end, [&](std::uint32_t a, std::uint32_t b) {
                       if (centroid[a][axis] != centroid[b][axis])
                         return centroid[a][axis] < centroid[b][axis];
                       return a < b;
                     });
    auto left = build(begin, mid);
    auto right = build(mid, end);
    nodes[index].first = left;
    nodes[index].right = right;
    return index;
  }
};

}  // namespace

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                          const Vec3& b, const Vec3& c) {
  // Woop, Benthin & Wald, "Watertight Ray/Triangle Intersection" (JCGT 2013).
  int kz = 0;
  if (std::abs(dir.y()) > std::abs(dir[kz])) kz = 1;
  if (std::abs(dir.z()) > std::abs(dir[kz])) kz = 2;
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (dir[kz] < 0.0) std::swap(kx, ky);
  const double sx = dir[kx] / dir[kz];
  const double sy = dir[ky] / dir[kz];
  const double sz = 1.0 / dir[kz];

  const Vec3 pa = a - origin, pb = b - origin, pc = c - origin;
  const double ax = pa[kx] - sx * pa[kz], ay = pa[ky] - sy * pa[kz];
  const double bx = pb[kx] - sx * pb[kz], by = pb[ky] - sy * pb[kz];
  const double cx = pc[kx] - sx * pc[kz], cy = pc[ky] - sy * pc[kz];

  double u = cx * by - cy * bx;
  double v = ax * cy - ay * cx;
  double w = bx * ay - by * ax;
  if (u == 0.0 || v == 0.0 || w == 0.0) {
    using ld = long double;
    u = double(ld(cx) * ld(by) - ld(cy) * ld(bx));
    v = double(ld(ax) * ld(cy) - ld(ay) * ld(cx));
    w = double(ld(bx) * ld(ay) - ld(by) * ld(ax));
  }
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0))
    return std::nullopt;
  const double det = u + v + w;
  if (det == 0.0) return std::nullopt;
  const double t = (u * sz * pa[kz] + v * sz * pb[kz] + w * sz * pc[kz]) / det;
  return t;
}

Bvh build_bvh(const Mesh& mesh) {
  if (mesh.triangles.empty()) throw ContractError("build_bvh: mesh has no triangles");
  Builder b{mesh, {}, {}, {}};
  b.centroid.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles)
    b.centroid.push_back(
        (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0);
  b.order.resize(mesh.triangles.size());
  std::iota(b.order.begin(), b.order.end(), 0u);
  b.nodes.reserve(2 * mesh.triangles.size() / Bvh::kLeafSize + 1);
  b.build(0, static_cast<std::uint32_t>(mesh.triangles.size()));

  Bvh out;
  out.nodes_ = std::move(b.nodes);
  out.order_ = std::move(b.order);
  out.tris_.reserve(out.order_.size());
  for (auto id : out.order_) {
    const auto& t = mesh.triangles[id];
    out.tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]});
  }
  return out;
}

bool Bvh::occluded(const Vec3& origin, const Vec3& dir, double t_min,
                   RayStats* stats) const {
  const Vec3 inv = dir.cwiseInverse();
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (stats) ++stats->nodes_visited;
    if (!hit_box(node.box, origin, inv, dir, t_min)) continue;
    if (node.is_leaf()) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        if (stats) ++stats->triangles_tested;
        const auto& t = tris_[i];
        auto hit = intersect_triangle(origin, dir, t[0], t[1], t[2]);
        if (hit && *hit > t_min) return true;
      }
      continue;
    }
    stack[top++] = node.right;
    stack[top++] = node.first;
  }
  return false;
}

bool ray_occluded(const Bvh& bvh, const Vec3& origin, const Vec3& dir,
                  double t_min, RayStats* stats) {
  return bvh.occluded(origin, dir, t_min, stats);
}

bool ray_occluded_brute(const Mesh& mesh, const Vec3& origin, const Vec3& dir,
                        double t_min) {
  for (const auto& t : mesh.triangles) {
    auto hit = intersect_triangle(origin, dir, mesh.vertices[t[0]],
                                  mesh.vertices[t[1]], mesh.vertices[t[2]]);
    if (hit && *hit > t_min) return true;
  }
  return false;
}

}  // namespace ngash
