#include "ngash/procedural.hpp"

#include <cmath>
#include <numbers>

namespace ngash::procedural {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint32_t u32(int v) { return static_cast<std::uint32_t>(v); }

Mesh finish(Mesh m) {
  m.albedo.assign(m.vertices.size(), Vec3::Ones());
  return compute_normals(std::move(m));
}

}  // namespace

Mesh torus(double major_radius, double minor_radius, int rings, int segments,
           double bump_amplitude, int bump_frequency) {
  Mesh m;
  m.vertices.reserve(static_cast<std::size_t>(rings) * segments);
  for (int i = 0; i < rings; ++i) {
    double u = 2.0 * kPi * i / rings;
    for (int j = 0; j < segments; ++j) {
      double v = 2.0 * kPi * j / segments;
      double r = minor_radius *
                 (1.0 + bump_amplitude * std::sin(bump_frequency * u) *
                            std::cos(bump_frequency * v));
      double ring = major_radius + r * std::cos(v);
      m.vertices.emplace_back(ring * std::cos(u), r * std::sin(v),
                              ring * std::sin(u));
    }
  }
  auto idx = [&](int i, int j) {
    return u32(((i + rings) % rings) * segments + ((j + segments) % segments));
  };
  for (int i = 0; i < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      auto a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1),
           d = idx(i, j + 1);
      m.triangles.push_back({a, c, b});
      m.triangles.push_back({a, d, c});
    }
  return finish(std::move(m));
}

Mesh uv_sphere(double radius, int stacks, int slices) {
  Mesh m;
  m.vertices.emplace_back(0.0, radius, 0.0);
  for (int i = 1; i < stacks; ++i) {
    double theta = kPi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      double phi = 2.0 * kPi * j / slices;
      m.vertices.emplace_back(radius * std::sin(theta) * std::cos(phi),
                              radius * std::cos(theta),
                              radius * std::sin(theta) * std::sin(phi));
    }
  }
  m.vertices.emplace_back(0.0, -radius, 0.0);
  const auto south = u32(static_cast<int>(m.vertices.size()) - 1);
  auto ring = [&](int i, int j) { return u32(1 + (i - 1) * slices + (j % slices)); };
  for (int j = 0; j < slices; ++j) m.triangles.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i + 1 < stacks; ++i)
    for (int j = 0; j < slices; ++j) {
      m.triangles.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)});
      m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)});
    }
  for (int j = 0; j < slices; ++j)
    m.triangles.push_back({south, ring(stacks - 1, j), ring(stacks - 1, j + 1)});
  return finish(std::move(m));
}

Mesh grid_plane(double half_size, int n, double height) {
  Mesh m;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      m.vertices.emplace_back(-half_size + 2.0 * half_size * j / n, height,
                              -half_size + 2.0 * half_size * i / n);
  auto idx = [&](int i, int j) { return u32(i * (n + 1) + j); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // +Y facing: (x right, z down the rows) => wind a, c, b.
      m.triangles.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
      m.triangles.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
    }
  return finish(std::move(m));
}

Mesh cube(double h) {
  Mesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back((i & 1) ? h : -h, (i & 2) ? h : -h,
                            (i & 4) ? h : -h);
  // Outward CCW faces. Each fan starts at an even-parity corner so every
  // face diagonal joins corners 0, 3, 5, 6; corners then see equal weights.
  const std::uint32_t f[6][4] = {{0, 4, 6, 2}, {3, 7, 5, 1}, {0, 1, 5, 4},
                                 {6, 7, 3, 2}, {0, 2, 3, 1}, {5, 7, 6, 4}};
  for (const auto& q : f) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return finish(std::move(m));
}

Mesh box(double h, int n, bool inward) {
  std::vector<Mesh> faces;
  // Each face as a +Y grid rotated into place.
  for (int axis = 0; axis < 3; ++axis)
    for (int side : {-1, 1}) {
      Mesh g = grid_plane(h, n, 0.0);
      for (auto& v : g.vertices) {
        Vec3 p;
        // Map the grid's (x, z) to the two tangent axes, +Y to the face axis.
        if (axis == 0)
          p = Vec3(side * h, v.z(), v.x());
        else if (axis == 1)
          p = Vec3(v.x(), side * h, v.z());
        else
          p = Vec3(v.z(), v.x(), side * h);
        v = p;
      }
      Mesh oriented = compute_normals(g);
      Vec3 want = Vec3::Zero();
      want[axis] = inward ? -side : side;
      if (oriented.normals.front().dot(want) < 0)
        for (auto& t : g.triangles) std::swap(t[1], t[2]);
      faces.push_back(std::move(g));
    }
  Mesh m = merge(faces);
  m.normals.clear();
  return finish(std::move(m));
}

Mesh merge(const std::vector<Mesh>& parts) {
  Mesh m;
  bool normals = true;
  for (const auto& p : parts) normals = normals && p.has_normals();
  for (const auto& p : parts) {
    auto base = u32(static_cast<int>(m.vertices.size()));
    m.vertices.insert(m.vertices.end(), p.vertices.begin(), p.vertices.end());
    if (normals) m.normals.insert(m.normals.end(), p.normals.begin(), p.normals.end());
    for (std::size_t i = 0; i < p.vertices.size(); ++i)
      m.albedo.push_back(i < p.albedo.size() ? p.albedo[i] : Vec3::Ones());
    for (auto t : p.triangles) m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  return m;
}

Mesh translated(Mesh mesh, const Vec3& offset) {
  for (auto& v : mesh.vertices) v += offset;
  return mesh;
}

}  // namespace ngash::procedural
