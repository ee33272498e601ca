#pragma once

#include "ngash/mesh.hpp"

namespace ngash::procedural {

// Closed torus around the Y axis with rings*segments vertices. A non-zero
// bump amplitude ripples the tube radius, which adds self-occlusion.
Mesh torus(double major_radius, double minor_radius, int rings, int segments,
           double bump_amplitude = 0.0, int bump_frequency = 0);

// Closed UV sphere: 2 poles plus (stacks-1)*slices ring vertices.
Mesh uv_sphere(double radius, int stacks, int slices);

// Square grid in the XZ plane (y = height) facing +Y, (n+1)^2 vertices.
Mesh grid_plane(double half_size, int n, double height = 0.0);

// Unit-style cube [-h,h]^3 with 8 shared vertices and 12 triangles, CCW
// when viewed from outside.
Mesh cube(double half_size);

// Box [-h,h]^3 with each face subdivided n x n; faces are not welded.
// inward = true flips winding so normals face the interior (a closed room).
Mesh box(double half_size, int n, bool inward);

// Concatenation; normals are kept only if every part has them.
Mesh merge(const std::vector<Mesh>& parts);

Mesh translated(Mesh mesh, const Vec3& offset);

}  // namespace ngash::procedural
