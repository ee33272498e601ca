#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ngash {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<std::uint32_t, 3>;

inline const Vec3 kUp{0.0, 1.0, 0.0};

// Indexed triangle mesh. `normals` is either empty (not yet computed) or has
// one unit normal per vertex. `albedo` holds linear RGB in [0,1] per vertex.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<Triangle> triangles;
  std::vector<Vec3> albedo;

  std::size_t vertex_count() const { return vertices.size(); }
  bool has_normals() const { return normals.size() == vertices.size(); }
};

struct ObjStats {
  std::size_t ignored_records = 0;
  std::size_t polygons_split = 0;
  bool normals_from_file = false;
};

Mesh parse_obj(std::string_view text, ObjStats* stats = nullptr);
Mesh load_obj(const std::filesystem::path& path, ObjStats* stats = nullptr);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

// Area-weighted vertex normals. Isolated vertices and vanishing sums get +Y.
Mesh compute_normals(Mesh mesh);

// Returns mesh with normals computed when they are missing.
Mesh ensure_normals(Mesh mesh);

// Throws ValidationError if the Mesh invariants do not hold.
void validate(const Mesh& mesh);

// Unit vector, or +Y when the input has (near) zero length.
Vec3 normalized_or_up(const Vec3& v);

double bounding_box_diagonal(const Mesh& mesh);

// Content hash of positions and normals (exact bit patterns).
std::uint64_t geometry_hash(const Mesh& mesh);

}  // namespace ngash
