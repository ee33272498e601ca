// Procedural test assets: meshes as OBJ and synthetic probes as .hdr.
#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "ngash/errors.hpp"
#include "ngash/lightprobe.hpp"
#include "ngash/procedural.hpp"

using namespace ngash;

int main(int argc, char** argv) {
  CLI::App app{"ngash-meshgen: procedural meshes and probes"};
  app.require_subcommand(1);
  std::string out;
  Mesh mesh;
  bool wrote_probe = false;

  double major = 1.0, minor = 0.35, bump = 0.0;
  int rings = 24, segments = 28, freq = 0;
  auto* t = app.add_subcommand("torus", "Torus around Y (rings*segments vertices)");
  t->add_option("--major", major)->capture_default_str();
  t->add_option("--minor", minor)->capture_default_str();
  t->add_option("--rings", rings)->capture_default_str();
  t->add_option("--segments", segments)->capture_default_str();
  t->add_option("--bump", bump, "Tube radius ripple amplitude")->capture_default_str();
  t->add_option("--bump-frequency", freq)->capture_default_str();
  t->add_option("--out,-o", out)->required();
  t->callback([&] { mesh = procedural::torus(major, minor, rings, segments, bump, freq); });

  double radius = 1.0;
  int stacks = 16, slices = 32;
  auto* s = app.add_subcommand("sphere", "UV sphere");
  s->add_option("--radius", radius)->capture_default_str();
  s->add_option("--stacks", stacks)->capture_default_str();
  s->add_option("--slices", slices)->capture_default_str();
  s->add_option("--out,-o", out)->required();
  s->callback([&] { mesh = procedural::uv_sphere(radius, stacks, slices); });

  double half = 1.0;
  int n = 8;
  auto* p = app.add_subcommand("plane", "Grid in XZ facing +Y");
  p->add_option("--half-size", half)->capture_default_str();
  p->add_option("--n", n)->capture_default_str();
  p->add_option("--out,-o", out)->required();
  p->callback([&] { mesh = procedural::grid_plane(half, n); });

  bool inward = false;
  auto* b = app.add_subcommand("box", "Subdivided box (inward = closed room)");
  b->add_option("--half-size", half)->capture_default_str();
  b->add_option("--n", n)->capture_default_str();
  b->add_flag("--inward", inward);
  b->add_option("--out,-o", out)->required();
  b->callback([&] { mesh = procedural::box(half, n, inward); });

  std::string kind = "sky";
  int width = 64;
  auto* pr = app.add_subcommand("probe", "Synthetic equirectangular .hdr probe");
  pr->add_option("--kind", kind, "constant | sky")->capture_default_str();
  pr->add_option("--width", width)->capture_default_str();
  pr->add_option("--out,-o", out)->required();
  pr->callback([&] {
    lightprobe::RadianceMap map;
    if (kind == "constant") {
      map = lightprobe::RadianceMap::constant(width, width / 2, {1.0f, 1.0f, 1.0f});
    } else if (kind == "sky") {
      // Bright warm sun-side sky above a dim ground.
      map = lightprobe::RadianceMap::from_function(width, width / 2, [](const Vec3& d) {
        const float up = float(std::max(0.0, d.y()));
        const float sun = float(std::pow(std::max(0.0, d.dot(Vec3(0.6, 0.6, 0.5).normalized())), 16));
        return lightprobe::Rgb(0.15f + 0.6f * up + 3.0f * sun, 0.15f + 0.7f * up + 2.5f * sun,
                               0.1f + 1.0f * up + 1.5f * sun);
      });
    } else {
      throw CLI::ValidationError("--kind", "must be constant or sky");
    }
    lightprobe::save_hdr(map, out);
    wrote_probe = true;
  });

  try {
    app.parse(argc, argv);
    if (!wrote_probe) save_obj(mesh, out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "ngash-meshgen: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
