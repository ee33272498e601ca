#include "ngash/cli.hpp"

#include <chrono>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ngash/bundle.hpp"
#include "ngash/cga.hpp"
#include "ngash/dataset.hpp"
#include "ngash/errors.hpp"
#include "ngash/lightprobe.hpp"
#include "ngash/neural.hpp"
#include "ngash/serve.hpp"
#include "ngash/shading.hpp"
#include "ngash/text_io.hpp"
#include "ngash/weights_io.hpp"

namespace ngash::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Thrown for bad flag values that CLI11 cannot catch itself.
struct UsageError : Error {
  using Error::Error;
};

void print_times(const std::string& what, double core, double total) {
  std::cout << what << "_seconds=" << format_double(core) << "\n"
            << "total_seconds=" << format_double(total) << "\n";
}

sh::SampleMode parse_mode(const std::string& s) {
  try {
    return sh::sample_mode_from_string(s);
  } catch (const Error&) {
    throw UsageError("--mode must be sphere or hemisphere, got '" + s + "'");
  }
}

cga::Quaternion checked_quaternion(const std::vector<double>& q) {
  cga::Quaternion out{q[0], q[1], q[2], q[3]};
  const double n = out.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-3) {
    std::ostringstream msg;
    msg << "quaternion (" << q[0] << ", " << q[1] << ", " << q[2] << ", " << q[3]
        << ") has norm " << n << "; normalize it (divide each component by " << n << ")";
    throw UsageError(msg.str());
  }
  return out.normalized();
}

Mesh load_mesh(const fs::path& path) { return ensure_normals(load_obj(path)); }

struct PrecomputeArgs {
  std::string mesh, out, mode = "sphere";
  int samples = 5;
  bool shadowed = false;
  std::uint64_t seed = 1;
};

int cmd_precompute(const PrecomputeArgs& a) {
  const auto t0 = Clock::now();
  if (a.samples < 1) throw UsageError("--samples must be at least 1");
  const Mesh mesh = load_mesh(a.mesh);
  dataset::OracleConfig cfg{a.samples, parse_mode(a.mode), a.shadowed, a.seed};
  const auto t1 = Clock::now();
  const TransferMatrix t = dataset::run_oracle(mesh, cfg);
  const double core = seconds_since(t1);
  write_transfer_file(a.out, t);
  std::cout << "vertices=" << mesh.vertex_count() << "\nsamples=" << a.samples * a.samples
            << "\nshadowed=" << (a.shadowed ? 1 : 0) << "\n";
  print_times("precompute", core, seconds_since(t0));
  return kExitOk;
}

struct ProjectArgs {
  std::string hdr, out;
  int samples = 100;
  std::uint64_t seed = 1;
};

int cmd_project_light(const ProjectArgs& a) {
  const auto t0 = Clock::now();
  if (a.samples < 1) throw UsageError("--samples must be at least 1");
  const auto map = lightprobe::load_hdr(a.hdr);
  const auto t1 = Clock::now();
  const auto samples = sh::generate_samples(a.samples, a.seed, sh::SampleMode::Sphere);
  const auto light = lightprobe::project_light(map, samples);
  const double core = seconds_since(t1);
  sh::write_light_file(a.out, light,
                       {"ngash-light source=" + fs::path(a.hdr).filename().string() +
                        " samples=" + std::to_string(samples.size()) +
                        " seed=" + std::to_string(a.seed)});
  print_times("project", core, seconds_since(t0));
  return kExitOk;
}

void print_band_norms(const std::string& label, const sh::LightCoefficients& l) {
  const auto n = sh::band_norms(l);
  for (Eigen::Index b = 0; b < n.rows(); ++b)
    std::cout << label << "_band" << b << "=" << format_double(n(b, 0)) << " "
              << format_double(n(b, 1)) << " " << format_double(n(b, 2)) << "\n";
}

struct RotateArgs {
  std::string coeffs, out;
  std::vector<double> quat;
};

int cmd_rotate_light(const RotateArgs& a) {
  const auto q = checked_quaternion(a.quat);
  const auto light = sh::read_light_file(a.coeffs);
  const auto rotated = sh::rotate_sh(light, q);
  print_band_norms("before", light);
  print_band_norms("after", rotated);
  sh::write_light_file(a.out, rotated);
  return kExitOk;
}

struct TrainArgs {
  std::string manifest, out, history, select = "final";
  int epochs = 200;
  std::size_t batch_size = 256;
  double lr = 1e-3, split = 0.8, beta1 = 0.9, beta2 = 0.999;
  std::uint64_t seed = 1;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  const auto t0 = Clock::now();
  if (a.select != "final" && a.select != "best")
    throw UsageError("--select must be final or best");
  const auto manifest = dataset::read_manifest(a.manifest);
  const auto pairs = dataset::load_pairs(manifest);
  neural::TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch_size;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.beta1 = a.beta1;
  cfg.beta2 = a.beta2;
  cfg.split_fraction = a.split;
  try {
    cfg.check();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  std::string history = "epoch,train_loss,validation_mse\n";
  const auto t1 = Clock::now();
  auto result = neural::train(pairs, cfg, [&](const neural::EpochRecord& r) {
    history += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," +
               format_double(r.validation_mse) + "\n";
    if (!a.quiet && (r.epoch == 1 || r.epoch % 10 == 0 || r.epoch == cfg.epochs))
      std::cout << "epoch " << r.epoch << " train_loss=" << r.train_loss
                << " validation_mse=" << r.validation_mse << std::endl;
  });
  const double core = seconds_since(t1);
  const auto& chosen = a.select == "best" ? result.best_weights : result.final_weights;
  neural::save_weights(chosen, a.out);
  if (!a.history.empty()) write_text_file(a.history, history);

  neural::Matrix x(Eigen::Index(pairs.size()), neural::kInputWidth);
  neural::Matrix y(Eigen::Index(pairs.size()), neural::kOutputWidth);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (int k = 0; k < neural::kInputWidth; ++k) x(Eigen::Index(i), k) = pairs[i].input[k];
    for (int k = 0; k < neural::kOutputWidth; ++k) y(Eigen::Index(i), k) = pairs[i].target[k];
  }
  std::cout << "pairs=" << pairs.size() << "\ntrain_count=" << result.train_count
            << "\nvalidation_count=" << result.validation_count << "\nmse="
            << format_double(neural::mean_squared_error(neural::forward_eval(chosen, x), y))
            << "\n";
  print_times("train", core, seconds_since(t0));
  return kExitOk;
}

struct PredictArgs {
  std::string weights, mesh, out;
};

int cmd_predict(const PredictArgs& a) {
  const auto t0 = Clock::now();
  const auto w = neural::load_weights(a.weights);
  const Mesh mesh = load_mesh(a.mesh);
  const auto t1 = Clock::now();
  const auto t = neural::predict_mesh(w, mesh);
  const double core = seconds_since(t1);
  write_transfer_file(a.out, t);
  std::cout << "vertices=" << mesh.vertex_count() << "\n";
  print_times("predict", core, seconds_since(t0));
  return kExitOk;
}

struct ShadeArgs {
  std::string coeffs, light, out, ppm, mesh;
  double intensity = shading::kDefaultIntensity;
  int size = 256;
};

int cmd_shade(const ShadeArgs& a) {
  if (a.out.empty() && a.ppm.empty()) throw UsageError("shade needs --out and/or --ppm");
  if (!a.ppm.empty() && a.mesh.empty()) throw UsageError("--ppm needs --mesh");
  const auto t = read_transfer_file(a.coeffs);
  const auto l = sh::read_light_file(a.light);
  const auto colors = shading::shade(t, l, a.intensity);
  if (!a.out.empty()) shading::write_colors_file(a.out, colors);
  if (!a.ppm.empty()) {
    const Mesh mesh = load_mesh(a.mesh);
    if (mesh.vertex_count() != t.vertex_count())
      throw IntegrityError("mesh has " + std::to_string(mesh.vertex_count()) +
                           " vertices, coefficients have " + std::to_string(t.vertex_count()) +
                           " rows");
    write_text_file(a.ppm, shading::render_ppm(mesh, colors, a.size));
  }
  std::cout << "vertices=" << t.vertex_count() << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string mesh, weights, out, mode = "sphere";
  int samples = 5;
  bool unshadowed = false;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a) {
  const Mesh mesh = load_mesh(a.mesh);
  const auto w = neural::load_weights(a.weights);
  dataset::OracleConfig cfg{a.samples, parse_mode(a.mode), !a.unshadowed, a.seed};

  auto t0 = Clock::now();
  const TransferMatrix oracle = dataset::run_oracle(mesh, cfg);
  const double oracle_seconds = seconds_since(t0);
  t0 = Clock::now();
  const TransferMatrix predicted = neural::predict_mesh(w, mesh);
  const double predict_seconds = seconds_since(t0);

  const Eigen::ArrayXXd r = (predicted.rows - oracle.rows).array();
  const double mse = r.square().mean();
  const double mean = r.mean();
  const double std = std::sqrt((r - mean).square().mean());
  const double speedup = predict_seconds > 0 ? oracle_seconds / predict_seconds
                                             : std::numeric_limits<double>::infinity();
  std::ostringstream report;
  report << "{\"mesh\":\"" << fs::path(a.mesh).filename().string() << "\""
         << ",\"vertices\":" << mesh.vertex_count() << ",\"samples\":" << a.samples * a.samples
         << ",\"shadowed\":" << (cfg.shadowed ? "true" : "false")
         << ",\"oracle_seconds\":" << format_double(oracle_seconds)
         << ",\"predict_seconds\":" << format_double(predict_seconds)
         << ",\"speedup\":" << format_double(speedup) << ",\"mse\":" << format_double(mse)
         << ",\"std\":" << format_double(std) << "}\n";
  std::cout << report.str();
  if (!a.out.empty()) write_text_file(a.out, report.str());
  return kExitOk;
}

struct ExportArgs {
  std::string mesh, coeffs, weights, out;
  std::vector<std::string> lights;
};

int cmd_export_bundle(const ExportArgs& a) {
  if (a.coeffs.empty() == a.weights.empty())
    throw UsageError("export-bundle needs exactly one of --coeffs or --weights");
  if (a.lights.empty()) throw UsageError("export-bundle needs at least one --light");
  bundle::Bundle b;
  b.mesh = load_mesh(a.mesh);
  if (!a.weights.empty()) {
    b.weights = neural::load_weights(a.weights);
    b.transfer = neural::predict_mesh(*b.weights, b.mesh);
  } else {
    b.transfer = read_transfer_file(a.coeffs);
  }
  for (const auto& spec : a.lights) {
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    const std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
    b.lights.push_back({name, sh::read_light_file(path)});
  }
  b.metadata["mesh"] = fs::path(a.mesh).filename().string();
  b.metadata["transfer_source"] = b.transfer.meta.source;
  b.metadata["intensity_default"] = format_double(shading::kDefaultIntensity);
  write_text_file(a.out, bundle::to_json(b));
  std::cout << "vertices=" << b.mesh.vertex_count() << "\nlights=" << b.lights.size() << "\n";
  return kExitOk;
}

BundleServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  std::string bundle, host = "127.0.0.1", assets;
  int port = 8080;
};

int cmd_serve(const ServeArgs& a) {
  const std::string doc = read_text_file(a.bundle);
  bundle::from_json(doc);  // refuse to serve an inconsistent document
  BundleServer server(doc, a.assets);
  const int port = server.bind(a.host, a.port);
  std::cout << "serving http://" << a.host << ":" << port << "/ (bundle at /bundle)" << std::endl;
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

struct GenerateArgs {
  std::string mesh_dir, out, mode = "sphere";
  int samples = 5;
  bool unshadowed = false;
  std::uint64_t seed = 1;
};

int cmd_generate(const GenerateArgs& a) {
  const auto t0 = Clock::now();
  if (a.samples < 1) throw UsageError("--samples must be at least 1");
  dataset::OracleConfig cfg{a.samples, parse_mode(a.mode), !a.unshadowed, a.seed};
  const auto m = dataset::generate(a.mesh_dir, a.out, cfg);
  std::cout << "meshes=" << m.entries.size() << "\nskipped=" << m.failures.size() << "\n";
  for (const auto& [path, why] : m.failures) std::cerr << "skipped " << path << ": " << why << "\n";
  print_times("generate", seconds_since(t0), seconds_since(t0));
  return m.failures.empty() ? kExitOk : kExitData;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Neural-GASh: precomputed radiance transfer with a motor-conditioned MLP"};
  app.name("ngash");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  int status = kExitOk;
  std::function<int()> action;

  PrecomputeArgs pre;
  auto* c = app.add_subcommand("precompute", "Run the transfer oracle on a mesh");
  c->add_option("mesh", pre.mesh, "OBJ mesh")->required()->check(CLI::ExistingFile);
  c->add_option("--out,-o", pre.out, "Coefficient file to write")->required();
  c->add_option("--samples", pre.samples, "Samples per axis (N = samples^2)")->capture_default_str();
  c->add_option("--mode", pre.mode, "sphere | hemisphere")->capture_default_str();
  c->add_flag("--shadowed", pre.shadowed, "Include self-shadowing");
  c->add_option("--seed", pre.seed, "Sample seed")->capture_default_str();
  c->callback([&] { action = [&] { return cmd_precompute(pre); }; });

  ProjectArgs proj;
  c = app.add_subcommand("project-light", "Project a Radiance .hdr probe onto SH");
  c->add_option("hdr", proj.hdr, "Equirectangular .hdr")->required()->check(CLI::ExistingFile);
  c->add_option("--out,-o", proj.out, "Light coefficient file")->required();
  c->add_option("--samples", proj.samples, "Samples per axis (N = samples^2)")->capture_default_str();
  c->add_option("--seed", proj.seed, "Sample seed")->capture_default_str();
  c->callback([&] { action = [&] { return cmd_project_light(proj); }; });

  RotateArgs rot;
  c = app.add_subcommand("rotate-light", "Rotate light coefficients by a unit quaternion");
  c->add_option("coeffs", rot.coeffs, "Light coefficient file")->required()->check(CLI::ExistingFile);
  c->add_option("--quat", rot.quat, "w x y z")->required()->expected(4);
  c->add_option("--out,-o", rot.out, "Rotated light file")->required();
  c->callback([&] { action = [&] { return cmd_rotate_light(rot); }; });

  TrainArgs tr;
  c = app.add_subcommand("train", "Train the network on a dataset manifest");
  c->add_option("manifest", tr.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  c->add_option("--out,-o", tr.out, "Weights directory")->required();
  c->add_option("--epochs", tr.epochs)->capture_default_str();
  c->add_option("--batch-size", tr.batch_size)->capture_default_str();
  c->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  c->add_option("--beta1", tr.beta1)->capture_default_str();
  c->add_option("--beta2", tr.beta2)->capture_default_str();
  c->add_option("--split", tr.split, "Training fraction")->capture_default_str();
  c->add_option("--seed", tr.seed)->capture_default_str();
  c->add_option("--select", tr.select, "final | best (validation)")->capture_default_str();
  c->add_option("--history", tr.history, "Write per-epoch CSV");
  c->add_flag("--quiet", tr.quiet);
  c->callback([&] { action = [&] { return cmd_train(tr); }; });

  PredictArgs pr;
  c = app.add_subcommand("predict", "Predict per-vertex transfer with trained weights");
  c->add_option("weights", pr.weights, "Weights directory")->required()->check(CLI::ExistingDirectory);
  c->add_option("mesh", pr.mesh, "OBJ mesh")->required()->check(CLI::ExistingFile);
  c->add_option("--out,-o", pr.out, "Coefficient file")->required();
  c->callback([&] { action = [&] { return cmd_predict(pr); }; });

  ShadeArgs sa;
  c = app.add_subcommand("shade", "Vertex colors from transfer and light coefficients");
  c->add_option("coeffs", sa.coeffs, "Coefficient file")->required()->check(CLI::ExistingFile);
  c->add_option("light", sa.light, "Light file")->required()->check(CLI::ExistingFile);
  c->add_option("--intensity", sa.intensity, "Multiplier applied with the 1/255 factor")
      ->capture_default_str();
  c->add_option("--out,-o", sa.out, "Vertex color file");
  c->add_option("--ppm", sa.ppm, "Flat-shaded orthographic preview");
  c->add_option("--mesh", sa.mesh, "Mesh for --ppm")->check(CLI::ExistingFile);
  c->add_option("--size", sa.size, "Preview size in pixels")->capture_default_str();
  c->callback([&] { action = [&] { return cmd_shade(sa); }; });

  BenchArgs be;
  c = app.add_subcommand("bench", "Time oracle vs network on one mesh");
  c->add_option("mesh", be.mesh, "OBJ mesh")->required()->check(CLI::ExistingFile);
  c->add_option("weights", be.weights, "Weights directory")->required()->check(CLI::ExistingDirectory);
  c->add_option("--samples", be.samples, "Oracle samples per axis")->capture_default_str();
  c->add_option("--mode", be.mode)->capture_default_str();
  c->add_flag("--unshadowed", be.unshadowed, "Oracle without visibility");
  c->add_option("--seed", be.seed)->capture_default_str();
  c->add_option("--out,-o", be.out, "Write the JSON report here too");
  c->callback([&] { action = [&] { return cmd_bench(be); }; });

  ExportArgs ex;
  c = app.add_subcommand("export-bundle", "Write the viewer bundle");
  c->add_option("mesh", ex.mesh, "OBJ mesh")->required()->check(CLI::ExistingFile);
  c->add_option("--coeffs", ex.coeffs, "Coefficient file")->check(CLI::ExistingFile);
  c->add_option("--weights", ex.weights, "Weights directory (transfer is predicted)")
      ->check(CLI::ExistingDirectory);
  c->add_option("--light", ex.lights, "[name=]light file, repeatable");
  c->add_option("--out,-o", ex.out, "Bundle JSON")->required();
  c->callback([&] { action = [&] { return cmd_export_bundle(ex); }; });

  ServeArgs se;
  c = app.add_subcommand("serve", "Serve a bundle to the viewer");
  c->add_option("bundle", se.bundle, "Bundle JSON")->required()->check(CLI::ExistingFile);
  c->add_option("--port", se.port)->capture_default_str();
  c->add_option("--host", se.host)->capture_default_str();
  c->add_option("--assets", se.assets, "Viewer asset directory")->check(CLI::ExistingDirectory);
  c->callback([&] { action = [&] { return cmd_serve(se); }; });

  GenerateArgs ge;
  c = app.add_subcommand("generate", "Build a training dataset from a mesh directory");
  c->add_option("mesh_dir", ge.mesh_dir)->required()->check(CLI::ExistingDirectory);
  c->add_option("--out,-o", ge.out, "Output directory")->required();
  c->add_option("--samples", ge.samples, "Samples per axis")->capture_default_str();
  c->add_option("--mode", ge.mode)->capture_default_str();
  c->add_flag("--unshadowed", ge.unshadowed, "Oracle without visibility");
  c->add_option("--seed", ge.seed)->capture_default_str();
  c->callback([&] { action = [&] { return cmd_generate(ge); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    status = action ? action() : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "ngash: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "ngash: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "ngash: " << e.what() << "\n";
    return kExitRuntime;
  }
  return status;
}

}  // namespace ngash::cli
