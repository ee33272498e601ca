#include "ngash/lightprobe.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "ngash/errors.hpp"
#include "ngash/parallel.hpp"
#include "ngash/text_io.hpp"

namespace ngash::lightprobe {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kReductionBlock = 1024;

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  bool at_end() const { return pos >= bytes.size(); }

  std::uint8_t byte(const char* what) {
    if (pos >= bytes.size())
      throw IoError(std::string("truncated HDR data while reading ") + what +
                    " at byte offset " + std::to_string(pos));
    return bytes[pos++];
  }

  std::string line() {
    std::string out;
    while (pos < bytes.size() && bytes[pos] != '\n') out += char(bytes[pos++]);
    if (pos >= bytes.size()) throw FormatError("HDR header is not terminated");
    ++pos;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return out;
  }
};

void read_scanline(Reader& in, int width, std::vector<std::uint8_t>& rgbe) {
  rgbe.assign(std::size_t(width) * 4, 0);
  const bool maybe_rle = width >= 8 && width < 0x8000 &&
                         in.pos + 4 <= in.bytes.size() && in.bytes[in.pos] == 2 &&
                         in.bytes[in.pos + 1] == 2 &&
                         (in.bytes[in.pos + 2] & 0x80) == 0;
  if (!maybe_rle) {
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 4; ++c) rgbe[std::size_t(x) * 4 + c] = in.byte("pixel");
    return;
  }
  const std::size_t start = in.pos;
  in.pos += 2;
  int encoded_width = (in.byte("scanline header") << 8);
  encoded_width |= in.byte("scanline header");
  if (encoded_width != width)
    throw FormatError("RLE scanline width " + std::to_string(encoded_width) +
                      " != image width " + std::to_string(width) +
                      " at byte offset " + std::to_string(start));
  for (int c = 0; c < 4; ++c) {
    int x = 0;
    while (x < width) {
      int count = in.byte("run length");
      if (count > 128) {
        count -= 128;
        if (x + count > width)
          throw FormatError("RLE run overflows scanline at byte offset " +
                            std::to_string(in.pos));
        std::uint8_t v = in.byte("run value");
        for (int i = 0; i < count; ++i) rgbe[std::size_t(x++) * 4 + c] = v;
      } else {
        if (count == 0 || x + count > width)
          throw FormatError("bad RLE literal count at byte offset " +
                            std::to_string(in.pos - 1));
        for (int i = 0; i < count; ++i)
          rgbe[std::size_t(x++) * 4 + c] = in.byte("literal");
      }
    }
  }
}

std::array<std::uint8_t, 4> rgb_to_rgbe(const Rgb& c) {
  float v = std::max({c.x(), c.y(), c.z()});
  if (!(v >= 1e-32f)) return {0, 0, 0, 0};
  int e = 0;
  float m = std::frexp(v, &e) * 256.0f / v;
  auto q = [m](float x) {
    return static_cast<std::uint8_t>(std::clamp(x * m, 0.0f, 255.0f));
  };
  return {q(c.x()), q(c.y()), q(c.z()), static_cast<std::uint8_t>(e + 128)};
}

void write_rle_channel(std::vector<std::uint8_t>& out,
                       const std::vector<std::uint8_t>& data) {
  const std::size_t n = data.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t run = 1;
    while (i + run < n && run < 127 && data[i + run] == data[i]) ++run;
    if (run >= 4) {
      out.push_back(static_cast<std::uint8_t>(128 + run));
      out.push_back(data[i]);
      i += run;
      continue;
    }
    std::size_t lit = 0;
    while (i + lit < n && lit < 128) {
      std::size_t r = 1;
      while (i + lit + r < n && r < 4 && data[i + lit + r] == data[i + lit]) ++r;
      if (r >= 4) break;
      ++lit;
    }
    out.push_back(static_cast<std::uint8_t>(lit));
    out.insert(out.end(), data.begin() + i, data.begin() + i + lit);
    i += lit;
  }
}

Vec3 to_vec(const Rgb& c) { return c.cast<double>(); }

Vec3 row_sample(const RadianceMap& map, int row, double px) {
  double fx = std::floor(px);
  double tx = px - fx;
  int x0 = ((static_cast<int>(fx) % map.width) + map.width) % map.width;
  int x1 = (x0 + 1) % map.width;
  return to_vec(map.at(x0, row)) * (1.0 - tx) + to_vec(map.at(x1, row)) * tx;
}

Vec3 row_mean(const RadianceMap& map, int row) {
  Vec3 acc = Vec3::Zero();
  for (int x = 0; x < map.width; ++x) acc += to_vec(map.at(x, row));
  return acc / map.width;
}

}  // namespace

RadianceMap RadianceMap::constant(int width, int height, const Rgb& value) {
  RadianceMap m;
  m.width = width;
  m.height = height;
  m.pixels.assign(std::size_t(width) * height, value);
  return m;
}

Vec3 texel_direction(int x, int y, int width, int height) {
  double phi = 2.0 * kPi * (x + 0.5) / width;
  double theta = kPi * (y + 0.5) / height;
  return {std::sin(theta) * std::sin(phi), std::cos(theta),
          -std::sin(theta) * std::cos(phi)};
}

RadianceMap RadianceMap::from_function(int width, int height,
                                       const std::function<Rgb(const Vec3&)>& fn) {
  RadianceMap m = constant(width, height, Rgb::Zero());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.at(x, y) = fn(texel_direction(x, y, width, height));
  return m;
}

Rgb rgbe_to_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t e) {
  if (e == 0) return Rgb::Zero();
  float f = std::ldexp(1.0f, int(e) - (128 + 8));
  return {(r + 0.5f) * f, (g + 0.5f) * f, (b + 0.5f) * f};
}

RadianceMap decode_hdr(std::span<const std::uint8_t> bytes) {
  Reader in{bytes};
  if (bytes.size() < 10 || std::memcmp(bytes.data(), "#?RADIANCE", 10) != 0)
    throw FormatError("not a Radiance HDR file (missing #?RADIANCE)");
  in.line();
  for (;;) {
    std::string l = in.line();
    if (l.empty()) break;
    if (l.rfind("FORMAT=", 0) == 0 && l != "FORMAT=32-bit_rle_rgbe")
      throw FormatError("unsupported HDR pixel format: " + l.substr(7));
  }
  std::string res = in.line();
  char ya[3] = {}, xa[3] = {};
  int h = 0, w = 0;
  if (std::sscanf(res.c_str(), "%2s %d %2s %d", ya, &h, xa, &w) != 4 ||
      std::string(ya) != "-Y" || std::string(xa) != "+X" || w < 1 || h < 1)
    throw FormatError("unsupported HDR resolution line: '" + res + "'");

  RadianceMap map = RadianceMap::constant(w, h, Rgb::Zero());
  std::vector<std::uint8_t> rgbe;
  for (int y = 0; y < h; ++y) {
    read_scanline(in, w, rgbe);
    for (int x = 0; x < w; ++x) {
      const auto* p = &rgbe[std::size_t(x) * 4];
      map.at(x, y) = rgbe_to_rgb(p[0], p[1], p[2], p[3]);
    }
  }
  return map;
}

RadianceMap load_hdr(const std::filesystem::path& path) {
  auto bytes = read_binary_file(path);
  try {
    return decode_hdr(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_hdr(const RadianceMap& map, bool rle) {
  std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " +
                       std::to_string(map.height) + " +X " +
                       std::to_string(map.width) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool use_rle = rle && map.width >= 8 && map.width < 0x8000;
  std::vector<std::uint8_t> channel(map.width);
  for (int y = 0; y < map.height; ++y) {
    if (!use_rle) {
      for (int x = 0; x < map.width; ++x) {
        auto p = rgb_to_rgbe(map.at(x, y));
        out.insert(out.end(), p.begin(), p.end());
      }
      continue;
    }
    out.push_back(2);
    out.push_back(2);
    out.push_back(static_cast<std::uint8_t>(map.width >> 8));
    out.push_back(static_cast<std::uint8_t>(map.width & 0xff));
    std::vector<std::array<std::uint8_t, 4>> px(map.width);
    for (int x = 0; x < map.width; ++x) px[x] = rgb_to_rgbe(map.at(x, y));
    for (int c = 0; c < 4; ++c) {
      for (int x = 0; x < map.width; ++x) channel[x] = px[x][c];
      write_rle_channel(out, channel);
    }
  }
  return out;
}

void save_hdr(const RadianceMap& map, const std::filesystem::path& path, bool rle) {
  auto bytes = encode_hdr(map, rle);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                         bytes.size()));
}

Vec3 sample_radiance(const RadianceMap& map, const Vec3& dir) {
  double theta = std::acos(std::clamp(dir.y(), -1.0, 1.0));
  double phi = std::atan2(dir.x(), -dir.z());
  if (phi < 0.0) phi += 2.0 * kPi;
  double px = phi / (2.0 * kPi) * map.width - 0.5;
  double py = theta / kPi * map.height - 0.5;

  if (py < 0.0) {
    double t = (py + 0.5) / 0.5;
    if (t <= 0.0) return row_mean(map, 0);
    return row_mean(map, 0) * (1.0 - t) + row_sample(map, 0, px) * t;
  }
  const double last = map.height - 1;
  if (py > last) {
    double t = (py - last) / 0.5;
    if (t >= 1.0) return row_mean(map, map.height - 1);
    return row_sample(map, map.height - 1, px) * (1.0 - t) +
           row_mean(map, map.height - 1) * t;
  }
  int y0 = static_cast<int>(std::floor(py));
  int y1 = std::min(y0 + 1, map.height - 1);
  double ty = py - y0;
  return row_sample(map, y0, px) * (1.0 - ty) + row_sample(map, y1, px) * ty;
}

sh::LightCoefficients project_radiance(
    const std::function<Vec3(const Vec3&)>& radiance,
    const sh::SampleSet& samples, int bands) {
  if (samples.mode != sh::SampleMode::Sphere)
    throw ContractError(
        "light projection needs a full-sphere sample set (4pi/N weights)");
  if (bands < 1 || bands > sh::kBands)
    throw ContractError("project_light: bands must be in [1, 3]");
  const int basis = bands * bands;
  const std::size_t n = samples.size();
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<Eigen::Matrix<double, sh::kBasisCount, 3>> partial(
      blocks, Eigen::Matrix<double, sh::kBasisCount, 3>::Zero());
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      auto& acc = partial[b];
      std::size_t end = std::min(n, (b + 1) * kReductionBlock);
      for (std::size_t i = b * kReductionBlock; i < end; ++i) {
        Vec3 l = radiance(samples.directions[i]);
        const auto& y = samples.sh_values[i];
        for (int j = 0; j < basis; ++j) acc.row(j) += l.transpose() * y[j];
      }
    }
  });
  sh::LightCoefficients out = sh::LightCoefficients::zeros(bands);
  for (const auto& p : partial) out.values += p.topRows(basis);
  out.values *= samples.weight();
  return out;
}

sh::LightCoefficients project_light(const RadianceMap& map,
                                    const sh::SampleSet& samples, int bands) {
  return project_radiance(
      [&map](const Vec3& d) { return sample_radiance(map, d); }, samples, bands);
}

}  // namespace ngash::lightprobe
