#include "modip/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace modip {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

namespace fs = std::filesystem;

std::string to_string(ElementType e) { return e == ElementType::F32 ? "f32" : "f64"; }

ElementType parse_element_type(std::string const &s)
{
  if (s == "f32") { return ElementType::F32; }
  if (s == "f64") { return ElementType::F64; }
  throw ConfigError("unknown element type '" + s + "' (f32|f64)");
}

namespace {

std::string fmt_real(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt3(Vec3 const &v) { return fmt_real(v[0]) + " " + fmt_real(v[1]) + " " + fmt_real(v[2]); }

} // namespace

fs::path write_volume(fs::path const &path, Volume const &v, ElementType element, std::string const &units)
{
  if (units.empty() || units.find_first_of(" \t\n") != std::string::npos) {
    throw ConfigError("volume units must be a single token");
  }
  fs::path data = path;
  data.replace_extension(".raw");
  auto const &g = v.grid();
  {
    std::ofstream h(path);
    if (!h) { throw IoError("cannot write " + path.string()); }
    h << "QVOL1\n"
      << "matrix " << g.nx() << " " << g.ny() << " " << g.nz() << "\n"
      << "voxel_mm " << fmt3(g.voxel_mm()) << "\n"
      << "b0_dir " << fmt3(g.b0_dir()) << "\n"
      << "element " << to_string(element) << "\n"
      << "layout x-fastest\n"
      << "units " << units << "\n"
      << "data " << data.filename().string() << "\n";
    if (!h) { throw IoError("failed writing " + path.string()); }
  }
  std::ofstream b(data, std::ios::binary);
  if (!b) { throw IoError("cannot write " + data.string()); }
  if (element == native_element()) {
    b.write(reinterpret_cast<char const *>(v.data()), std::streamsize(sizeof(Real) * size_t(v.size())));
  } else if (element == ElementType::F32) {
    std::vector<float> tmp(v.values().begin(), v.values().end());
    b.write(reinterpret_cast<char const *>(tmp.data()), std::streamsize(sizeof(float) * tmp.size()));
  } else {
    std::vector<double> tmp(v.values().begin(), v.values().end());
    b.write(reinterpret_cast<char const *>(tmp.data()), std::streamsize(sizeof(double) * tmp.size()));
  }
  if (!b) { throw IoError("failed writing " + data.string()); }
  return data;
}

VolumeFile read_volume(fs::path const &path)
{
  std::ifstream h(path);
  if (!h) { throw IoError("cannot open " + path.string()); }
  std::string line;
  if (!std::getline(h, line) || line != "QVOL1") { throw IoError(path.string() + ": missing QVOL1 magic"); }
  std::map<std::string, std::string> kv;
  while (std::getline(h, line)) {
    if (line.empty()) { continue; }
    auto const sp = line.find(' ');
    if (sp == std::string::npos) { throw IoError(path.string() + ": malformed header line '" + line + "'"); }
    std::string const key = line.substr(0, sp);
    if (kv.contains(key)) { throw IoError(path.string() + ": duplicate header key " + key); }
    kv[key] = line.substr(sp + 1);
  }
  for (char const *k : {"matrix", "voxel_mm", "b0_dir", "element", "layout", "units", "data"}) {
    if (!kv.contains(k)) { throw IoError(path.string() + ": header lacks '" + k + "'"); }
  }
  if (kv.size() != 7) { throw IoError(path.string() + ": unexpected header keys"); }
  if (kv["layout"] != "x-fastest") { throw IoError(path.string() + ": unsupported layout " + kv["layout"]); }

  auto parse3 = [&](std::string const &key, auto &out) {
    std::istringstream is(kv[key]);
    is >> out[0] >> out[1] >> out[2];
    std::string rest;
    if (!is || (is >> rest)) { throw IoError(path.string() + ": malformed '" + key + "'"); }
  };
  Dims3 m{};
  Vec3 vox{}, b0{};
  parse3("matrix", m);
  parse3("voxel_mm", vox);
  parse3("b0_dir", b0);

  VolumeFile f;
  try {
    f.element = parse_element_type(kv["element"]);
  } catch (ConfigError const &e) {
    throw IoError(path.string() + ": " + e.what());
  }
  f.units = kv["units"];
  GridSpec grid;
  try {
    grid = GridSpec(m, vox, b0);
  } catch (ConfigError const &e) {
    throw IoError(path.string() + ": invalid grid: " + e.what());
  }

  fs::path const data = path.parent_path() / kv["data"];
  size_t const esize = f.element == ElementType::F32 ? 4 : 8;
  size_t const expected = esize * size_t(grid.size());
  std::error_code ec;
  auto const actual = fs::file_size(data, ec);
  if (ec) { throw IoError("cannot stat payload " + data.string()); }
  if (actual != expected) {
    throw IoError(data.string() + ": payload has " + std::to_string(actual) + " bytes, header implies " +
                  std::to_string(expected));
  }
  std::ifstream b(data, std::ios::binary);
  std::vector<char> raw(expected);
  b.read(raw.data(), std::streamsize(expected));
  if (!b) { throw IoError(data.string() + ": truncated payload"); }
  std::vector<Real> values(size_t(grid.size()));
  for (size_t i = 0; i < values.size(); ++i) {
    if (esize == 4) {
      float x;
      std::memcpy(&x, raw.data() + 4 * i, 4);
      values[i] = Real(x);
    } else {
      double x;
      std::memcpy(&x, raw.data() + 8 * i, 8);
      values[i] = Real(x);
    }
  }
  f.volume = Volume(grid, std::move(values));
  if (!f.volume.all_finite()) { throw IoError(path.string() + ": payload contains non-finite values"); }
  return f;
}

void write_losses_csv(fs::path const &path, std::vector<IterationRecord> const &history)
{
  std::ofstream f(path);
  if (!f) { throw IoError("cannot write " + path.string()); }
  f << "iter,fidelity_mae,laplacian_mae,total,wall_ms\n";
  for (auto const &r : history) {
    f << r.iter << "," << fmt_real(r.loss.fidelity_mae) << "," << fmt_real(r.loss.laplacian_mae) << ","
      << fmt_real(r.loss.total) << "," << fmt_real(r.wall_ms) << "\n";
  }
  if (!f) { throw IoError("failed writing " + path.string()); }
}

GrayImage render_slice(Volume const &v, char axis, Index index, double lo, double hi)
{
  if (!(hi > lo)) { throw ConfigError("render window must satisfy lo < hi"); }
  auto const &g = v.grid();
  int const a = axis == 'x' ? 0 : axis == 'y' ? 1 : axis == 'z' ? 2 : -1;
  if (a < 0) { throw ConfigError(std::string("render axis must be x, y or z, got '") + axis + "'"); }
  if (index < 0 || index >= g.matrix()[size_t(a)]) {
    throw ConfigError("slice index " + std::to_string(index) + " out of range for axis " + axis);
  }
  // In-plane axes in increasing order: (x, y) for z slices, (x, z) for y, (y, z) for x.
  int const u = a == 0 ? 1 : 0;
  int const w = a == 2 ? 1 : 2;
  GrayImage img;
  img.width = g.matrix()[size_t(u)];
  img.height = g.matrix()[size_t(w)];
  img.pixels.resize(size_t(img.width * img.height));
  for (Index r = 0; r < img.height; ++r) {
    for (Index c = 0; c < img.width; ++c) {
      std::array<Index, 3> p{};
      p[size_t(a)] = index;
      p[size_t(u)] = c;
      p[size_t(w)] = r;
      double const t = (double(v(p[0], p[1], p[2])) - lo) / (hi - lo);
      double const q = std::floor(std::clamp(t, 0.0, 1.0) * 255.0 + 0.5);
      img.pixels[size_t(r * img.width + c)] = std::uint8_t(q);
    }
  }
  return img;
}

void write_pgm(fs::path const &path, GrayImage const &img)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) { throw IoError("cannot write " + path.string()); }
  f << "P5\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<char const *>(img.pixels.data()), std::streamsize(img.pixels.size()));
  if (!f) { throw IoError("failed writing " + path.string()); }
}

} // namespace modip
