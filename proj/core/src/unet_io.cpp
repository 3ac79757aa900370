#include "modip/unet.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace modip {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

void save_params(std::string const &path, ParameterSet const &params)
{
  std::ofstream bin(path, std::ios::binary);
  std::ofstream man(path + ".manifest");
  if (!bin || !man) { throw IoError("cannot write parameters to " + path); }
  man << "MODIP-PARAMS1\n";
  man << "element " << kPrecisionName << "\n";
  man << "tensors " << params.tensors.size() << "\n";
  Index offset = 0;
  for (auto const &t : params.tensors) {
    man << t.name << " " << offset << " " << t.shape.size();
    for (Index s : t.shape) { man << " " << s; }
    man << "\n";
    bin.write(reinterpret_cast<char const *>(t.values.data()), std::streamsize(sizeof(Real) * t.values.size()));
    offset += t.size();
  }
  if (!bin || !man) { throw IoError("failed writing parameters to " + path); }
}

ParameterSet load_params(std::string const &path)
{
  std::ifstream man(path + ".manifest");
  if (!man) { throw IoError("cannot open " + path + ".manifest"); }
  std::string magic, key, element;
  size_t count = 0;
  man >> magic >> key >> element;
  if (magic != "MODIP-PARAMS1" || key != "element") { throw IoError(path + ".manifest: bad header"); }
  if (element != "f32" && element != "f64") { throw IoError(path + ".manifest: unknown element type " + element); }
  man >> key >> count;
  if (key != "tensors" || !man) { throw IoError(path + ".manifest: bad tensor count"); }
  size_t const esize = element == "f32" ? 4 : 8;

  std::ifstream bin(path, std::ios::binary);
  if (!bin) { throw IoError("cannot open " + path); }
  ParameterSet p;
  Index expected_offset = 0;
  for (size_t i = 0; i < count; ++i) {
    ParamTensor t;
    Index offset = 0;
    size_t rank = 0;
    man >> t.name >> offset >> rank;
    Index n = 1;
    for (size_t r = 0; r < rank; ++r) {
      Index s = 0;
      man >> s;
      t.shape.push_back(s);
      n *= s;
    }
    if (!man || offset != expected_offset || n <= 0) { throw IoError(path + ".manifest: malformed tensor entry"); }
    std::vector<char> raw(size_t(n) * esize);
    bin.read(raw.data(), std::streamsize(raw.size()));
    if (!bin) { throw IoError(path + ": truncated payload"); }
    t.values.resize(size_t(n));
    for (Index j = 0; j < n; ++j) {
      if (esize == 4) {
        float f;
        std::memcpy(&f, raw.data() + 4 * j, 4);
        t.values[size_t(j)] = Real(f);
      } else {
        double d;
        std::memcpy(&d, raw.data() + 8 * j, 8);
        t.values[size_t(j)] = Real(d);
      }
    }
    expected_offset += n;
    p.tensors.push_back(std::move(t));
  }
  return p;
}

} // namespace modip
