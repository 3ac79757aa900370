#pragma once

#include "reconstructor.hpp"
#include "volume.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace modip {

enum class ElementType
{
  F32,
  F64,
};

std::string to_string(ElementType e);
ElementType parse_element_type(std::string const &s);
inline ElementType native_element() { return sizeof(Real) == 4 ? ElementType::F32 : ElementType::F64; }

/* Text header (magic QVOL1) plus a raw little-endian payload in a sibling file:
 *
 *   QVOL1
 *   matrix 64 64 64
 *   voxel_mm 1 1 2
 *   b0_dir 0.5 0.5 0.707...
 *   element f64
 *   layout x-fastest
 *   units ppm
 *   data chi.raw
 */
struct VolumeFile
{
  Volume volume;
  ElementType element = ElementType::F64;
  std::string units = "ppm";
};

// Writes <path> and <path stem>.raw; returns the payload path.
std::filesystem::path write_volume(std::filesystem::path const &path, Volume const &v,
                                   ElementType element = native_element(), std::string const &units = "ppm");
VolumeFile read_volume(std::filesystem::path const &path);

// iter,fidelity_mae,laplacian_mae,total,wall_ms
void write_losses_csv(std::filesystem::path const &path, std::vector<IterationRecord> const &history);

struct GrayImage
{
  Index width = 0;
  Index height = 0;
  std::vector<std::uint8_t> pixels; // row-major
};

// Linear map of [lo, hi] to 0..255 with clamping, rounding half up.
GrayImage render_slice(Volume const &v, char axis, Index index, double lo, double hi);
void write_pgm(std::filesystem::path const &path, GrayImage const &img);

} // namespace modip
