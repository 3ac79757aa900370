#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace modip {

#ifdef MODIP_SINGLE_PRECISION
using Real = float;
inline constexpr char const *kPrecisionName = "f32";
#else
using Real = double;
inline constexpr char const *kPrecisionName = "f64";
#endif

using Complex = std::complex<Real>;
using Index = std::ptrdiff_t;

// Invalid configuration or arguments. Maps to CLI exit code 1.
struct ConfigError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

// Operands whose grids or shapes do not agree.
struct ShapeError : ConfigError
{
  using ConfigError::ConfigError;
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

} // namespace modip
