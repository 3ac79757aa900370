#pragma once

#include <array>
#include <cstdint>

namespace modip {

/* xoshiro256** seeded through splitmix64, with Box-Muller normals. Every draw is a fixed
 * function of the seed on any platform with IEEE-754 doubles and a conforming libm.
 */
class Rng
{
public:
  static constexpr char const *kName = "xoshiro256** (splitmix64 seeding), Box-Muller normals";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi], unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0;
};

} // namespace modip
