#include "modip/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace modip {

namespace {

std::uint64_t splitmix64(std::uint64_t &x)
{
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed)
{
  for (auto &w : s_) { w = splitmix64(seed); }
}

std::uint64_t Rng::next_u64()
{
  std::uint64_t const result = rotl(s_[1] * 5, 7) * 9;
  std::uint64_t const t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi)
{
  if (hi < lo) { throw std::invalid_argument("uniform_int: empty range"); }
  std::uint64_t const span = std::uint64_t(hi - lo) + 1;
  if (span == 0) { return std::int64_t(next_u64()); }
  std::uint64_t const limit = std::uint64_t(-span) % span; // 2^64 mod span
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r < limit);
  return lo + std::int64_t(r % span);
}

double Rng::normal()
{
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double const u1 = (double(next_u64() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
  double const u2 = uniform();
  double const r = std::sqrt(-2.0 * std::log(u1));
  double const t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

} // namespace modip
