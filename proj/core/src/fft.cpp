#include "modip/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace modip {

namespace {

#ifdef MODIP_SINGLE_PRECISION
using fftw_cpx = fftwf_complex;
using fftw_plan_t = fftwf_plan;
#define FFTW(name) fftwf_##name
#else
using fftw_cpx = fftw_complex;
using fftw_plan_t = fftw_plan;
#define FFTW(name) fftw_##name
#endif

// Planning is not thread-safe in FFTW; execution is.
std::mutex &plan_mutex()
{
  static std::mutex m;
  return m;
}

fftw_cpx *as_fftw(Complex *p) { return reinterpret_cast<fftw_cpx *>(p); }

} // namespace

struct RealFFT::Plans
{
  fftw_plan_t r2c = nullptr;
  fftw_plan_t c2r = nullptr;
  fftw_plan_t c2c_fwd = nullptr;
  fftw_plan_t c2c_bwd = nullptr;

  explicit Plans(Dims3 m)
  {
    // FFTW is row-major with the last dimension fastest, so pass (z, y, x).
    int const nz = int(m[2]), ny = int(m[1]), nx = int(m[0]);
    size_t const n = size_t(nx) * ny * nz;
    size_t const nh = size_t(nx / 2 + 1) * ny * nz;
    auto *r = static_cast<Real *>(FFTW(malloc)(sizeof(Real) * n));
    auto *c = static_cast<fftw_cpx *>(FFTW(malloc)(sizeof(fftw_cpx) * n));
    auto *c2 = static_cast<fftw_cpx *>(FFTW(malloc)(sizeof(fftw_cpx) * std::max(n, nh)));
    unsigned const flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    r2c = FFTW(plan_dft_r2c_3d)(nz, ny, nx, r, c2, flags);
    c2r = FFTW(plan_dft_c2r_3d)(nz, ny, nx, c2, r, flags);
    c2c_fwd = FFTW(plan_dft_3d)(nz, ny, nx, c, c2, FFTW_FORWARD, flags);
    c2c_bwd = FFTW(plan_dft_3d)(nz, ny, nx, c, c2, FFTW_BACKWARD, flags);
    FFTW(free)(r);
    FFTW(free)(c);
    FFTW(free)(c2);
    if (!r2c || !c2r || !c2c_fwd || !c2c_bwd) { throw std::runtime_error("FFTW planning failed"); }
  }

  ~Plans()
  {
    FFTW(destroy_plan)(r2c);
    FFTW(destroy_plan)(c2r);
    FFTW(destroy_plan)(c2c_fwd);
    FFTW(destroy_plan)(c2c_bwd);
  }
};

namespace {

std::shared_ptr<RealFFT::Plans const> cached_plans(Dims3 m)
{
  // Plans live for the process; a run touches only a handful of matrix sizes.
  static std::map<Dims3, std::shared_ptr<RealFFT::Plans const>> cache;
  std::lock_guard lock(plan_mutex());
  auto &slot = cache[m];
  if (!slot) { slot = std::make_shared<RealFFT::Plans const>(m); }
  return slot;
}

} // namespace

RealFFT::RealFFT(Dims3 matrix)
  : matrix_{matrix}
  , plans_{cached_plans(matrix)}
{
}

RealFFT::~RealFFT() = default;

void RealFFT::forward(Real const *in, Complex *out) const
{
  FFTW(execute_dft_r2c)(plans_->r2c, const_cast<Real *>(in), as_fftw(out));
}

void RealFFT::inverse(Complex *in, Real *out) const { FFTW(execute_dft_c2r)(plans_->c2r, as_fftw(in), out); }

void RealFFT::forward_complex(Complex const *in, Complex *out) const
{
  FFTW(execute_dft)(plans_->c2c_fwd, as_fftw(const_cast<Complex *>(in)), as_fftw(out));
}

void RealFFT::inverse_complex(Complex const *in, Complex *out) const
{
  FFTW(execute_dft)(plans_->c2c_bwd, as_fftw(const_cast<Complex *>(in)), as_fftw(out));
}

Spectrum fft3(Volume const &v)
{
  v.require_finite("fft3 input");
  RealFFT const fft(v.grid().matrix());
  Spectrum s(v.grid());
  std::vector<Complex> in(v.values().begin(), v.values().end());
  fft.forward_complex(in.data(), s.data());
  return s;
}

Volume ifft3_real(Spectrum const &s)
{
  for (Index i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i].real()) || !std::isfinite(s[i].imag())) {
      throw NumericError("ifft3_real input contains non-finite values");
    }
  }
  RealFFT const fft(s.grid().matrix());
  std::vector<Complex> out(size_t(s.size()));
  fft.inverse_complex(s.data(), out.data());
  Real const scale = Real(1) / Real(s.size());
  Volume v(s.grid());
  double max_re = 0, max_im = 0;
  for (Index i = 0; i < s.size(); ++i) {
    v[i] = out[size_t(i)].real() * scale;
    max_re = std::max(max_re, double(std::abs(v[i])));
    max_im = std::max(max_im, double(std::abs(out[size_t(i)].imag() * scale)));
  }
  if (max_im > 1e-5 * max_re) {
    throw NumericError("ifft3_real: imaginary residue " + std::to_string(max_im) +
                       " exceeds 1e-5 of max real part " + std::to_string(max_re));
  }
  return v;
}

} // namespace modip
