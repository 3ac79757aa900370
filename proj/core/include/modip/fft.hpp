#pragma once

#include "volume.hpp"

#include <memory>

namespace modip {

// Forward transform is unscaled; inverse is scaled by 1/(Mx*My*Mz).
Spectrum fft3(Volume const &v);

// Inverse transform of a spectrum that should belong to a real volume. Throws NumericError
// if the imaginary residue exceeds 1e-5 * max|real part|.
Volume ifft3_real(Spectrum const &s);

/* Real-to-half-complex 3D transform over an x-fastest volume. The half spectrum keeps
 * x bins 0..Mx/2 and is laid out as hx + (Mx/2+1) * (y + My * z). Plans are cached per
 * matrix and shared; execution is thread-safe.
 */
class RealFFT
{
public:
  explicit RealFFT(Dims3 matrix);
  ~RealFFT();
  RealFFT(RealFFT const &) = delete;
  RealFFT &operator=(RealFFT const &) = delete;

  Dims3 const &matrix() const { return matrix_; }
  Index half_nx() const { return matrix_[0] / 2 + 1; }
  Index half_size() const { return half_nx() * matrix_[1] * matrix_[2]; }
  Index size() const { return matrix_[0] * matrix_[1] * matrix_[2]; }

  void forward(Real const *in, Complex *out) const;
  // Unnormalized; destroys `in`.
  void inverse(Complex *in, Real *out) const;

  // Full complex transforms over the same matrix, unnormalized.
  void forward_complex(Complex const *in, Complex *out) const;
  void inverse_complex(Complex const *in, Complex *out) const;

  struct Plans;

private:
  Dims3 matrix_;
  std::shared_ptr<Plans const> plans_;
};

} // namespace modip
