#pragma once
// Periodic 1-d grid and complex field arithmetic: FFT-based spectral
// transforms, rectangle-rule quadrature, L2/H1/weighted norms, and the
// unitary mode-diagonal propagators used by the splitting schemes
// (exact exp(i t Lap), its Cayley rational approximation S_tau, and the
// half resolvent T_tau = (I - i tau Lap / 2)^{-1}).

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

namespace slogs {

using cx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

// Uniform grid on the torus [-L/2, L/2), immutable and shareable.
// Spectral layout follows the FFT convention: mode index m in storage slot m
// for m = 0..n/2-1, and m - n for m = n/2..n-1, so wavenumbers run over
// {-n/2, ..., n/2 - 1} * 2*pi/L.  Forward transform is unnormalized, the
// inverse carries the 1/n factor.
class Grid {
public:
  static std::shared_ptr<const Grid> make(std::size_t n, double length) {
    return std::shared_ptr<const Grid>(new Grid(n, length));
  }

  ~Grid() {
    std::lock_guard<std::mutex> lk(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }

  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  std::size_t size() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return h_; }
  double point(std::size_t j) const { return h_ * double(j) - 0.5 * length_; }

  int mode_number(std::size_t m) const {
    return m < n_ / 2 ? int(m) : int(m) - int(n_);
  }
  double wavenumber(std::size_t m) const {
    return two_pi_over_length_ * double(mode_number(m));
  }
  double laplacian_symbol(std::size_t m) const {
    const double k = wavenumber(m);
    return -k * k;
  }

  // Out-of-place transforms; in and out must be distinct buffers of size n.
  void forward(const cx* in, cx* out) const {
    if (in == out) throw std::invalid_argument("Grid::forward: in-place call");
    fftw_execute_dft(fwd_,
                     reinterpret_cast<fftw_complex*>(const_cast<cx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }
  void inverse(const cx* in, cx* out) const {
    if (in == out) throw std::invalid_argument("Grid::inverse: in-place call");
    fftw_execute_dft(bwd_,
                     reinterpret_cast<fftw_complex*>(const_cast<cx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / double(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] *= s;
  }

private:
  Grid(std::size_t n, double length) : n_(n), length_(length) {
    if (n < 4 || !is_pow2(n))
      throw std::invalid_argument("Grid: n must be a power of two, n >= 4 (got " +
                                  std::to_string(n) + ")");
    if (!(length > 0.0) || !std::isfinite(length))
      throw std::invalid_argument("Grid: length must be finite and positive");
    h_ = length / double(n);
    two_pi_over_length_ = 2.0 * std::numbers::pi / length;

    // FFTW plan creation is not thread-safe; execution via fftw_execute_dft
    // on distinct arrays is.  Plans are created once per grid on scratch
    // buffers with FFTW_UNALIGNED so later application to arbitrary
    // std::vector storage is valid.
    std::vector<cx> a(n), b(n);
    std::lock_guard<std::mutex> lk(plan_mutex());
    fwd_ = fftw_plan_dft_1d(int(n), reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()),
                            FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd_ = fftw_plan_dft_1d(int(n), reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()),
                            FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!fwd_ || !bwd_) throw std::runtime_error("Grid: FFTW planning failed");
  }

  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t n_;
  double length_;
  double h_;
  double two_pi_over_length_;
  fftw_plan fwd_;
  fftw_plan bwd_;
};

using GridPtr = std::shared_ptr<const Grid>;

// Value-semantic complex field sampled on a shared grid.
struct Field {
  GridPtr grid;
  std::vector<cx> v;

  Field() = default;
  explicit Field(GridPtr g) : grid(std::move(g)), v(grid->size(), cx{}) {}
  Field(GridPtr g, std::vector<cx> values) : grid(std::move(g)), v(std::move(values)) {
    if (v.size() != grid->size())
      throw std::invalid_argument("Field: values length does not match grid");
  }

  std::size_t size() const { return v.size(); }
  cx& operator[](std::size_t j) { return v[j]; }
  const cx& operator[](std::size_t j) const { return v[j]; }
};

inline void require_same_grid(const Field& a, const Field& b, const char* who) {
  const bool same = a.grid.get() == b.grid.get() ||
                    (a.grid && b.grid && a.grid->size() == b.grid->size() &&
                     a.grid->length() == b.grid->length());
  if (!same) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

// h * sum conj(a_j) b_j  -- rectangle rule for the sesquilinear L2 product.
inline cx cinner(const Field& a, const Field& b) {
  require_same_grid(a, b, "cinner");
  cx s{};
  for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a.v[j]) * b.v[j];
  return a.grid->spacing() * s;
}

// Re <a, b>; the real inner product pairing the Hamiltonian structure.
inline double inner(const Field& a, const Field& b) { return cinner(a, b).real(); }

inline double norm_l2_sq(const Field& a) {
  double s = 0.0;
  for (const cx& z : a.v) s += std::norm(z);
  return a.grid->spacing() * s;
}
inline double norm_l2(const Field& a) { return std::sqrt(norm_l2_sq(a)); }

inline std::vector<cx> to_spectrum(const Field& u) {
  std::vector<cx> out(u.size());
  u.grid->forward(u.v.data(), out.data());
  return out;
}

inline Field from_spectrum(const GridPtr& g, const std::vector<cx>& spec) {
  if (spec.size() != g->size())
    throw std::invalid_argument("from_spectrum: size mismatch");
  Field out(g);
  g->inverse(spec.data(), out.v.data());
  return out;
}

inline Field gradient(const Field& u) {
  const Grid& g = *u.grid;
  std::vector<cx> spec = to_spectrum(u);
  for (std::size_t m = 0; m < g.size(); ++m) spec[m] *= cx(0.0, g.wavenumber(m));
  return from_spectrum(u.grid, spec);
}

// Parseval: integral |grad u|^2 dx = (h/n) * sum k_m^2 |u_hat_m|^2.
inline double grad_norm_sq(const Field& u) {
  const Grid& g = *u.grid;
  std::vector<cx> spec = to_spectrum(u);
  double s = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double k = g.wavenumber(m);
    s += k * k * std::norm(spec[m]);
  }
  return g.spacing() / double(g.size()) * s;
}

inline double norm_h1(const Field& u) {
  return std::sqrt(norm_l2_sq(u) + grad_norm_sq(u));
}

// L2 norm with weight (1+x^2)^alpha under the integral, x torus-centered.
inline double norm_weighted(const Field& u, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("norm_weighted: alpha must lie in (0,1]");
  const Grid& g = *u.grid;
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.point(j);
    s += std::pow(1.0 + x * x, alpha) * std::norm(u.v[j]);
  }
  return std::sqrt(g.spacing() * s);
}

// Fraction of mass in the outer `fraction` of the torus (|x| >= (1-fraction)*L/2);
// diagnostic for whether the torus truncation is wide enough for localized data.
inline double boundary_mass_fraction(const Field& u, double fraction = 0.1) {
  const Grid& g = *u.grid;
  const double cut = (1.0 - fraction) * 0.5 * g.length();
  double outer = 0.0, total = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double m = std::norm(u.v[j]);
    total += m;
    if (std::abs(g.point(j)) >= cut) outer += m;
  }
  return total > 0.0 ? outer / total : 0.0;
}

// exp(i t Lap): diagonal phase exp(i * symbol * t) per mode, exactly unitary.
inline Field free_propagator(const Field& u, double t) {
  const Grid& g = *u.grid;
  std::vector<cx> spec = to_spectrum(u);
  for (std::size_t m = 0; m < g.size(); ++m)
    spec[m] *= std::polar(1.0, g.laplacian_symbol(m) * t);
  return from_spectrum(u.grid, spec);
}

// Cayley transform S_tau = (I + i tau Lap/2) / (I - i tau Lap/2) per mode.
// Numerator and denominator are complex conjugates, so |factor| = 1 to
// roundoff and the map is unitary like the exact group it approximates.
inline Field cayley_step(const Field& u, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("cayley_step: tau must be > 0");
  const Grid& g = *u.grid;
  std::vector<cx> spec = to_spectrum(u);
  for (std::size_t m = 0; m < g.size(); ++m) {
    const cx num(1.0, 0.5 * tau * g.laplacian_symbol(m));
    spec[m] *= num / std::conj(num);
  }
  return from_spectrum(u.grid, spec);
}

// T_tau = (I - i tau Lap/2)^{-1}; contraction (symbol modulus <= 1).
inline Field half_resolvent(const Field& u, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("half_resolvent: tau must be > 0");
  const Grid& g = *u.grid;
  std::vector<cx> spec = to_spectrum(u);
  for (std::size_t m = 0; m < g.size(); ++m)
    spec[m] /= cx(1.0, -0.5 * tau * g.laplacian_symbol(m));
  return from_spectrum(u.grid, spec);
}

inline bool all_finite(const Field& u) {
  for (const cx& z : u.v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

}  // namespace slogs
