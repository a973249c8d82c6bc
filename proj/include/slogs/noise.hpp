#pragma once
// Truncated Q-Wiener noise: W(t) = sum_i Q^{1/2}e_i beta_i(t) with real
// independent Brownian motions beta_i and smooth Fourier basis modes, either
// complex exponentials (H-valued flavor) or cosine/sine modes (real-valued
// flavor).  Mode coefficients decay like amplitude * i^{-r}; r > 3 keeps the
// H^1 and W^{1,inf} trace sums of the idealized infinite series finite.
//
// Paths are sampled once on a fine lattice dt_fine and every scheme step
// consumes windows of those increments, so solutions at different step sizes
// are driven by literally the same Brownian path (exact coupling, no
// bridge interpolation).

#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"

namespace slogs {

enum class NoiseFlavor { ComplexH, RealL2, None };

inline const char* to_string(NoiseFlavor f) {
  switch (f) {
    case NoiseFlavor::ComplexH: return "complex_h";
    case NoiseFlavor::RealL2: return "real_l2";
    default: return "none";
  }
}

struct NoiseModel {
  GridPtr grid;
  NoiseFlavor flavor = NoiseFlavor::None;
  std::size_t n_modes = 0;  // K
  double decay = 4.0;       // r
  double amplitude = 0.0;

  std::vector<std::vector<cx>> basis;  // K sampled fields Q^{1/2} e_i
  std::vector<double> mode_mass;       // ||Q^{1/2} e_i||_{L2}^2 by quadrature
  double trace_q = 0.0;                // sum of mode_mass

  // Pointwise intensity fields driving the Ito corrections:
  //   mu(x)    = sum |Q^{1/2}e_i(x)|^2        (|.|^2, sesquilinear)
  //   nu(x)    = sum Im(Q^{1/2}e_i(x)) * Q^{1/2}e_i(x)
  //   sigma(x) = sum (Q^{1/2}e_i(x))^2        (bilinear square)
  std::vector<double> mu;
  std::vector<cx> nu;
  std::vector<cx> sigma;
};

using NoiseModelPtr = std::shared_ptr<const NoiseModel>;

inline NoiseModelPtr build_noise(const GridPtr& grid, std::size_t K, double r,
                                 double amplitude, NoiseFlavor flavor,
                                 bool strict = false) {
  auto m = std::make_shared<NoiseModel>();
  m->grid = grid;
  m->flavor = flavor;
  m->decay = r;
  m->amplitude = amplitude;
  const std::size_t n = grid->size();
  m->mu.assign(n, 0.0);
  m->nu.assign(n, cx{});
  m->sigma.assign(n, cx{});
  if (flavor == NoiseFlavor::None) return m;

  if (K < 1) throw std::invalid_argument("build_noise: K must be >= 1");
  if (K > n / 2)
    throw std::invalid_argument("build_noise: K > n/2 modes are unresolvable on this grid");
  if (r <= 3.0) {
    if (strict)
      throw std::invalid_argument("build_noise: decay r <= 3 breaks the trace hypotheses");
    std::cerr << "warning: noise decay r = " << r
              << " <= 3; H^1/W^{1,inf} trace sums of the full series diverge\n";
  }

  m->n_modes = K;
  const double L = grid->length();
  const double two_pi_over_L = 2.0 * std::numbers::pi / L;
  m->basis.assign(K, std::vector<cx>(n));

  for (std::size_t i = 0; i < K; ++i) {
    const double q = amplitude * std::pow(double(i + 1), -r);
    std::vector<cx>& b = m->basis[i];
    if (flavor == NoiseFlavor::ComplexH) {
      // mode order: wavenumber index 0, +1, -1, +2, -2, ...
      const long freq = (i % 2 == 1) ? long(i + 1) / 2 : -long(i) / 2;
      const double norm = q / std::sqrt(L);
      for (std::size_t j = 0; j < n; ++j)
        b[j] = norm * std::polar(1.0, two_pi_over_L * double(freq) * grid->point(j));
    } else {
      // 1/sqrt(L), then sqrt(2/L) cos(2 pi j x / L), sqrt(2/L) sin(...)
      if (i == 0) {
        const double c = q / std::sqrt(L);
        for (std::size_t j = 0; j < n; ++j) b[j] = cx(c, 0.0);
      } else {
        const long freq = long(i + 1) / 2;
        const double c = q * std::sqrt(2.0 / L);
        const bool is_cos = (i % 2 == 1);
        for (std::size_t j = 0; j < n; ++j) {
          const double phase = two_pi_over_L * double(freq) * grid->point(j);
          b[j] = cx(c * (is_cos ? std::cos(phase) : std::sin(phase)), 0.0);
        }
      }
    }
  }

  m->mode_mass.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    double s = 0.0;
    for (const cx& z : m->basis[i]) s += std::norm(z);
    m->mode_mass[i] = grid->spacing() * s;
    m->trace_q += m->mode_mass[i];
    for (std::size_t j = 0; j < n; ++j) {
      const cx b = m->basis[i][j];
      m->mu[j] += std::norm(b);
      m->nu[j] += b.imag() * b;
      m->sigma[j] += b * b;
    }
  }
  return m;
}

// sum_i || (1+x^2)^{alpha/2} Q^{1/2}e_i ||^2 -- the additive source term in
// the weighted-mass evolution law.
inline double weighted_trace(const NoiseModel& m, double alpha) {
  double total = 0.0;
  const Grid& g = *m.grid;
  for (const auto& b : m.basis) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double x = g.point(j);
      s += std::pow(1.0 + x * x, alpha) * std::norm(b[j]);
    }
    total += g.spacing() * s;
  }
  return total;
}

// splitmix64 step; derives per-path substream seeds from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct NoisePath {
  NoiseModelPtr model;
  double dt_fine = 0.0;
  double t_total = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_steps = 0;
  std::size_t n_modes = 0;
  std::vector<double> incr;  // [step * K + mode], each ~ N(0, dt_fine)

  // Fine-lattice index of a time, rejecting off-lattice values.
  std::size_t index_of(double t, const char* who) const {
    const double r = t / dt_fine;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-9 * std::max(1.0, std::abs(r)) || k < 0.0 ||
        k > double(n_steps))
      throw std::invalid_argument(std::string(who) + ": time " + std::to_string(t) +
                                  " is off the fine lattice (dt_fine = " +
                                  std::to_string(dt_fine) + ")");
    return std::size_t(k);
  }

  // Per-mode increment sum over fine steps [ka, kb); left-to-right fold, so
  // summing unit windows reproduces the full-window sum bit for bit.
  double mode_sum(std::size_t i, std::size_t ka, std::size_t kb) const {
    double s = 0.0;
    for (std::size_t k = ka; k < kb; ++k) s += incr[k * n_modes + i];
    return s;
  }

  std::uint64_t checksum() const {  // FNV-1a over raw increment bytes
    const auto* p = reinterpret_cast<const unsigned char*>(incr.data());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < incr.size() * sizeof(double); ++i)
      h = (h ^ p[i]) * 0x100000001b3ull;
    return h;
  }
};

inline NoisePath sample_path(const NoiseModelPtr& model, double T, double dt_fine,
                             std::uint64_t seed) {
  if (!(T > 0.0) || !(dt_fine > 0.0))
    throw std::invalid_argument("sample_path: T and dt_fine must be positive");
  const double ratio = T / dt_fine;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("sample_path: T is not a multiple of dt_fine");

  NoisePath p;
  p.model = model;
  p.dt_fine = dt_fine;
  p.t_total = T;
  p.seed = seed;
  p.n_steps = std::size_t(steps);
  p.n_modes = model->n_modes;
  p.incr.assign(p.n_steps * p.n_modes, 0.0);
  if (p.n_modes == 0) return p;

  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double s = std::sqrt(dt_fine);
  for (double& v : p.incr) v = s * nd(eng);
  return p;
}

// W(t_b) - W(t_a) as a sampled field.
inline Field coarse_increment(const NoisePath& path, double ta, double tb) {
  const std::size_t ka = path.index_of(ta, "coarse_increment");
  const std::size_t kb = path.index_of(tb, "coarse_increment");
  if (kb < ka) throw std::invalid_argument("coarse_increment: t_b < t_a");
  Field out(path.model->grid);
  for (std::size_t i = 0; i < path.n_modes; ++i) {
    const double s = path.mode_sum(i, ka, kb);
    const std::vector<cx>& b = path.model->basis[i];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += s * b[j];
  }
  return out;
}

// Left-point Riemann-Ito discretization of int_{ta}^{tb} e^{i Lap (tb-s)} dW(s):
// the window is split into m_sub equal groups of fine steps; the increment of
// group j (left endpoint s_j) is propagated by exp(i Lap (tb - s_j)).
// m_sub = 1 degenerates to exp(i Lap (tb-ta)) (W(tb) - W(ta)).
inline Field stochastic_convolution(const NoisePath& path, double ta, double tb,
                                    std::size_t m_sub) {
  const std::size_t ka = path.index_of(ta, "stochastic_convolution");
  const std::size_t kb = path.index_of(tb, "stochastic_convolution");
  if (kb < ka) throw std::invalid_argument("stochastic_convolution: t_b < t_a");
  const GridPtr& grid = path.model->grid;
  Field out(grid);
  const std::size_t nw = kb - ka;
  if (nw == 0 || path.n_modes == 0) return out;
  if (m_sub < 1 || nw % m_sub != 0)
    throw std::invalid_argument(
        "stochastic_convolution: window of " + std::to_string(nw) +
        " fine steps is not divisible into " + std::to_string(m_sub) + " sub-windows");

  const std::size_t group = nw / m_sub;
  const Grid& g = *grid;
  const std::size_t n = g.size();
  std::vector<cx> sub(n), spec(n), acc(n, cx{});
  for (std::size_t w = 0; w < m_sub; ++w) {
    std::fill(sub.begin(), sub.end(), cx{});
    for (std::size_t i = 0; i < path.n_modes; ++i) {
      const double s = path.mode_sum(i, ka + w * group, ka + (w + 1) * group);
      const std::vector<cx>& b = path.model->basis[i];
      for (std::size_t j = 0; j < n; ++j) sub[j] += s * b[j];
    }
    g.forward(sub.data(), spec.data());
    const double lag = tb - (ta + double(w) * double(group) * path.dt_fine);
    for (std::size_t m = 0; m < n; ++m)
      acc[m] += spec[m] * std::polar(1.0, g.laplacian_symbol(m) * lag);
  }
  g.inverse(acc.data(), out.v.data());
  return out;
}

}  // namespace slogs
