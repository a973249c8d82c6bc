#pragma once
// Sub-flows composed by the splitting schemes.
//
//   phi_f     : w -> w exp(i lambda f_eps(|w|^2) t)          (log phase, exact)
//   phi_D     : free_propagator in field.hpp                  (linear, exact)
//   phi_A     : additive stochastic flow  e^{i Lap t} v + int e^{i Lap (t-s)} dW
//   phi_fg    : conservative phase flow   w exp(i lambda f t + i g(|w|^2) W(t))
//   phi_M~    : exponential-Euler step of the multiplicative linear SDE with
//               coefficients frozen at the left endpoint
//   phi_S     : analytic solution of the stochastic substep used by the
//               midpoint/Crank-Nicolson schemes (three closed-form cases),
//               with an explicit Euler fallback for everything else
//
// Stochastic integrals follow the Ito left-point convention; the drift
// correction below is what turns the formal "star" integral of the
// multiplicative coupling i g(|u|^2) u dW into a plain Ito one.  Tangent maps
// linearize pathwise: noise increments are frozen parameters.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "noise.hpp"
#include "regularization.hpp"

namespace slogs {

enum class GKind { One, Constant, RationalInv, Saturating, SaturatingSq };

// Real diffusion amplitude g acting on the density x = |u|^2.  All families
// keep g, g'x and g''x^2 bounded on [0, inf), which is what the
// well-posedness assumptions ask of the multiplicative coupling.
struct DiffusionG {
  GKind kind = GKind::One;
  double a = 1.0, b = 1.0, c = 1.0;

  static DiffusionG one() { return {GKind::One, 1.0, 1.0, 1.0}; }
  static DiffusionG constant(double a) { return {GKind::Constant, a, 1.0, 1.0}; }
  static DiffusionG rational_inv(double a, double b) {
    check_pos(b, "b");
    return {GKind::RationalInv, a, b, 1.0};
  }
  static DiffusionG saturating(double a, double b, double c) {
    check_pos(b, "b");
    check_pos(c, "c");
    return {GKind::Saturating, a, b, c};
  }
  static DiffusionG saturating_sq(double a, double b, double c) {
    check_pos(b, "b");
    check_pos(c, "c");
    return {GKind::SaturatingSq, a, b, c};
  }

  double operator()(double x) const {
    switch (kind) {
      case GKind::One: return 1.0;
      case GKind::Constant: return a;
      case GKind::RationalInv: return a / (b + x);
      case GKind::Saturating: return a * x / (b + c * x);
      case GKind::SaturatingSq: return a * x / (b + c * x * x);
    }
    return 0.0;
  }
  double prime(double x) const {
    switch (kind) {
      case GKind::One:
      case GKind::Constant: return 0.0;
      case GKind::RationalInv: return -a / ((b + x) * (b + x));
      case GKind::Saturating: {
        const double d = b + c * x;
        return a * b / (d * d);
      }
      case GKind::SaturatingSq: {
        const double d = b + c * x * x;
        return a * (b - c * x * x) / (d * d);
      }
    }
    return 0.0;
  }
  double second(double x) const {
    switch (kind) {
      case GKind::One:
      case GKind::Constant: return 0.0;
      case GKind::RationalInv: {
        const double d = b + x;
        return 2.0 * a / (d * d * d);
      }
      case GKind::Saturating: {
        const double d = b + c * x;
        return -2.0 * a * b * c / (d * d * d);
      }
      case GKind::SaturatingSq: {
        const double d = b + c * x * x;
        return -2.0 * a * c * x * (3.0 * b - c * x * x) / (d * d * d);
      }
    }
    return 0.0;
  }

 private:
  static void check_pos(double v, const char* name) {
    if (!(v > 0.0))
      throw std::invalid_argument(std::string("DiffusionG: parameter ") + name +
                                  " must be > 0");
  }
};

inline const char* to_string(GKind k) {
  switch (k) {
    case GKind::One: return "one";
    case GKind::Constant: return "constant";
    case GKind::RationalInv: return "rational_inv";
    case GKind::Saturating: return "saturating";
    default: return "saturating_sq";
  }
}

// Observed suprema of g, g'x, g''x^2 over a log grid; all must be finite for
// an admissible family.
struct DiffusionBounds {
  double g_sup = 0.0, gp_x_sup = 0.0, gpp_x2_sup = 0.0;
  bool finite = false;
};

inline DiffusionBounds diffusion_bounds(const DiffusionG& g, double x_max = 1e8,
                                        std::size_t n = 4096) {
  DiffusionBounds out;
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = i == 0 ? 0.0 : std::exp(std::log(1e-8) +
                          (std::log(x_max) - std::log(1e-8)) * double(i - 1) / double(n - 1));
    out.g_sup = std::max(out.g_sup, std::abs(g(x)));
    out.gp_x_sup = std::max(out.gp_x_sup, std::abs(g.prime(x) * x));
    out.gpp_x2_sup = std::max(out.gpp_x2_sup, std::abs(g.second(x) * x * x));
  }
  out.finite = std::isfinite(out.g_sup) && std::isfinite(out.gp_x_sup) &&
               std::isfinite(out.gpp_x2_sup);
  return out;
}

enum class Coupling { Additive, Multiplicative };
enum class ConvWeighting { Substep, Endpoint };

// Raised when the stochastic substep has no closed form for the requested
// model/diffusion combination.
struct UnsupportedStochasticSubstep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ito correction of the multiplicative star integral:
//   -1/2 mu(x) g(rho)^2 u - i nu(x) g(rho) g'(rho) rho u,  rho = |u|^2.
// Overload with raw intensity fields for synthetic checks.
inline Field drift_correction(const Field& u, const std::vector<double>& mu,
                              const std::vector<cx>& nu, const DiffusionG& g) {
  if (mu.size() != u.size() || nu.size() != u.size())
    throw std::invalid_argument("drift_correction: intensity field size mismatch");
  Field out(u.grid);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double rho = std::norm(u[j]);
    const double gv = g(rho);
    out[j] = -0.5 * mu[j] * gv * gv * u[j] -
             cx(0.0, 1.0) * nu[j] * gv * g.prime(rho) * rho * u[j];
  }
  return out;
}

inline Field drift_correction(const Field& u, const NoiseModel& model,
                              const DiffusionG& g) {
  if (model.flavor == NoiseFlavor::None) return Field(u.grid);
  return drift_correction(u, model.mu, model.nu, g);
}

// Logarithmic phase flow: exact, modulus-preserving pointwise.
inline Field phi_f(const Field& u, double tau, const RegFamily& reg, double lambda) {
  if (!(tau >= 0.0)) throw std::invalid_argument("phi_f: tau must be >= 0");
  Field out(u.grid);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const cx z = u[j];
    if (z == cx{}) continue;  // vacuum points stay put (and f_0 may be singular)
    out[j] = z * std::polar(1.0, lambda * f_eps(reg, std::norm(z)) * tau);
  }
  return out;
}

// Pathwise linearization of phi_f:
//   D phi_f(u) xi = e^{i lam f tau} (xi + i lam tau f'(rho) 2 Re(conj(u) xi) u).
inline Field phi_f_tangent(const Field& u, const Field& xi, double tau,
                           const RegFamily& reg, double lambda) {
  require_same_grid(u, xi, "phi_f_tangent");
  Field out(u.grid);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const cx z = u[j];
    if (z == cx{}) {
      out[j] = xi[j];
      continue;
    }
    const double rho = std::norm(z);
    const cx phase = std::polar(1.0, lambda * f_eps(reg, rho) * tau);
    const double radial = 2.0 * std::real(std::conj(z) * xi[j]);
    out[j] = phase * (xi[j] + cx(0.0, lambda * tau * f_eps_prime(reg, rho) * radial) * z);
  }
  return out;
}

// Conservative phase flow w exp(i lam f(rho) t + i g(rho) W~): the modulus is
// a pathwise invariant, so freezing rho solves the substep SDE exactly.
inline Field phi_fg_conservative(const Field& u, double tau, const RegFamily& reg,
                                 double lambda, const DiffusionG& g, const Field& dW) {
  require_same_grid(u, dW, "phi_fg_conservative");
  Field out(u.grid);
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (dW[j].imag() != 0.0)
      throw std::invalid_argument("phi_fg_conservative: dW must be real-valued");
    const cx z = u[j];
    if (z == cx{}) continue;
    const double rho = std::norm(z);
    out[j] = z * std::polar(1.0, lambda * f_eps(reg, rho) * tau + g(rho) * dW[j].real());
  }
  return out;
}

inline Field phi_fg_tangent(const Field& u, const Field& xi, double tau,
                            const RegFamily& reg, double lambda, const DiffusionG& g,
                            const Field& dW) {
  require_same_grid(u, xi, "phi_fg_tangent");
  require_same_grid(u, dW, "phi_fg_tangent");
  Field out(u.grid);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const cx z = u[j];
    if (z == cx{}) {
      out[j] = xi[j];
      continue;
    }
    const double rho = std::norm(z);
    const double w = dW[j].real();
    const cx phase = std::polar(1.0, lambda * f_eps(reg, rho) * tau + g(rho) * w);
    const double dtheta =
        lambda * tau * f_eps_prime(reg, rho) + g.prime(rho) * w;
    const double radial = 2.0 * std::real(std::conj(z) * xi[j]);
    out[j] = phase * (xi[j] + cx(0.0, dtheta * radial) * z);
  }
  return out;
}

// Additive stochastic flow over [ta, tb].
inline Field phi_A(const Field& u, const NoisePath& path, double ta, double tb,
                   std::size_t m_sub) {
  if (path.model->flavor == NoiseFlavor::RealL2)
    throw std::invalid_argument("phi_A: additive flow expects H-valued (or zero) noise");
  Field out = free_propagator(u, tb - ta);
  if (path.n_modes == 0) return out;
  Field conv = stochastic_convolution(path, ta, tb, m_sub);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += conv[j];
  return out;
}

// Exponential-Euler step of du = i Lap u dt + [star correction] dt + i g u dW
// with g(|u|^2), drift and diffusion coefficients frozen at the left state:
//   e^{i Lap tau} u + tau e^{i Lap tau} drift + sum_j e^{i Lap (tb - s_j)} (i g u dW_j).
// The Endpoint variant weights every noise term with e^{i Lap tau} instead.
inline Field phi_M_exp_euler(const Field& u, const NoisePath& path, double ta,
                             double tb, std::size_t m_sub, const DiffusionG& g,
                             ConvWeighting weighting = ConvWeighting::Substep) {
  const NoiseModel& model = *path.model;
  if (model.flavor == NoiseFlavor::RealL2)
    throw std::invalid_argument("phi_M_exp_euler: expects H-valued (or zero) noise");
  const double tau = tb - ta;

  Field core = drift_correction(u, model, g);
  for (std::size_t j = 0; j < u.size(); ++j) core[j] = u[j] + tau * core[j];
  Field out = free_propagator(core, tau);
  if (path.n_modes == 0) return out;

  const std::size_t ka = path.index_of(ta, "phi_M_exp_euler");
  const std::size_t kb = path.index_of(tb, "phi_M_exp_euler");
  const std::size_t nw = kb - ka;
  if (nw == 0) return out;
  if (m_sub < 1 || nw % m_sub != 0)
    throw std::invalid_argument("phi_M_exp_euler: window not divisible into m_sub groups");

  const Grid& grid = *u.grid;
  const std::size_t n = grid.size();
  const std::size_t group = nw / m_sub;
  std::vector<cx> sub(n), spec(n), acc(n, cx{});
  for (std::size_t w = 0; w < m_sub; ++w) {
    std::fill(sub.begin(), sub.end(), cx{});
    for (std::size_t i = 0; i < path.n_modes; ++i) {
      const double s = path.mode_sum(i, ka + w * group, ka + (w + 1) * group);
      const std::vector<cx>& b = model.basis[i];
      for (std::size_t j = 0; j < n; ++j) sub[j] += s * b[j];
    }
    for (std::size_t j = 0; j < n; ++j)
      sub[j] *= cx(0.0, 1.0) * g(std::norm(u[j])) * u[j];
    grid.forward(sub.data(), spec.data());
    const double lag = weighting == ConvWeighting::Substep
                           ? tb - (ta + double(w) * double(group) * path.dt_fine)
                           : tau;
    for (std::size_t m = 0; m < n; ++m)
      acc[m] += spec[m] * std::polar(1.0, grid.laplacian_symbol(m) * lag);
  }
  std::vector<cx> noise(n);
  grid.inverse(acc.data(), noise.data());
  for (std::size_t j = 0; j < n; ++j) out[j] += noise[j];
  return out;
}

// Analytic solution of the stochastic substep
//   du = drift_correction dt + (additive: dW | multiplicative: i g(|u|^2) u dW).
// Case 1: additive coupling          -> u + (W(tb) - W(ta)).
// Case 2: H-valued W, g == 1         -> u exp(i W~ + (sigma - mu) tau / 2);
//         Ito exponential with the bilinear quadratic variation sigma(x);
//         this closed form is gated behind the Euler-Maruyama oracle.
// Case 3: real-valued W, general g   -> u exp(i g(|u|^2) W~); |u| invariant,
//         so the frozen coefficient is exact.
inline Field phi_S_analytic(const Field& u, const NoisePath& path, double ta,
                            double tb, Coupling coupling, const DiffusionG& g) {
  const NoiseModel& model = *path.model;
  if (model.flavor == NoiseFlavor::None || path.n_modes == 0)
    return u;  // no noise: the substep is the identity
  if (coupling == Coupling::Additive) {
    Field out = u;
    Field dW = coarse_increment(path, ta, tb);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += dW[j];
    return out;
  }
  if (model.flavor == NoiseFlavor::RealL2) {  // Case 3
    Field dW = coarse_increment(path, ta, tb);
    Field out(u.grid);
    for (std::size_t j = 0; j < u.size(); ++j) {
      const cx z = u[j];
      if (z == cx{}) continue;
      out[j] = z * std::polar(1.0, g(std::norm(z)) * dW[j].real());
    }
    return out;
  }
  if (g.kind == GKind::One) {  // Case 2
    const double tau = tb - ta;
    Field dW = coarse_increment(path, ta, tb);
    Field out(u.grid);
    for (std::size_t j = 0; j < u.size(); ++j)
      out[j] = u[j] * std::exp(cx(0.0, 1.0) * dW[j] +
                               0.5 * (model.sigma[j] - model.mu[j]) * tau);
    return out;
  }
  throw UnsupportedStochasticSubstep(
      "phi_S_analytic: H-valued noise with state-dependent g has no closed form; "
      "use phi_S_euler");
}

// One explicit Euler-Maruyama step of the same substep over the whole window.
inline Field phi_S_euler(const Field& u, const NoisePath& path, double ta, double tb,
                         Coupling coupling, const DiffusionG& g) {
  Field out = u;
  if (path.n_modes == 0) return out;
  Field dW = coarse_increment(path, ta, tb);
  if (coupling == Coupling::Additive) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += dW[j];
    return out;
  }
  const double tau = tb - ta;
  Field drift = drift_correction(u, *path.model, g);
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] += tau * drift[j] + cx(0.0, 1.0) * g(std::norm(u[j])) * u[j] * dW[j];
  return out;
}

// Tangent of the analytic substep (noise frozen).  Case 1 is a shift
// (identity tangent); Case 2 is linear, so the tangent is the same
// multiplier; Case 3 is the phase-flow linearization.
inline Field phi_S_analytic_tangent(const Field& u, const Field& xi,
                                    const NoisePath& path, double ta, double tb,
                                    Coupling coupling, const DiffusionG& g) {
  const NoiseModel& model = *path.model;
  if (model.flavor == NoiseFlavor::None || path.n_modes == 0 ||
      coupling == Coupling::Additive)
    return xi;
  if (model.flavor == NoiseFlavor::RealL2) {
    Field dW = coarse_increment(path, ta, tb);
    Field out(u.grid);
    for (std::size_t j = 0; j < u.size(); ++j) {
      const cx z = u[j];
      if (z == cx{}) {
        out[j] = xi[j];
        continue;
      }
      const double rho = std::norm(z);
      const double w = dW[j].real();
      const cx phase = std::polar(1.0, g(rho) * w);
      const double radial = 2.0 * std::real(std::conj(z) * xi[j]);
      out[j] = phase * (xi[j] + cx(0.0, g.prime(rho) * w * radial) * z);
    }
    return out;
  }
  if (g.kind == GKind::One) {
    const double tau = tb - ta;
    Field dW = coarse_increment(path, ta, tb);
    Field out(u.grid);
    for (std::size_t j = 0; j < u.size(); ++j)
      out[j] = xi[j] * std::exp(cx(0.0, 1.0) * dW[j] +
                                0.5 * (model.sigma[j] - model.mu[j]) * tau);
    return out;
  }
  throw UnsupportedStochasticSubstep(
      "phi_S_analytic_tangent: no closed-form linearization for state-dependent g "
      "with H-valued noise");
}

}  // namespace slogs
