#pragma once
// Brute-force references used to validate the flows and schemes before they
// are trusted.  Nothing here shares numerical machinery with the code under
// test: Fourier transforms are naive O(n^2) DFT sums, the Laplacian is a
// direct symbol multiplication on that DFT, and the implicit solver is a
// dense finite-difference Newton iteration in stacked real coordinates.
// Everything is meant for small grids (n <= 16); clarity over speed.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "flows.hpp"
#include "noise.hpp"
#include "regularization.hpp"

namespace slogs {
namespace oracle {

// ---- naive spectral helpers (independent of the FFTW path) ----

inline std::vector<cx> dft_forward(const Field& u) {
  const std::size_t n = u.size();
  std::vector<cx> spec(n, cx{});
  const double w = -2.0 * std::numbers::pi / double(n);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t j = 0; j < n; ++j)
      spec[m] += u[j] * std::polar(1.0, w * double(m) * double(j));
  return spec;
}

inline Field dft_inverse(const GridPtr& grid, const std::vector<cx>& spec) {
  const std::size_t n = spec.size();
  Field u(grid);
  const double w = 2.0 * std::numbers::pi / double(n);
  for (std::size_t j = 0; j < n; ++j) {
    cx acc{};
    for (std::size_t m = 0; m < n; ++m)
      acc += spec[m] * std::polar(1.0, w * double(m) * double(j));
    u[j] = acc / double(n);
  }
  return u;
}

inline double symbol(const Grid& g, std::size_t m) {
  const std::size_t n = g.size();
  const long mode = m < n / 2 ? long(m) : long(m) - long(n);
  const double k = 2.0 * std::numbers::pi * double(mode) / g.length();
  return -k * k;
}

inline Field apply_laplacian(const Field& u) {
  std::vector<cx> spec = dft_forward(u);
  for (std::size_t m = 0; m < spec.size(); ++m) spec[m] *= symbol(*u.grid, m);
  return dft_inverse(u.grid, spec);
}

// Cayley propagator and half-step resolvent, same conventions as the spectral
// engine but assembled through the naive DFT.
inline Field cayley(const Field& u, double tau) {
  std::vector<cx> spec = dft_forward(u);
  for (std::size_t m = 0; m < spec.size(); ++m) {
    const cx num(1.0, 0.5 * tau * symbol(*u.grid, m));
    spec[m] *= num / std::conj(num);
  }
  return dft_inverse(u.grid, spec);
}

inline Field half_resolvent_ref(const Field& u, double tau) {
  std::vector<cx> spec = dft_forward(u);
  for (std::size_t m = 0; m < spec.size(); ++m)
    spec[m] /= cx(1.0, -0.5 * tau * symbol(*u.grid, m));
  return dft_inverse(u.grid, spec);
}

// ---- spectral truncation ----

// Keeps the n_g lowest modes in the frequency order 0, +1, -1, +2, -2, ...
// (the same ordering the noise expansion uses).
struct GalerkinSystem {
  GridPtr grid;
  std::size_t n_g = 0;

  GalerkinSystem(GridPtr g, std::size_t retained) : grid(std::move(g)), n_g(retained) {
    const std::size_t n = grid->size();
    if (n_g < 1 || n_g > 16 || n_g > n)
      throw std::invalid_argument(
          "GalerkinSystem: retained mode count must lie in [1, min(16, n)]");
  }

  bool retained(std::size_t m) const {
    const std::size_t n = grid->size();
    const long mode = m < n / 2 ? long(m) : long(m) - long(n);
    // order index of frequency k: 0 -> 0, +1 -> 1, -1 -> 2, +2 -> 3, ...
    const std::size_t ord = mode > 0 ? 2 * std::size_t(mode) - 1
                                     : 2 * std::size_t(-mode);
    return ord < n_g;
  }

  Field project(const Field& u) const {
    if (u.grid != grid)
      throw std::invalid_argument("GalerkinSystem: field lives on another grid");
    std::vector<cx> spec = dft_forward(u);
    for (std::size_t m = 0; m < spec.size(); ++m)
      if (!retained(m)) spec[m] = cx{};
    return dft_inverse(grid, spec);
  }
};

// ---- Euler-Maruyama reference integrator ----

struct OracleOptions {
  bool laplacian = true;        // include i Lap u in the drift
  bool log_phase = true;        // include i lambda f_eps(|u|^2) u
  double blowup_cap = 1e6;      // L2 norm beyond which the path is abandoned
  const GalerkinSystem* truncation = nullptr;  // optional projection per step
  const Field* frozen = nullptr;  // evaluate drift/diffusion coefficients here
};

struct OracleRun {
  Field u;
  bool blew_up = false;
  double t_stop = 0.0;  // time actually reached
};

// Explicit Euler-Maruyama on the Ito form of the regularized equation:
//   u+ = u + dt (i Lap u + i lambda f_eps(|u|^2) u + correction(u))
//          + { dW  (additive) | i g(|u|^2) u dW  (multiplicative) }.
// The Ito correction is spelled out inline from the model's intensity fields
// rather than calling into the flow layer, so a sign error there cannot hide.
inline OracleRun em_reference(const Field& u0, double T, double dt_oracle,
                              const NoisePath& path, Coupling coupling,
                              const DiffusionG& g, const RegFamily& reg,
                              double lambda, const OracleOptions& opt = {}) {
  if (!(T > 0.0) || !(dt_oracle > 0.0))
    throw std::invalid_argument("em_reference: T and dt_oracle must be positive");
  const double steps_d = T / dt_oracle;
  const std::size_t steps = std::size_t(std::llround(steps_d));
  if (std::abs(steps_d - double(steps)) > 1e-9 * steps_d || steps == 0)
    throw std::invalid_argument("em_reference: T is not a multiple of dt_oracle");
  if (reg.epsilon == 0.0 && lambda != 0.0 && opt.log_phase)
    throw std::invalid_argument(
        "em_reference: the unregularized log drift is singular at vacuum");

  const NoiseModel& model = *path.model;
  const bool noisy = model.flavor != NoiseFlavor::None && path.n_modes > 0;
  OracleRun run{u0, false, 0.0};
  Field& u = run.u;
  Field drift(u0.grid);

  for (std::size_t k = 0; k < steps; ++k) {
    const double ta = double(k) * dt_oracle;
    const Field& coeff = opt.frozen ? *opt.frozen : u;

    if (opt.laplacian) {
      drift = apply_laplacian(u);
      for (std::size_t j = 0; j < drift.size(); ++j) drift[j] *= cx(0.0, 1.0);
    } else {
      drift = Field(u0.grid);
    }
    if (opt.log_phase && lambda != 0.0) {
      for (std::size_t j = 0; j < drift.size(); ++j)
        drift[j] += cx(0.0, lambda * f_eps(reg, std::norm(u[j]))) * u[j];
    }
    if (coupling == Coupling::Multiplicative && noisy) {
      for (std::size_t j = 0; j < drift.size(); ++j) {
        const double rho = std::norm(coeff[j]);
        const double gv = g(rho);
        drift[j] += -0.5 * model.mu[j] * gv * gv * coeff[j] -
                    cx(0.0, 1.0) * model.nu[j] * gv * g.prime(rho) * rho * coeff[j];
      }
    }

    for (std::size_t j = 0; j < u.size(); ++j) u[j] += dt_oracle * drift[j];
    if (noisy) {
      Field dW = coarse_increment(path, ta, ta + dt_oracle);
      if (coupling == Coupling::Additive) {
        for (std::size_t j = 0; j < u.size(); ++j) u[j] += dW[j];
      } else {
        for (std::size_t j = 0; j < u.size(); ++j)
          u[j] += cx(0.0, 1.0) * g(std::norm(coeff[j])) * coeff[j] * dW[j];
      }
    }
    if (opt.truncation) u = opt.truncation->project(u);

    run.t_stop = ta + dt_oracle;
    if (!all_finite(u) || norm_l2(u) > opt.blowup_cap) {
      run.blew_up = true;
      return run;
    }
  }
  return run;
}

// ---- implicit midpoint solver ----

// Residual of the implicit midpoint step
//   u+ = S_tau v + T_tau (i lambda tau f_eps(|m|^2) m),  m = (v + u+)/2,
// with S_tau the Cayley propagator and T_tau the half-step resolvent.
inline Field midpoint_residual(const Field& u_plus, const Field& v, double tau,
                               const RegFamily& reg, double lambda) {
  require_same_grid(u_plus, v, "midpoint_residual");
  Field m(v.grid);
  for (std::size_t j = 0; j < v.size(); ++j) m[j] = 0.5 * (v[j] + u_plus[j]);
  Field w(v.grid);
  for (std::size_t j = 0; j < v.size(); ++j)
    w[j] = cx(0.0, lambda * tau * f_eps(reg, std::norm(m[j]))) * m[j];
  Field sv = cayley(v, tau);
  Field tw = half_resolvent_ref(w, tau);
  Field r(v.grid);
  for (std::size_t j = 0; j < v.size(); ++j) r[j] = u_plus[j] - sv[j] - tw[j];
  return r;
}

// Newton iteration on the stacked real coordinates (Re u_0, Im u_0, ...) with
// a forward-difference Jacobian, solved densely.  Start point is S_tau v.
inline Field newton_implicit(const Field& v, double tau, const RegFamily& reg,
                             double lambda, double tol, std::size_t max_iter = 50) {
  if (!(tol > 0.0)) throw std::invalid_argument("newton_implicit: tol must be > 0");
  const std::size_t n = v.size();
  const std::size_t dim = 2 * n;

  Field u = cayley(v, tau);
  auto residual = [&](const Field& x) { return midpoint_residual(x, v, tau, reg, lambda); };
  auto pack = [n](const Field& f, Eigen::VectorXd& x) {
    for (std::size_t j = 0; j < n; ++j) {
      x[2 * j] = f[j].real();
      x[2 * j + 1] = f[j].imag();
    }
  };

  Eigen::VectorXd r(dim), rp(dim);
  for (std::size_t it = 0; it < max_iter; ++it) {
    Field res = residual(u);
    if (norm_l2(res) <= tol) return u;
    pack(res, r);

    Eigen::MatrixXd jac(dim, dim);
    Field up = u;
    for (std::size_t c = 0; c < dim; ++c) {
      const std::size_t j = c / 2;
      const bool im = c % 2;
      const double base = im ? u[j].imag() : u[j].real();
      const double h = 1e-7 * std::max(1.0, std::abs(base));
      up[j] = im ? cx(u[j].real(), base + h) : cx(base + h, u[j].imag());
      pack(residual(up), rp);
      jac.col(Eigen::Index(c)) = (rp - r) / h;
      up[j] = u[j];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    if (qr.rank() < Eigen::Index(dim))
      throw std::runtime_error("newton_implicit: singular Jacobian");
    Eigen::VectorXd delta = qr.solve(-r);
    if (!delta.allFinite())
      throw std::runtime_error("newton_implicit: non-finite Newton update");
    for (std::size_t j = 0; j < n; ++j)
      u[j] += cx(delta[2 * j], delta[2 * j + 1]);
  }
  if (norm_l2(residual(u)) <= tol) return u;
  throw std::runtime_error("newton_implicit: no convergence in " +
                           std::to_string(max_iter) + " iterations");
}

}  // namespace oracle
}  // namespace slogs
