#pragma once
// The five composed time-steppers.
//
//   LieAdd             Phi_A  o Phi_f        additive noise
//   LieMulExp          Phi_M~ o Phi_f        H-valued multiplicative noise
//   LieConservative    Phi_D  o Phi_{f+g}    real multiplicative noise,
//                                            pathwise mass-conserving
//   MidpointSplit      Phi_S, then implicit midpoint of the deterministic part
//   CrankNicolsonSplit Phi_S, then the discrete-gradient variant whose
//                      nonlinear coefficient is the averaged f
//
// The implicit substeps are solved by fixed-point iteration; the contraction
// degrades as tau approaches c0/(1+|log eps|), which is surfaced as a step
// ceiling (warning by default, error in strict mode).  A failed solve raises
// StepFailure; the trajectory driver stops there and returns what it has.

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "flows.hpp"
#include "noise.hpp"
#include "regularization.hpp"

namespace slogs {

enum class SchemeId {
  LieAdd,
  LieMulExp,
  LieConservative,
  MidpointSplit,
  CrankNicolsonSplit,
};

inline const char* to_string(SchemeId id) {
  switch (id) {
    case SchemeId::LieAdd: return "lie_add";
    case SchemeId::LieMulExp: return "lie_mul_exp";
    case SchemeId::LieConservative: return "lie_conservative";
    case SchemeId::MidpointSplit: return "midpoint_split";
    default: return "crank_nicolson_split";
  }
}

struct SchemeConfig {
  SchemeId id = SchemeId::LieAdd;
  double lambda = 1.0;
  RegFamily reg;
  DiffusionG g = DiffusionG::one();
  Coupling coupling = Coupling::Multiplicative;
  double tau = 1e-2;
  double fp_tol = 1e-11;       // update tolerance, scaled by max(1, ||v||)
  std::size_t max_iter = 50;
  std::size_t m_sub = 8;       // stochastic-convolution sub-windows per step
  ConvWeighting weighting = ConvWeighting::Substep;
  double c0 = 0.0;             // step-ceiling constant; 0 picks 0.5/|lambda|
  bool strict = false;         // ceiling violation throws instead of warning
  bool allow_euler_substep = true;

  // tau must stay under c0/(1+|log eps|) for the implicit solvers to
  // contract; the constant is not quantified anywhere authoritative, so it
  // is exposed rather than hard-coded.
  double ceiling() const {
    double c = c0;
    if (c == 0.0) {
      if (lambda == 0.0) return std::numeric_limits<double>::infinity();
      c = 0.5 / std::abs(lambda);
    }
    if (!std::isfinite(c)) return std::numeric_limits<double>::infinity();
    if (reg.epsilon == 0.0) return 0.0;
    return c / (1.0 + std::abs(std::log(reg.epsilon)));
  }
};

inline void check_config(const SchemeConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("SchemeConfig: tau must be > 0");
  if (!(cfg.fp_tol > 0.0))
    throw std::invalid_argument("SchemeConfig: fixed-point tol must be > 0");
  if (cfg.max_iter < 1)
    throw std::invalid_argument("SchemeConfig: max_iter must be >= 1");
  if (cfg.m_sub < 1) throw std::invalid_argument("SchemeConfig: M_sub must be >= 1");
  const double cap = cfg.ceiling();
  if (cfg.tau >= cap) {
    const std::string msg = "tau = " + std::to_string(cfg.tau) +
                            " is at or above the step ceiling " +
                            std::to_string(cap) +
                            " = c0/(1+|log eps|); the implicit solves may stall";
    if (cfg.strict) throw std::invalid_argument("SchemeConfig: " + msg);
    std::cerr << "warning: " << msg << "\n";
  }
}

// Raised when an implicit substep fails to converge; carries the last update
// size so the caller can see how far from contraction the iteration was.
struct StepFailure : std::runtime_error {
  double residual;
  std::size_t iterations;
  StepFailure(const std::string& msg, double r, std::size_t it)
      : std::runtime_error(msg), residual(r), iterations(it) {}
};

struct StepResult {
  Field u;
  std::size_t iterations = 0;  // implicit-solver iterations (0 for Lie steps)
  double residual = 0.0;       // last fixed-point update norm
  bool euler_substep = false;  // stochastic substep fell back to Euler
};

// ---- explicit Lie compositions ----

inline Field step_lie_add(const Field& u, const SchemeConfig& cfg,
                          const NoisePath& path, double ta) {
  if (cfg.coupling != Coupling::Additive)
    throw std::invalid_argument("step_lie_add: configure additive coupling");
  Field v = phi_f(u, cfg.tau, cfg.reg, cfg.lambda);
  return phi_A(v, path, ta, ta + cfg.tau, cfg.m_sub);
}

inline Field step_lie_mul_exp(const Field& u, const SchemeConfig& cfg,
                              const NoisePath& path, double ta) {
  if (cfg.coupling != Coupling::Multiplicative)
    throw std::invalid_argument("step_lie_mul_exp: configure multiplicative coupling");
  Field v = phi_f(u, cfg.tau, cfg.reg, cfg.lambda);
  return phi_M_exp_euler(v, path, ta, ta + cfg.tau, cfg.m_sub, cfg.g, cfg.weighting);
}

inline Field step_lie_conservative(const Field& u, const SchemeConfig& cfg,
                                   const NoisePath& path, double ta) {
  const NoiseFlavor flavor = path.model->flavor;
  if (flavor == NoiseFlavor::ComplexH)
    throw std::invalid_argument(
        "step_lie_conservative: needs real-valued (or zero) noise");
  if (cfg.coupling != Coupling::Multiplicative)
    throw std::invalid_argument(
        "step_lie_conservative: configure multiplicative coupling");
  Field dW = path.n_modes > 0 ? coarse_increment(path, ta, ta + cfg.tau)
                              : Field(u.grid);
  Field v = phi_fg_conservative(u, cfg.tau, cfg.reg, cfg.lambda, cfg.g, dW);
  return free_propagator(v, cfg.tau);
}

// ---- implicit midpoint / Crank-Nicolson substep ----

// Solves u+ = S_tau v + T_tau (i lambda tau c_j m_j), m = (v + u+)/2, where
// the coefficient c is f_eps(|m|^2) for the midpoint scheme and
// averaged_f(|v|^2, |u+|^2) for the Crank-Nicolson variant.
inline StepResult solve_deterministic_substep(const Field& v, const SchemeConfig& cfg,
                                              bool use_averaged) {
  const double tau = cfg.tau;
  const double scale = std::max(1.0, norm_l2(v));
  Field sv = cayley_step(v, tau);
  Field up = sv;
  Field m(v.grid), w(v.grid);
  double delta = 0.0;
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    for (std::size_t j = 0; j < v.size(); ++j) m[j] = 0.5 * (v[j] + up[j]);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double c = use_averaged
                           ? averaged_f(cfg.reg, std::norm(v[j]), std::norm(up[j]))
                           : f_eps(cfg.reg, std::norm(m[j]));
      w[j] = cx(0.0, cfg.lambda * tau * c) * m[j];
    }
    Field next = half_resolvent(w, tau);
    for (std::size_t j = 0; j < v.size(); ++j) next[j] += sv[j];
    Field diff = next;
    for (std::size_t j = 0; j < v.size(); ++j) diff[j] -= up[j];
    delta = norm_l2(diff);
    up = next;
    if (delta <= cfg.fp_tol * scale) return {up, it, delta, false};
  }
  throw StepFailure("implicit substep: no contraction after " +
                        std::to_string(cfg.max_iter) + " iterations (update " +
                        std::to_string(delta) + "); tau is likely above tau_0",
                    delta, cfg.max_iter);
}

inline bool analytic_substep_supported(const NoiseModel& m, Coupling coupling,
                                       const DiffusionG& g) {
  if (m.flavor == NoiseFlavor::None) return true;
  if (coupling == Coupling::Additive) return true;
  if (m.flavor == NoiseFlavor::RealL2) return true;
  return g.kind == GKind::One;
}

inline Field stochastic_substep(const Field& u, const SchemeConfig& cfg,
                                const NoisePath& path, double ta, bool& used_euler) {
  if (analytic_substep_supported(*path.model, cfg.coupling, cfg.g)) {
    used_euler = false;
    return phi_S_analytic(u, path, ta, ta + cfg.tau, cfg.coupling, cfg.g);
  }
  if (!cfg.allow_euler_substep)
    throw std::invalid_argument(
        "stochastic substep: no closed form for this model and Euler fallback "
        "is disabled");
  used_euler = true;
  return phi_S_euler(u, path, ta, ta + cfg.tau, cfg.coupling, cfg.g);
}

inline StepResult step_midpoint(const Field& u, const SchemeConfig& cfg,
                                const NoisePath& path, double ta) {
  bool used_euler = false;
  Field v = stochastic_substep(u, cfg, path, ta, used_euler);
  StepResult r = solve_deterministic_substep(v, cfg, false);
  r.euler_substep = used_euler;
  return r;
}

inline StepResult step_crank_nicolson(const Field& u, const SchemeConfig& cfg,
                                      const NoisePath& path, double ta) {
  bool used_euler = false;
  Field v = stochastic_substep(u, cfg, path, ta, used_euler);
  StepResult r = solve_deterministic_substep(v, cfg, true);
  r.euler_substep = used_euler;
  return r;
}

inline StepResult step_once(const Field& u, const SchemeConfig& cfg,
                            const NoisePath& path, double ta) {
  switch (cfg.id) {
    case SchemeId::LieAdd: return {step_lie_add(u, cfg, path, ta), 0, 0.0, false};
    case SchemeId::LieMulExp:
      return {step_lie_mul_exp(u, cfg, path, ta), 0, 0.0, false};
    case SchemeId::LieConservative:
      return {step_lie_conservative(u, cfg, path, ta), 0, 0.0, false};
    case SchemeId::MidpointSplit: return step_midpoint(u, cfg, path, ta);
    case SchemeId::CrankNicolsonSplit: return step_crank_nicolson(u, cfg, path, ta);
  }
  throw std::logic_error("step_once: unknown scheme");
}

// ---- pathwise tangent maps (noise frozen) ----

inline Field step_lie_add_tangent(const Field& u, const Field& xi,
                                  const SchemeConfig& cfg) {
  return free_propagator(phi_f_tangent(u, xi, cfg.tau, cfg.reg, cfg.lambda),
                         cfg.tau);
}

inline Field step_lie_conservative_tangent(const Field& u, const Field& xi,
                                           const SchemeConfig& cfg,
                                           const NoisePath& path, double ta) {
  Field dW = path.n_modes > 0 ? coarse_increment(path, ta, ta + cfg.tau)
                              : Field(u.grid);
  return free_propagator(
      phi_fg_tangent(u, xi, cfg.tau, cfg.reg, cfg.lambda, cfg.g, dW), cfg.tau);
}

// Linearization of the midpoint step: differentiate
//   u+ = S_tau v + T_tau (i lambda tau f(|m|^2) m)
// along (v, u+) and solve the resulting linear fixed point for xi+.
inline Field step_midpoint_tangent(const Field& u, const Field& xi,
                                   const SchemeConfig& cfg, const NoisePath& path,
                                   double ta) {
  bool used_euler = false;
  Field v = stochastic_substep(u, cfg, path, ta, used_euler);
  if (used_euler)
    throw std::invalid_argument(
        "step_midpoint_tangent: tangent propagation needs an analytic substep");
  Field xiv = phi_S_analytic_tangent(u, xi, path, ta, ta + cfg.tau, cfg.coupling,
                                     cfg.g);
  Field up = solve_deterministic_substep(v, cfg, false).u;

  const double tau = cfg.tau;
  const double scale = std::max(1.0, norm_l2(xiv));
  Field m(v.grid);
  for (std::size_t j = 0; j < v.size(); ++j) m[j] = 0.5 * (v[j] + up[j]);
  Field sxiv = cayley_step(xiv, tau);
  Field xip = sxiv;
  Field xim(v.grid), w(v.grid);
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    for (std::size_t j = 0; j < v.size(); ++j) xim[j] = 0.5 * (xiv[j] + xip[j]);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double rho = std::norm(m[j]);
      const double radial = 2.0 * std::real(std::conj(m[j]) * xim[j]);
      w[j] = cx(0.0, cfg.lambda * tau) *
             (f_eps(cfg.reg, rho) * xim[j] +
              f_eps_prime(cfg.reg, rho) * radial * m[j]);
    }
    Field next = half_resolvent(w, tau);
    for (std::size_t j = 0; j < v.size(); ++j) next[j] += sxiv[j];
    Field diff = next;
    for (std::size_t j = 0; j < v.size(); ++j) diff[j] -= xip[j];
    const double delta = norm_l2(diff);
    xip = next;
    if (delta <= cfg.fp_tol * scale) return xip;
  }
  throw StepFailure("midpoint tangent: linear fixed point did not contract", 0.0,
                    cfg.max_iter);
}

// ---- trajectory driver ----

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  std::vector<std::size_t> iterations;  // implicit iterations per step
  std::vector<double> residuals;        // last update norm per step
  bool failed = false;
  std::string failure;
  bool euler_substep_used = false;
};

inline Trajectory run_trajectory(const Field& u0, double T, const SchemeConfig& cfg,
                                 const NoisePath& path) {
  check_config(cfg);
  if (T < 0.0) throw std::invalid_argument("run_trajectory: T must be >= 0");
  const double steps_d = T / cfg.tau;
  const std::size_t n_steps = std::size_t(std::llround(steps_d));
  if (std::abs(steps_d - double(n_steps)) > 1e-9 * std::max(1.0, steps_d))
    throw std::invalid_argument("run_trajectory: T is not a multiple of tau");

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(u0);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double ta = double(k) * cfg.tau;
    StepResult r{Field(u0.grid), 0, 0.0, false};
    try {
      r = step_once(traj.states.back(), cfg, path, ta);
    } catch (const StepFailure& e) {
      traj.failed = true;
      traj.failure = e.what();
      return traj;
    }
    if (!all_finite(r.u)) {
      traj.failed = true;
      traj.failure = "non-finite state after step " + std::to_string(k + 1);
      return traj;
    }
    traj.times.push_back(double(k + 1) * cfg.tau);
    traj.states.push_back(std::move(r.u));
    traj.iterations.push_back(r.iterations);
    traj.residuals.push_back(r.residual);
    traj.euler_substep_used = traj.euler_substep_used || r.euler_substep;
  }
  return traj;
}

}  // namespace slogs
