#pragma once
// Functionals recorded along trajectories -- mass, weighted mass, regularized
// entropy and energy, the symplectic pairing -- plus per-step statistical
// residuals of the mean evolution laws for the mass and weighted mass.
//
// The weighted-mass residual subtracts the deterministic transport term and,
// for additive noise, the weighted trace of Q.  For multiplicative noise
// nothing else is subtracted: with real-valued noise the remaining drift
// vanishes identically, while for H-valued noise the statistic still contains
// the nu-weighted drift and is reported as is.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "flows.hpp"
#include "noise.hpp"
#include "regularization.hpp"
#include "schemes.hpp"

namespace slogs {

struct ObservableRecord {
  double t = 0.0;
  double mass = 0.0;        // ||u||^2
  double mass_alpha = 0.0;  // ||u||^2 with weight (1+x^2)^alpha
  double entropy_f = 0.0;   // int Ftil_eps(|u|^2) dx
  double energy_h = 0.0;    // 1/2 ||grad u||^2 - (lambda/2) entropy
  std::vector<double> omega_samples;  // pairings of stored tangent pairs
};

inline bool is_finite(const ObservableRecord& r) {
  if (!std::isfinite(r.t) || !std::isfinite(r.mass) ||
      !std::isfinite(r.mass_alpha) || !std::isfinite(r.entropy_f) ||
      !std::isfinite(r.energy_h))
    return false;
  for (double w : r.omega_samples)
    if (!std::isfinite(w)) return false;
  return true;
}

// omega(xi, eta) = Im int conj(xi) eta dx; the canonical 2-form the flows of
// the Hamiltonian pieces preserve.
inline double symplectic_form(const Field& xi, const Field& eta) {
  return cinner(xi, eta).imag();
}

inline ObservableRecord observe(const Field& u, const RegFamily& reg,
                                double lambda, double alpha, double t = 0.0) {
  ObservableRecord r;
  r.t = t;
  r.mass = norm_l2_sq(u);
  const double wn = norm_weighted(u, alpha);
  r.mass_alpha = wn * wn;
  r.entropy_f = entropy(reg, u);
  r.energy_h = energy(reg, u, lambda);
  return r;
}

inline std::vector<ObservableRecord> observe_trajectory(const Trajectory& traj,
                                                        const RegFamily& reg,
                                                        double lambda,
                                                        double alpha) {
  std::vector<ObservableRecord> out;
  out.reserve(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k)
    out.push_back(observe(traj.states[k], reg, lambda, alpha, traj.times[k]));
  return out;
}

// Deterministic pairwise reduction; the batch statistics below use it so the
// result is independent of how paths were distributed across workers.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& xs) {
  return pairwise_sum(xs.data(), xs.size());
}

// Rate at which the free flow moves mass across the weight:
//   d/dt M_alpha = 4 alpha Im int (1+x^2)^{alpha-1} x conj(u) du/dx.
// Sign convention checked against the flow itself: a packet with positive
// momentum on the right half of the torus gains weighted mass.
inline double weighted_mass_transport(const Field& u, double alpha) {
  const Grid& g = *u.grid;
  Field gu = gradient(u);
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.point(j);
    s += std::pow(1.0 + x * x, alpha - 1.0) * x *
         std::imag(std::conj(u[j]) * gu[j]);
  }
  return 4.0 * alpha * g.spacing() * s;
}

struct MassLawStats {
  std::vector<double> t;  // left endpoint of each step
  std::vector<double> mean, se;              // plain-mass residual
  std::vector<double> mean_alpha, se_alpha;  // weighted-mass residual
  std::size_t n_paths = 0;
};

// Per-step sample mean and standard error of
//   M(u_{k+1}) - M(u_k) - tau TrQ [additive]
//   M_a(u_{k+1}) - M_a(u_k) - tau * trapezoid(transport) - tau TrQ_a [additive]
// over a batch of trajectories driven by independent paths.  The transport
// integrand is time-discretized, so the weighted residual carries an O(tau)
// bias on top of the Monte Carlo error.
inline MassLawStats mass_law_residual(const std::vector<Trajectory>& batch,
                                      const NoiseModel& model,
                                      const SchemeConfig& scheme, double alpha) {
  if (batch.size() < 100)
    throw std::invalid_argument("mass_law_residual: need at least 100 trajectories, got " +
                                std::to_string(batch.size()));
  const std::size_t n_paths = batch.size();
  const std::vector<double>& times = batch.front().times;
  for (const Trajectory& tr : batch)
    if (tr.failed || tr.times != times)
      throw std::invalid_argument(
          "mass_law_residual: trajectories must be complete and share one step grid");

  const double tau = scheme.tau;
  const bool additive = scheme.coupling == Coupling::Additive;
  const Grid& g = *model.grid;
  double trace_q = 0.0, trace_q_alpha = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.point(j);
    trace_q += model.mu[j];
    trace_q_alpha += std::pow(1.0 + x * x, alpha) * model.mu[j];
  }
  trace_q *= g.spacing();
  trace_q_alpha *= g.spacing();

  MassLawStats out;
  out.n_paths = n_paths;
  const std::size_t n_steps = times.size() - 1;
  std::vector<double> r(n_paths), ra(n_paths), dev(n_paths);
  auto push = [&](const std::vector<double>& xs, std::vector<double>& means,
                  std::vector<double>& ses) {
    const double mean = pairwise_sum(xs) / double(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p)
      dev[p] = (xs[p] - mean) * (xs[p] - mean);
    const double var = pairwise_sum(dev) / double(n_paths - 1);
    means.push_back(mean);
    ses.push_back(std::sqrt(var / double(n_paths)));
  };
  for (std::size_t k = 0; k < n_steps; ++k) {
    for (std::size_t p = 0; p < n_paths; ++p) {
      const Field& a = batch[p].states[k];
      const Field& b = batch[p].states[k + 1];
      r[p] = norm_l2_sq(b) - norm_l2_sq(a) - (additive ? tau * trace_q : 0.0);
      const double wa = norm_weighted(a, alpha);
      const double wb = norm_weighted(b, alpha);
      const double drift = 0.5 * (weighted_mass_transport(a, alpha) +
                                  weighted_mass_transport(b, alpha));
      ra[p] = wb * wb - wa * wa - tau * drift -
              (additive ? tau * trace_q_alpha : 0.0);
    }
    out.t.push_back(times[k]);
    push(r, out.mean, out.se);
    push(ra, out.mean_alpha, out.se_alpha);
  }
  return out;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& os, const std::vector<ObservableRecord>& recs) {
  os << "t,M,M_alpha,F_eps,H_eps\n";
  for (const ObservableRecord& r : recs)
    os << format_double(r.t) << ',' << format_double(r.mass) << ','
       << format_double(r.mass_alpha) << ',' << format_double(r.entropy_f) << ','
       << format_double(r.energy_h) << '\n';
}

}  // namespace slogs
