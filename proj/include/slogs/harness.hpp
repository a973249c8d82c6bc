#pragma once
// Experiment drivers on top of the steppers: Monte Carlo over noise paths,
// ladder coupling (one path per sample serves every ladder point), log2-log2
// rate fits, and report emission as CSV + JSON.
//
// Everything is deterministic for a fixed (config, seed): path p always draws
// from derive_seed(seed, p), per-path results land in slots indexed by p, and
// statistics reduce in fixed pairwise order, so thread count never changes a
// number in the report.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "field.hpp"
#include "flows.hpp"
#include "noise.hpp"
#include "observables.hpp"
#include "oracle.hpp"
#include "regularization.hpp"
#include "schemes.hpp"

namespace slogs {

inline constexpr const char* kVersionString = "slogs 0.1.0";

// ---- parallel map over path indices ----
// Work queue of indices; fn(p) must write only to slot p of caller-owned
// storage.  The first exception thrown by any worker is rethrown here.
template <typename Fn>
void for_each_path(std::size_t n_paths, int threads, Fn&& fn) {
  const std::size_t nt =
      std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n_paths, 1));
  if (nt <= 1) {
    for (std::size_t p = 0; p < n_paths; ++p) fn(p);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t p = next.fetch_add(1);
      if (p >= n_paths) return;
      try {
        fn(p);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- slope fitting ----

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool defined = false;  // needs >= 3 positive samples
};

inline SlopeFit fit_loglog(const std::vector<double>& xs,
                           const std::vector<double>& ys) {
  SlopeFit fit;
  if (xs.size() != ys.size() || xs.size() < 3) return fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) return fit;
    lx.push_back(std::log2(xs[i]));
    ly.push_back(std::log2(ys[i]));
  }
  const double n = double(lx.size());
  const double mx = pairwise_sum(lx) / n;
  const double my = pairwise_sum(ly) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.defined = true;
  return fit;
}

// ---- report containers ----

struct LadderPoint {
  double x = 0.0;
  double mean = 0.0;  // mean error / gap / residual at this point
  double se = 0.0;
  std::size_t n_paths = 0;  // successful samples
  std::size_t n_failed = 0;
  bool ok = false;
};

struct Fingerprint {
  std::string version = kVersionString;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double length = 0.0;
  std::size_t paths = 0;
  int threads = 1;
  std::string scheme;
};

struct RunReport {
  std::string experiment;
  std::string x_label = "tau";
  std::vector<LadderPoint> points;
  std::string secondary_label;  // empty when the experiment has no second track
  std::vector<LadderPoint> secondary;
  SlopeFit fit;
  bool pass = false;
  std::vector<std::string> notes;
  ToleranceBlock tol;
  Fingerprint fingerprint;
};

namespace detail {

inline double l2_dist(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
  return std::sqrt(s * a.grid->spacing());
}

inline Fingerprint fingerprint_of(const ExperimentSpec& spec) {
  Fingerprint fp;
  fp.seed = spec.seed;
  fp.n = spec.n;
  fp.length = spec.length;
  fp.paths = spec.paths;
  fp.threads = spec.threads;
  fp.scheme = to_string(spec.scheme.id);
  return fp;
}

inline std::size_t steps_of(double T, double tau, const char* who) {
  const double r = T / tau;
  const std::size_t k = std::size_t(std::llround(r));
  if (k < 1 || std::abs(r - double(k)) > 1e-9 * std::max(1.0, r))
    throw ConfigError(std::string(who) + ": horizon " + std::to_string(T) +
                      " is not a positive multiple of tau " + std::to_string(tau));
  return k;
}

// Rescale a scheme config to a ladder step.  The convolution substep count
// shrinks with the step so it always divides the number of fine increments.
inline SchemeConfig tuned(const SchemeConfig& base, double tau, double dt_fine) {
  SchemeConfig cfg = base;
  cfg.tau = tau;
  const std::size_t fine = steps_of(tau, dt_fine, "ladder step");
  cfg.m_sub = std::min(base.m_sub, fine);
  return cfg;
}

// Mean and standard error over the successful samples, in path order.
inline void mean_se(const std::vector<double>& vals, const std::vector<char>& bad,
                    LadderPoint& pt) {
  std::vector<double> good;
  good.reserve(vals.size());
  for (std::size_t p = 0; p < vals.size(); ++p)
    if (!bad[p]) good.push_back(vals[p]);
  pt.n_paths = good.size();
  pt.n_failed = vals.size() - good.size();
  if (good.empty()) return;
  pt.mean = pairwise_sum(good) / double(good.size());
  if (good.size() < 2) return;
  std::vector<double> dev(good.size());
  for (std::size_t p = 0; p < good.size(); ++p)
    dev[p] = (good[p] - pt.mean) * (good[p] - pt.mean);
  const double var = pairwise_sum(dev) / double(good.size() - 1);
  pt.se = std::sqrt(var / double(good.size()));
}

// A ladder point counts as usable when a majority of its samples survived.
inline bool point_usable(const LadderPoint& pt, std::size_t total) {
  return pt.n_paths >= std::max<std::size_t>(1, (total + 1) / 2);
}

inline SlopeFit fit_points(const std::vector<LadderPoint>& pts) {
  std::vector<double> xs, ys;
  for (const LadderPoint& p : pts)
    if (p.ok && p.mean > 0.0) {
      xs.push_back(p.x);
      ys.push_back(p.mean);
    }
  return fit_loglog(xs, ys);
}

inline std::string point_note(const char* label, const LadderPoint& pt) {
  std::ostringstream os;
  os << label << "=" << pt.x << ": mean=" << pt.mean << " se=" << pt.se
     << " n=" << pt.n_paths << " failed=" << pt.n_failed;
  return os.str();
}

}  // namespace detail

// ---- strong order in tau ----
// Self-refinement error against the same scheme at tau_ref = tau_min/8;
// every ladder point consumes the one fine path sampled for its sample index.
inline RunReport strong_order_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  RunReport rep;
  rep.experiment = to_string(spec.kind);
  rep.x_label = "tau";
  rep.tol = spec.tol;
  rep.fingerprint = detail::fingerprint_of(spec);

  const GridPtr grid = spec.make_grid();
  const Field u0 = spec.init.build(grid);
  const NoiseModelPtr model = spec.make_noise();
  const std::vector<double>& taus = spec.tau_ladder;
  const double tau_ref = taus.back() / 8.0;
  const double dt_fine = tau_ref;
  for (double tau : taus) detail::steps_of(spec.T, tau, "strong_order");
  detail::steps_of(spec.T, tau_ref, "strong_order");

  const std::size_t nl = taus.size();
  std::vector<std::vector<double>> err(nl, std::vector<double>(spec.paths, 0.0));
  std::vector<std::vector<char>> bad(nl, std::vector<char>(spec.paths, 0));

  for_each_path(spec.paths, spec.threads, [&](std::size_t p) {
    const NoisePath path =
        sample_path(model, spec.T, dt_fine, derive_seed(spec.seed, p));
    const Trajectory ref = run_trajectory(
        u0, spec.T, detail::tuned(spec.scheme, tau_ref, dt_fine), path);
    if (ref.failed) {
      for (std::size_t i = 0; i < nl; ++i) bad[i][p] = 1;
      return;
    }
    for (std::size_t i = 0; i < nl; ++i) {
      const Trajectory tr = run_trajectory(
          u0, spec.T, detail::tuned(spec.scheme, taus[i], dt_fine), path);
      if (tr.failed) {
        bad[i][p] = 1;
        continue;
      }
      if (spec.sup_error) {
        const std::size_t ratio = std::size_t(std::llround(taus[i] / tau_ref));
        double worst = 0.0;
        for (std::size_t k = 1; k < tr.states.size(); ++k)
          worst = std::max(worst,
                           detail::l2_dist(tr.states[k], ref.states[k * ratio]));
        err[i][p] = worst;
      } else {
        err[i][p] = detail::l2_dist(tr.states.back(), ref.states.back());
      }
    }
  });

  for (std::size_t i = 0; i < nl; ++i) {
    LadderPoint pt;
    pt.x = taus[i];
    detail::mean_se(err[i], bad[i], pt);
    pt.ok = detail::point_usable(pt, spec.paths);
    rep.points.push_back(pt);
    rep.notes.push_back(detail::point_note("tau", pt));
  }
  rep.fit = detail::fit_points(rep.points);
  rep.pass = rep.fit.defined && rep.fit.slope >= spec.tol.slope_min &&
             rep.fit.slope <= spec.tol.slope_max;
  if (!rep.fit.defined)
    rep.notes.push_back("slope withheld: fewer than 3 usable ladder points");
  return rep;
}

// ---- strong error in the regularization parameter ----
// The reference runs three halvings below the smallest ladder entry (same /8
// separation the tau studies use, so the bottom points are not contaminated
// by their own distance to the reference); path, scheme, and tau are
// identical across the ladder.
inline RunReport regularization_error_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  RunReport rep;
  rep.experiment = to_string(spec.kind);
  rep.x_label = "eps";
  rep.tol = spec.tol;
  rep.fingerprint = detail::fingerprint_of(spec);

  const GridPtr grid = spec.make_grid();
  const Field u0 = spec.init.build(grid);
  const NoiseModelPtr model = spec.make_noise();
  const std::vector<double>& eps = spec.eps_ladder;
  const double tau = spec.scheme.tau;
  const double dt_fine = tau / double(std::max<std::size_t>(spec.scheme.m_sub, 1));
  detail::steps_of(spec.T, tau, "regularization_error");

  const std::size_t nl = eps.size();
  const double eps_ref = eps.back() / 8.0;
  std::vector<std::vector<double>> err(nl, std::vector<double>(spec.paths, 0.0));
  std::vector<std::vector<char>> bad(nl, std::vector<char>(spec.paths, 0));

  for_each_path(spec.paths, spec.threads, [&](std::size_t p) {
    const NoisePath path =
        sample_path(model, spec.T, dt_fine, derive_seed(spec.seed, p));
    SchemeConfig ref_cfg = detail::tuned(spec.scheme, tau, dt_fine);
    ref_cfg.reg = RegFamily(eps_ref, spec.scheme.reg.kind);
    const Trajectory ref = run_trajectory(u0, spec.T, ref_cfg, path);
    if (ref.failed) {
      for (std::size_t i = 0; i < nl; ++i) bad[i][p] = 1;
      return;
    }
    for (std::size_t i = 0; i < nl; ++i) {
      SchemeConfig cfg = ref_cfg;
      cfg.reg = RegFamily(eps[i], spec.scheme.reg.kind);
      const Trajectory tr = run_trajectory(u0, spec.T, cfg, path);
      if (tr.failed) {
        bad[i][p] = 1;
        continue;
      }
      err[i][p] = detail::l2_dist(tr.states.back(), ref.states.back());
    }
  });

  for (std::size_t i = 0; i < nl; ++i) {
    LadderPoint pt;
    pt.x = eps[i];
    detail::mean_se(err[i], bad[i], pt);
    pt.ok = detail::point_usable(pt, spec.paths);
    rep.points.push_back(pt);
    rep.notes.push_back(detail::point_note("eps", pt));
  }
  rep.fit = detail::fit_points(rep.points);
  rep.pass = rep.fit.defined && rep.fit.slope >= spec.tol.slope_min &&
             rep.fit.slope <= spec.tol.slope_max;
  if (!rep.fit.defined)
    rep.notes.push_back("slope withheld: fewer than 3 usable ladder points");
  return rep;
}

// ---- entropy / energy gaps ----
// eps mode (eps ladder >= 2 entries): gap_i = |E Phi_eps_i(u_i(T)) - E
// Phi_ref(u_ref(T))| at fixed tau, reference = eps_min/8 (three halvings
// below the ladder, same separation the tau studies use).  tau mode (tau
// ladder, fixed eps): gap_i = |E Phi(u^{tau_i}(T)) - E Phi(u^{tau_ref}(T))|
// with tau_ref = tau_min/8 — the implicit-scheme energy gap shrinking with
// tau.  Pass = gaps decrease along the ladder within a sigma-scaled slack;
// the fitted slope is recorded but carries no band.
inline RunReport entropy_energy_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  const bool energy_primary = spec.kind == ExperimentKind::EnergyGap;
  RunReport rep;
  rep.experiment = to_string(spec.kind);
  rep.tol = spec.tol;
  rep.fingerprint = detail::fingerprint_of(spec);
  rep.secondary_label = energy_primary ? "entropy_gap" : "energy_gap";

  const GridPtr grid = spec.make_grid();
  const Field u0 = spec.init.build(grid);
  const NoiseModelPtr model = spec.make_noise();
  const double lambda = spec.scheme.lambda;
  const bool eps_mode = spec.eps_ladder.size() >= 2;

  std::size_t nl = 0;
  std::vector<double> xs;
  double dt_fine = 0.0;
  if (eps_mode) {
    rep.x_label = "eps";
    nl = spec.eps_ladder.size();
    xs = spec.eps_ladder;
    dt_fine = spec.scheme.tau / double(std::max<std::size_t>(spec.scheme.m_sub, 1));
    detail::steps_of(spec.T, spec.scheme.tau, "entropy_energy");
  } else {
    rep.x_label = "tau";
    nl = spec.tau_ladder.size();
    xs = spec.tau_ladder;
    dt_fine = spec.tau_ladder.back() / 8.0;
    for (double tau : spec.tau_ladder) detail::steps_of(spec.T, tau, "entropy_energy");
  }

  // dF[i][p], dH[i][p]: per-path functional differences to the reference run.
  std::vector<std::vector<double>> dF(nl, std::vector<double>(spec.paths, 0.0));
  std::vector<std::vector<double>> dH(nl, std::vector<double>(spec.paths, 0.0));
  std::vector<std::vector<char>> bad(nl, std::vector<char>(spec.paths, 0));

  for_each_path(spec.paths, spec.threads, [&](std::size_t p) {
    const NoisePath path =
        sample_path(model, spec.T, dt_fine, derive_seed(spec.seed, p));
    SchemeConfig ref_cfg = spec.scheme;
    if (eps_mode) {
      ref_cfg = detail::tuned(spec.scheme, spec.scheme.tau, dt_fine);
      ref_cfg.reg =
          RegFamily(spec.eps_ladder.back() / 8.0, spec.scheme.reg.kind);
    } else {
      ref_cfg = detail::tuned(spec.scheme, spec.tau_ladder.back() / 8.0, dt_fine);
    }
    const Trajectory ref = run_trajectory(u0, spec.T, ref_cfg, path);
    if (ref.failed) {
      for (std::size_t i = 0; i < nl; ++i) bad[i][p] = 1;
      return;
    }
    const RegFamily ref_reg = ref_cfg.reg;
    const double f_ref = entropy(ref_reg, ref.states.back());
    const double h_ref = energy(ref_reg, ref.states.back(), lambda);
    for (std::size_t i = 0; i < nl; ++i) {
      SchemeConfig cfg = ref_cfg;
      if (eps_mode)
        cfg.reg = RegFamily(xs[i], spec.scheme.reg.kind);
      else
        cfg = detail::tuned(spec.scheme, xs[i], dt_fine);
      const Trajectory tr = run_trajectory(u0, spec.T, cfg, path);
      if (tr.failed) {
        bad[i][p] = 1;
        continue;
      }
      dF[i][p] = entropy(cfg.reg, tr.states.back()) - f_ref;
      dH[i][p] = energy(cfg.reg, tr.states.back(), lambda) - h_ref;
    }
  });

  auto gap_points = [&](const std::vector<std::vector<double>>& d) {
    std::vector<LadderPoint> pts;
    for (std::size_t i = 0; i < nl; ++i) {
      LadderPoint pt;
      pt.x = xs[i];
      detail::mean_se(d[i], bad[i], pt);
      pt.mean = std::abs(pt.mean);  // the gap is |E difference|
      pt.ok = detail::point_usable(pt, spec.paths);
      pts.push_back(pt);
    }
    return pts;
  };
  rep.points = gap_points(energy_primary ? dH : dF);
  rep.secondary = gap_points(energy_primary ? dF : dH);
  for (const LadderPoint& pt : rep.points)
    rep.notes.push_back(detail::point_note(rep.x_label.c_str(), pt));

  double scale = 0.0;
  for (const LadderPoint& pt : rep.points) scale = std::max(scale, pt.mean);
  bool monotone = true;
  std::size_t usable = 0;
  for (const LadderPoint& pt : rep.points)
    if (pt.ok) ++usable;
  for (std::size_t i = 0; i + 1 < rep.points.size(); ++i) {
    const LadderPoint& a = rep.points[i];
    const LadderPoint& b = rep.points[i + 1];
    if (!a.ok || !b.ok) continue;
    const double slack = spec.tol.sigma * (a.se + b.se) + 1e-13 * std::max(1.0, scale);
    if (b.mean > a.mean + slack) {
      monotone = false;
      rep.notes.push_back("gap increases from " + rep.x_label + "=" +
                          std::to_string(a.x) + " to " + std::to_string(b.x));
    }
  }
  rep.fit = detail::fit_points(rep.points);
  rep.pass = usable >= 2 && monotone;
  return rep;
}

// ---- mass evolution law ----
// Per-step residual of the mean-mass identity (and its weighted variant in
// the secondary track, reported but not gated — it carries an O(tau)
// time-discretization bias that the plain law does not).
inline RunReport mass_law_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  RunReport rep;
  rep.experiment = to_string(spec.kind);
  rep.x_label = "t";
  rep.secondary_label = "weighted_mass_residual";
  rep.tol = spec.tol;
  rep.fingerprint = detail::fingerprint_of(spec);

  const GridPtr grid = spec.make_grid();
  const Field u0 = spec.init.build(grid);
  const NoiseModelPtr model = spec.make_noise();
  const double tau = spec.scheme.tau;
  const double dt_fine = tau / double(std::max<std::size_t>(spec.scheme.m_sub, 1));
  detail::steps_of(spec.T, tau, "mass_law");
  const SchemeConfig cfg = detail::tuned(spec.scheme, tau, dt_fine);
  const bool deterministic =
      spec.amplitude == 0.0 || spec.flavor == NoiseFlavor::None;

  std::vector<Trajectory> batch;
  std::size_t dropped = 0;
  if (deterministic) {
    // One trajectory replicated to the batch floor; zero-variance statistics.
    const NoisePath path = sample_path(model, spec.T, dt_fine, derive_seed(spec.seed, 0));
    Trajectory tr = run_trajectory(u0, spec.T, cfg, path);
    if (tr.failed)
      throw ConfigError("mass_law: deterministic trajectory failed: " + tr.failure);
    batch.assign(std::max<std::size_t>(spec.paths, 100), tr);
  } else {
    std::vector<Trajectory> slots(spec.paths);
    for_each_path(spec.paths, spec.threads, [&](std::size_t p) {
      const NoisePath path =
          sample_path(model, spec.T, dt_fine, derive_seed(spec.seed, p));
      slots[p] = run_trajectory(u0, spec.T, cfg, path);
    });
    for (Trajectory& tr : slots) {
      if (tr.failed)
        ++dropped;
      else
        batch.push_back(std::move(tr));
    }
    if (batch.size() < 100)
      throw ConfigError("mass_law: only " + std::to_string(batch.size()) +
                        " of " + std::to_string(spec.paths) +
                        " trajectories completed; need 100");
  }

  const MassLawStats stats = mass_law_residual(batch, *model, cfg, spec.alpha);
  const double mass0 = norm_l2_sq(u0);
  bool all_ok = true;
  for (std::size_t k = 0; k < stats.t.size(); ++k) {
    LadderPoint pt;
    pt.x = stats.t[k];
    pt.mean = stats.mean[k];
    pt.se = stats.se[k];
    pt.n_paths = stats.n_paths;
    pt.n_failed = dropped;
    const double band = std::max(spec.tol.sigma * pt.se, spec.tol.mass_rel * mass0);
    pt.ok = std::abs(pt.mean) <= band;
    all_ok = all_ok && pt.ok;
    rep.points.push_back(pt);

    LadderPoint wt;
    wt.x = stats.t[k];
    wt.mean = stats.mean_alpha[k];
    wt.se = stats.se_alpha[k];
    wt.n_paths = stats.n_paths;
    wt.n_failed = dropped;
    wt.ok = true;  // reported, not gated
    rep.secondary.push_back(wt);
  }
  rep.pass = all_ok && !rep.points.empty();
  rep.notes.push_back("paths used: " + std::to_string(stats.n_paths) +
                      ", dropped: " + std::to_string(dropped));
  rep.notes.push_back("weighted residual reported without a gate (O(tau) bias)");
  return rep;
}

// ---- symplectic drift of tangent pairs ----
// Propagates one fixed tangent pair through the scheme's linearization along
// each path and tracks the 2-form omega = Im<xi, eta>.  Gate: the largest
// per-step relative increment stays under tol.symplectic_rel.
inline RunReport symplectic_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  if (spec.scheme.id == SchemeId::LieMulExp ||
      spec.scheme.id == SchemeId::CrankNicolsonSplit)
    throw ConfigError(
        "symplectic_check supports lie_add, lie_conservative, midpoint_split");
  RunReport rep;
  rep.experiment = to_string(spec.kind);
  rep.x_label = "t";
  rep.tol = spec.tol;
  rep.fingerprint = detail::fingerprint_of(spec);

  const GridPtr grid = spec.make_grid();
  const Field u0 = spec.init.build(grid);
  const NoiseModelPtr model = spec.make_noise();
  const double tau = spec.scheme.tau;
  const std::size_t n_steps = detail::steps_of(spec.T, tau, "symplectic_check");
  const double dt_fine = tau / double(std::max<std::size_t>(spec.scheme.m_sub, 1));
  const SchemeConfig cfg = detail::tuned(spec.scheme, tau, dt_fine);

  // One deterministic tangent pair shared by every path.
  Field xi0(grid), eta0(grid);
  std::mt19937_64 rng(spec.seed ^ 0x5ca1ab1ull);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < grid->size(); ++j) {
    xi0[j] = cx(normal(rng), normal(rng));
    eta0[j] = cx(normal(rng), normal(rng));
  }
  const double omega0 = symplectic_form(xi0, eta0);
  if (std::abs(omega0) < 1e-9)
    throw ConfigError("symplectic_check: degenerate tangent pair, change seed");

  std::vector<std::vector<double>> drift(n_steps,
                                         std::vector<double>(spec.paths, 0.0));
  std::vector<char> bad(spec.paths, 0);
  std::vector<double> step_max(spec.paths, 0.0);

  for_each_path(spec.paths, spec.threads, [&](std::size_t p) {
    const NoisePath path =
        sample_path(model, spec.T, dt_fine, derive_seed(spec.seed, p));
    Field u = u0, xi = xi0, eta = eta0;
    double prev = omega0;
    for (std::size_t k = 0; k < n_steps; ++k) {
      const double ta = double(k) * tau;
      Field xin(grid), etan(grid);
      switch (cfg.id) {
        case SchemeId::LieAdd:
          xin = step_lie_add_tangent(u, xi, cfg);
          etan = step_lie_add_tangent(u, eta, cfg);
          break;
        case SchemeId::LieConservative:
          xin = step_lie_conservative_tangent(u, xi, cfg, path, ta);
          etan = step_lie_conservative_tangent(u, eta, cfg, path, ta);
          break;
        default:
          xin = step_midpoint_tangent(u, xi, cfg, path, ta);
          etan = step_midpoint_tangent(u, eta, cfg, path, ta);
          break;
      }
      u = step_once(u, cfg, path, ta).u;
      xi = xin;
      eta = etan;
      const double w = symplectic_form(xi, eta);
      drift[k][p] = std::abs(w - omega0) / std::abs(omega0);
      step_max[p] = std::max(step_max[p], std::abs(w - prev) / std::abs(omega0));
      prev = w;
    }
  });

  double worst_step = 0.0, worst_total = 0.0;
  for (std::size_t p = 0; p < spec.paths; ++p)
    worst_step = std::max(worst_step, step_max[p]);
  for (std::size_t k = 0; k < n_steps; ++k) {
    LadderPoint pt;
    pt.x = double(k + 1) * tau;
    detail::mean_se(drift[k], bad, pt);
    for (std::size_t p = 0; p < spec.paths; ++p)
      worst_total = std::max(worst_total, drift[k][p]);
    pt.ok = true;
    rep.points.push_back(pt);
  }
  rep.pass = worst_step <= spec.tol.symplectic_rel;
  rep.notes.push_back("max per-step 2-form increment (rel): " +
                      format_double(worst_step));
  rep.notes.push_back("max accumulated 2-form drift (rel): " +
                      format_double(worst_total));
  return rep;
}

// ---- regularization-assumption audit ----
// Canonical family must pass every condition at each ladder eps; the
// shifted-log fixture must fail the uniform bound.
inline RunReport assumption_audit_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  RunReport rep;
  rep.experiment = to_string(spec.kind);
  rep.x_label = "eps";
  rep.secondary_label = "shifted_log_fixture";
  rep.tol = spec.tol;
  rep.fingerprint = detail::fingerprint_of(spec);

  bool all_ok = true;
  for (double eps : spec.eps_ladder) {
    const ValidationReport canonical = validate_assumptions(RegFamily(eps));
    LadderPoint pt;
    pt.x = eps;
    pt.n_paths = canonical.entries.size();
    for (const ConditionResult& e : canonical.entries) {
      if (e.ceiling > 0.0) pt.mean = std::max(pt.mean, e.observed_sup / e.ceiling);
      if (!e.pass)
        rep.notes.push_back("eps=" + format_double(eps) + ": " + e.condition +
                            " observed " + format_double(e.observed_sup) +
                            " > ceiling " + format_double(e.ceiling));
    }
    pt.ok = canonical.all_pass;
    all_ok = all_ok && pt.ok;
    rep.points.push_back(pt);

    const ValidationReport fixture =
        validate_assumptions(RegFamily(eps, RegKind::ShiftedLog));
    const ConditionResult* a1 = fixture.find("A1:uniform-bound");
    LadderPoint fx;
    fx.x = eps;
    fx.mean = a1 ? a1->observed_sup : 0.0;
    fx.ok = a1 != nullptr && !a1->pass;  // the fixture is supposed to fail
    if (!fx.ok)
      rep.notes.push_back("eps=" + format_double(eps) +
                          ": shifted-log fixture unexpectedly passed the uniform bound");
    all_ok = all_ok && fx.ok;
    rep.secondary.push_back(fx);
  }
  rep.pass = all_ok && !rep.points.empty();
  return rep;
}

inline RunReport run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::StrongOrder: return strong_order_experiment(spec);
    case ExperimentKind::RegularizationError:
      return regularization_error_experiment(spec);
    case ExperimentKind::EntropyConvergence:
    case ExperimentKind::EnergyGap: return entropy_energy_experiment(spec);
    case ExperimentKind::MassLaw: return mass_law_experiment(spec);
    case ExperimentKind::SymplecticCheck: return symplectic_experiment(spec);
    default: return assumption_audit_experiment(spec);
  }
}

// ---- report emission ----

inline void write_report_csv(std::ostream& os, const RunReport& rep) {
  os << rep.x_label << ",mean_err,stderr,n_paths,n_failed\n";
  for (const LadderPoint& pt : rep.points)
    os << format_double(pt.x) << ',' << format_double(pt.mean) << ','
       << format_double(pt.se) << ',' << pt.n_paths << ',' << pt.n_failed << '\n';
}

inline void write_secondary_csv(std::ostream& os, const RunReport& rep) {
  os << rep.x_label << ",mean_err,stderr,n_paths,n_failed\n";
  for (const LadderPoint& pt : rep.secondary)
    os << format_double(pt.x) << ',' << format_double(pt.mean) << ','
       << format_double(pt.se) << ',' << pt.n_paths << ',' << pt.n_failed << '\n';
}

inline std::string report_csv_string(const RunReport& rep) {
  std::ostringstream os;
  write_report_csv(os, rep);
  return os.str();
}

inline nlohmann::json report_to_json(const RunReport& rep) {
  nlohmann::json j;
  j["experiment"] = rep.experiment;
  j["x_label"] = rep.x_label;
  j["slope"] = rep.fit.defined ? nlohmann::json(rep.fit.slope) : nlohmann::json();
  j["intercept"] =
      rep.fit.defined ? nlohmann::json(rep.fit.intercept) : nlohmann::json();
  j["pass"] = rep.pass;
  j["tolerances"] = {{"slope_min", rep.tol.slope_min},
                     {"slope_max", rep.tol.slope_max},
                     {"mass_rel", rep.tol.mass_rel},
                     {"symplectic_rel", rep.tol.symplectic_rel},
                     {"sigma", rep.tol.sigma}};
  j["fingerprint"] = {{"version", rep.fingerprint.version},
                      {"seed", rep.fingerprint.seed},
                      {"n", rep.fingerprint.n},
                      {"length", rep.fingerprint.length},
                      {"paths", rep.fingerprint.paths},
                      {"threads", rep.fingerprint.threads},
                      {"scheme", rep.fingerprint.scheme}};
  auto points_json = [](const std::vector<LadderPoint>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LadderPoint& pt : pts)
      arr.push_back({{"x", pt.x},
                     {"mean_err", pt.mean},
                     {"stderr", pt.se},
                     {"n_paths", pt.n_paths},
                     {"n_failed", pt.n_failed},
                     {"ok", pt.ok}});
    return arr;
  };
  j["points"] = points_json(rep.points);
  if (!rep.secondary.empty()) {
    j["secondary_label"] = rep.secondary_label;
    j["secondary"] = points_json(rep.secondary);
  }
  j["notes"] = rep.notes;
  return j;
}

// Writes <experiment>.csv, optional <experiment>_secondary.csv, and
// <experiment>.json under out_dir.
inline void write_report_files(const RunReport& rep, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string base = out_dir + "/" + rep.experiment;
  {
    std::ofstream csv(base + ".csv", std::ios::binary);
    if (!csv) throw ConfigError("cannot write " + base + ".csv");
    write_report_csv(csv, rep);
  }
  if (!rep.secondary.empty()) {
    std::ofstream csv(base + "_secondary.csv", std::ios::binary);
    if (!csv) throw ConfigError("cannot write " + base + "_secondary.csv");
    write_secondary_csv(csv, rep);
  }
  std::ofstream js(base + ".json", std::ios::binary);
  if (!js) throw ConfigError("cannot write " + base + ".json");
  js << report_to_json(rep).dump(2) << '\n';
}

// Re-fit a slope from a stored ladder CSV (x in column 0, mean in column 1).
inline SlopeFit refit_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV");
  std::vector<double> xs, ys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2)
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected x,mean,...");
    try {
      const double x = std::stod(cells[0]);
      const double y = std::stod(cells[1]);
      if (x > 0.0 && y > 0.0) {
        xs.push_back(x);
        ys.push_back(y);
      }
    } catch (const std::exception&) {
      throw ConfigError("CSV line " + std::to_string(lineno) + ": non-numeric cell");
    }
  }
  return fit_loglog(xs, ys);
}

// ---- oracle gates ----
// Fast agreement checks between the closed-form flow maps / implicit solver
// and the independent brute-force references.  Run before any rate study.

struct GateResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline Field gate_state(const GridPtr& g, double scale) {
  Field u(g);
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double x = g->point(j);
    u[j] = scale * std::exp(std::cos(2.0 * std::numbers::pi * x / g->length())) *
           std::polar(1.0, std::sin(2.0 * std::numbers::pi * x / g->length()));
  }
  return u;
}

// Mean terminal error of the EM oracle against an analytic map over a dt
// ladder; one fine path per sample serves the whole ladder.
template <typename Analytic>
inline GateResult em_rate_gate(const std::string& name, const NoiseModelPtr& model,
                               const Field& u0, double T, Coupling coupling,
                               const DiffusionG& gfun, const std::vector<double>& dts,
                               std::size_t paths, double lo, double hi,
                               Analytic&& analytic) {
  const double dt_fine = dts.back();
  std::vector<double> mean_err(dts.size(), 0.0);
  for (std::size_t p = 0; p < paths; ++p) {
    const NoisePath path = sample_path(model, T, dt_fine, derive_seed(404, p));
    const Field exact = analytic(path);
    for (std::size_t i = 0; i < dts.size(); ++i) {
      oracle::OracleOptions opt;
      opt.laplacian = false;
      opt.log_phase = false;
      const oracle::OracleRun run = oracle::em_reference(u0, T, dts[i], path, coupling,
                                                 gfun, RegFamily(1e-2), 0.0, opt);
      mean_err[i] += l2_dist(run.u, exact) / double(paths);
    }
  }
  const SlopeFit fit = fit_loglog(dts, mean_err);
  GateResult res;
  res.name = name;
  const bool shrinks = mean_err.back() < 0.5 * mean_err.front();
  res.pass = fit.defined && fit.slope >= lo && fit.slope <= hi && shrinks;
  std::ostringstream os;
  os << "slope=" << (fit.defined ? fit.slope : 0.0) << " err[first]="
     << mean_err.front() << " err[last]=" << mean_err.back();
  res.detail = os.str();
  return res;
}

}  // namespace detail

inline std::vector<GateResult> oracle_gate_suite() {
  std::vector<GateResult> out;
  const GridPtr g8 = Grid::make(8, 8.0);
  const GridPtr g4 = Grid::make(4, 8.0);
  const Field u8 = detail::gate_state(g8, 0.8);
  const Field u4 = detail::gate_state(g4, 0.8);

  {  // Cayley propagator: FFT implementation vs direct DFT reference.
    const double d = detail::l2_dist(cayley_step(u8, 0.037), oracle::cayley(u8, 0.037));
    out.push_back({"cayley_match", d <= 1e-12, "dist=" + format_double(d)});
  }

  {  // Fixed-point implicit solve vs dense Newton, plus the residual itself.
    SchemeConfig cfg;
    cfg.id = SchemeId::MidpointSplit;
    cfg.lambda = -1.0;
    cfg.reg = RegFamily(1e-3);
    cfg.tau = 0.02;
    cfg.fp_tol = 1e-13;
    const StepResult fp = solve_deterministic_substep(u8, cfg, false);
    const Field nw =
        oracle::newton_implicit(u8, cfg.tau, cfg.reg, cfg.lambda, 1e-13);
    const double d = detail::l2_dist(fp.u, nw);
    const double res =
        norm_l2(oracle::midpoint_residual(fp.u, u8, cfg.tau, cfg.reg, cfg.lambda));
    out.push_back({"fp_newton_agree", d <= 1e-10 && res <= 1e-9,
                   "dist=" + format_double(d) + " residual=" + format_double(res)});
  }

  {  // Additive noise: EM telescopes exactly, so the analytic map must match
     // to roundoff at any dt once the deterministic terms are switched off.
    const NoiseModelPtr model = build_noise(g8, 2, 3.5, 1.0, NoiseFlavor::ComplexH);
    const double T = 0.25;
    const NoisePath path = sample_path(model, T, T / 64.0, 2024u);
    oracle::OracleOptions opt;
    opt.laplacian = false;
    opt.log_phase = false;
    const oracle::OracleRun em = oracle::em_reference(u8, T, T / 64.0, path, Coupling::Additive,
                                              DiffusionG::one(), RegFamily(1e-2), 0.0, opt);
    const Field an = phi_S_analytic(u8, path, 0.0, T, Coupling::Additive,
                                    DiffusionG::one());
    const double d = detail::l2_dist(em.u, an);
    out.push_back({"phi_s_case1_exact", d <= 1e-12, "dist=" + format_double(d)});
  }

  {  // Multiplicative H-valued noise with unit g: EM must converge to the
     // exponential formula at the strong Euler rate.
    const NoiseModelPtr model = build_noise(g4, 2, 3.01, 1.5, NoiseFlavor::ComplexH);
    const double T = 0.25;
    std::vector<double> dts;
    for (int k = 4; k <= 9; ++k) dts.push_back(T * std::ldexp(1.0, -k));
    out.push_back(detail::em_rate_gate(
        "phi_s_case2_rate", model, u4, T, Coupling::Multiplicative,
        DiffusionG::one(), dts, 200, 0.3, 0.85, [&](const NoisePath& path) {
          return phi_S_analytic(u4, path, 0.0, T, Coupling::Multiplicative,
                                DiffusionG::one());
        }));
  }

  {  // Real noise, state-dependent g: EM vs the exact phase rotation.
    const NoiseModelPtr model = build_noise(g4, 2, 3.01, 1.2, NoiseFlavor::RealL2);
    const double T = 0.25;
    std::vector<double> dts;
    for (int k = 4; k <= 9; ++k) dts.push_back(T * std::ldexp(1.0, -k));
    out.push_back(detail::em_rate_gate(
        "phi_s_case3_rate", model, u4, T, Coupling::Multiplicative,
        DiffusionG::saturating(1.0, 1.0, 1.0), dts, 200, 0.3, 1.2,
        [&](const NoisePath& path) {
          return phi_S_analytic(u4, path, 0.0, T, Coupling::Multiplicative,
                                DiffusionG::saturating(1.0, 1.0, 1.0));
        }));
  }

  {  // Deterministic check: EM with only the Laplacian on must approach the
     // exact free propagator at first order in dt.
    const NoiseModelPtr none = build_noise(g8, 1, 3.5, 1.0, NoiseFlavor::None);
    const double T = 0.1;
    std::vector<double> dts;
    for (int k = 6; k <= 11; ++k) dts.push_back(T * std::ldexp(1.0, -k));
    const NoisePath path = sample_path(none, T, dts.back(), 7u);
    const Field exact = free_propagator(u8, T);
    std::vector<double> errs;
    oracle::OracleOptions opt;
    opt.log_phase = false;
    for (double dt : dts) {
      const oracle::OracleRun run = oracle::em_reference(u8, T, dt, path, Coupling::Additive,
                                                 DiffusionG::one(), RegFamily(1e-2),
                                                 0.0, opt);
      errs.push_back(detail::l2_dist(run.u, exact));
    }
    const SlopeFit fit = fit_loglog(dts, errs);
    const bool ok = fit.defined && fit.slope >= 0.8 && fit.slope <= 1.25;
    std::ostringstream os;
    os << "slope=" << (fit.defined ? fit.slope : 0.0);
    out.push_back({"em_free_flow_order", ok, os.str()});
  }

  return out;
}

inline bool gates_pass(const std::vector<GateResult>& gates) {
  for (const GateResult& gr : gates)
    if (!gr.pass) return false;
  return !gates.empty();
}

}  // namespace slogs
