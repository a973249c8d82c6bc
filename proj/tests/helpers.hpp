#pragma once
// Small shared helpers for the test suites.

#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <slogs/field.hpp>

namespace testutil {

using slogs::cx;
using slogs::Field;
using slogs::GridPtr;

inline Field make_field(const GridPtr& g, const std::function<cx(double)>& f) {
  Field u(g);
  for (std::size_t j = 0; j < g->size(); ++j) u[j] = f(g->point(j));
  return u;
}

inline Field random_field(const GridPtr& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Field u(g);
  for (std::size_t j = 0; j < g->size(); ++j) u[j] = cx(nd(eng), nd(eng));
  return u;
}

inline double dist_l2(const Field& a, const Field& b) {
  Field d = a;
  for (std::size_t j = 0; j < d.size(); ++j) d[j] -= b[j];
  return slogs::norm_l2(d);
}

inline double rel_dist_l2(const Field& a, const Field& b) {
  const double nb = slogs::norm_l2(b);
  return dist_l2(a, b) / (nb > 0.0 ? nb : 1.0);
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

// Least-squares slope of y against x (both already in log coordinates).
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= double(x.size());
  my /= double(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

}  // namespace testutil
