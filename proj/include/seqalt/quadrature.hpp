#pragma once

// Adaptive Gauss-Kronrod (7/15) integration of small vector-valued
// integrands. Intervals are bisected until the Kronrod-Gauss difference of
// every component falls under the local share of the absolute tolerance.

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "seqalt/errors.hpp"

namespace seqalt {

template <std::size_t M>
using Vec = std::array<double, M>;

struct QuadratureOptions {
  double abs_tol = 1e-12;
  int max_depth = 40;
};

namespace detail {

inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t M, typename F>
void gk15(F& f, double a, double b, Vec<M>& kronrod, Vec<M>& gauss) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  kronrod.fill(0.0);
  gauss.fill(0.0);
  const Vec<M> fc = f(c);
  for (std::size_t m = 0; m < M; ++m) {
    kronrod[m] = kWgk[7] * fc[m];
    gauss[m] = kWg[3] * fc[m];
  }
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const Vec<M> f1 = f(c - dx);
    const Vec<M> f2 = f(c + dx);
    for (std::size_t m = 0; m < M; ++m) {
      kronrod[m] += kWgk[j] * (f1[m] + f2[m]);
      if (j % 2 == 1) gauss[m] += kWg[j / 2] * (f1[m] + f2[m]);
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    kronrod[m] *= h;
    gauss[m] *= h;
  }
}

template <std::size_t M, typename F>
void adapt(F& f, double a, double b, double tol, int depth, const QuadratureOptions& opt, Vec<M>& acc,
           int& evaluations) {
  Vec<M> k, g;
  gk15<M>(f, a, b, k, g);
  evaluations += 15;
  bool ok = true;
  for (std::size_t m = 0; m < M; ++m)
    if (!(std::abs(k[m] - g[m]) <= tol)) ok = false;
  if (ok) {
    for (std::size_t m = 0; m < M; ++m) acc[m] += k[m];
    return;
  }
  if (depth >= opt.max_depth) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge on [" << a << ", " << b << "] after " << evaluations
        << " evaluations (depth " << depth << ")";
    throw NumericalError(msg.str());
  }
  const double mid = 0.5 * (a + b);
  adapt<M>(f, a, mid, 0.5 * tol, depth + 1, opt, acc, evaluations);
  adapt<M>(f, mid, b, 0.5 * tol, depth + 1, opt, acc, evaluations);
}

}  // namespace detail

template <std::size_t M, typename F>
Vec<M> integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  Vec<M> acc{};
  if (!(b > a)) return acc;
  int evaluations = 0;
  detail::adapt<M>(f, a, b, opt.abs_tol, 0, opt, acc, evaluations);
  return acc;
}

}  // namespace seqalt
