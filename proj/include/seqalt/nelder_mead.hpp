#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

namespace seqalt {

template <std::size_t N>
using Point = std::array<double, N>;

template <std::size_t N>
struct SimplexResult {
  Point<N> x{};
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double diameter_tol = 1e-8;  // stop once every vertex is this close to the best one
  int max_iterations = 2000;
};

// Nelder-Mead downhill simplex (standard coefficients 1, 2, 1/2, 1/2).
// The objective may return +inf to mark infeasible points; the initial
// simplex must contain at least one finite vertex.
template <std::size_t N, typename F>
SimplexResult<N> nelder_mead(F&& objective, std::array<Point<N>, N + 1> simplex,
                             const SimplexOptions& opt = {}) {
  std::array<double, N + 1> fv{};
  for (std::size_t i = 0; i <= N; ++i) fv[i] = objective(simplex[i]);

  std::array<std::size_t, N + 1> order{};
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::array<Point<N>, N + 1> s2;
    std::array<double, N + 1> f2;
    for (std::size_t i = 0; i <= N; ++i) {
      s2[i] = simplex[order[i]];
      f2[i] = fv[order[i]];
    }
    simplex = s2;
    fv = f2;
  };

  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i <= N; ++i)
      for (std::size_t k = 0; k < N; ++k) d = std::max(d, std::abs(simplex[i][k] - simplex[0][k]));
    return d;
  };

  auto blend = [](const Point<N>& a, const Point<N>& b, double t) {
    Point<N> r;
    for (std::size_t k = 0; k < N; ++k) r[k] = a[k] + t * (b[k] - a[k]);
    return r;
  };

  SimplexResult<N> res;
  int it = 0;
  sort_vertices();
  for (; it < opt.max_iterations; ++it) {
    if (diameter() < opt.diameter_tol) {
      res.converged = true;
      break;
    }
    Point<N> centroid{};
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < N; ++k) centroid[k] += simplex[i][k] / static_cast<double>(N);

    const Point<N>& worst = simplex[N];
    const Point<N> xr = blend(centroid, worst, -1.0);
    const double fr = objective(xr);

    if (fr < fv[0]) {
      const Point<N> xe = blend(centroid, worst, -2.0);
      const double fe = objective(xe);
      if (fe < fr) {
        simplex[N] = xe;
        fv[N] = fe;
      } else {
        simplex[N] = xr;
        fv[N] = fr;
      }
    } else if (fr < fv[N - 1]) {
      simplex[N] = xr;
      fv[N] = fr;
    } else {
      // contraction, outside if the reflected point beats the worst vertex
      const bool outside = fr < fv[N];
      const Point<N> xc = outside ? blend(centroid, xr, 0.5) : blend(centroid, worst, 0.5);
      const double fc = objective(xc);
      if (fc < (outside ? fr : fv[N])) {
        simplex[N] = xc;
        fv[N] = fc;
      } else {
        for (std::size_t i = 1; i <= N; ++i) {
          simplex[i] = blend(simplex[0], simplex[i], 0.5);
          fv[i] = objective(simplex[i]);
        }
      }
    }
    sort_vertices();
  }
  res.x = simplex[0];
  res.value = fv[0];
  res.iterations = it;
  return res;
}

}  // namespace seqalt
