#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "grasp/common.hpp"

namespace grasp {

enum class OptMethod { kLbfgs, kGradientDescent };

inline OptMethod opt_method_from_string(const std::string& s) {
  if (s == "lbfgs") return OptMethod::kLbfgs;
  if (s == "gd") return OptMethod::kGradientDescent;
  throw UsageError("unknown optimizer: " + s + " (expected lbfgs or gd)");
}

struct OptimOptions {
  OptMethod method = OptMethod::kLbfgs;
  int max_iters = 400;
  double tol = 1e-6;      // relative objective change ...
  int tol_window = 5;     // ... over this many iterations
  int history = 10;       // L-BFGS memory
  double armijo_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_evals = 40;
};

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double wall_sec = 0.0;
};

/// Objective callback: fills `grad` and returns the value at `x`.
using ObjectiveFn = std::function<double(const Vec&, Vec&)>;

namespace detail {

/// One point along the search ray.
struct LinePoint {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative along dir
};

/// Strong-Wolfe line search (bracket + bisection zoom). Returns the
/// accepted point with its gradient in `grad_out`; a point satisfying at
/// least the Armijo condition is always returned if one exists.
inline bool wolfe_line_search(const ObjectiveFn& objective, const Vec& x, const Vec& dir,
                              const LinePoint& origin, const OptimOptions& opts, Vec& x_out,
                              Vec& grad_out, LinePoint& accepted) {
  const double c1 = opts.armijo_c1;
  const double c2 = opts.wolfe_c2;
  int evals = 0;

  auto eval = [&](double step) {
    x_out = x + step * dir;
    double v = objective(x_out, grad_out);
    ++evals;
    return LinePoint{step, v, grad_out.dot(dir)};
  };
  auto armijo_ok = [&](const LinePoint& p) {
    return std::isfinite(p.value) && p.value <= origin.value + c1 * p.step * origin.slope;
  };
  auto curvature_ok = [&](const LinePoint& p) {
    return std::fabs(p.slope) <= -c2 * origin.slope;
  };

  LinePoint lo = origin, hi;
  LinePoint prev = origin;
  double step = 1.0;
  bool bracketed = false;

  while (evals < opts.max_line_evals) {
    LinePoint p = eval(step);
    if (!armijo_ok(p) || (prev.step > 0.0 && p.value >= prev.value)) {
      lo = prev;
      hi = p;
      bracketed = true;
      break;
    }
    if (curvature_ok(p)) {
      accepted = p;
      return true;
    }
    if (p.slope >= 0.0) {
      lo = p;
      hi = prev;
      bracketed = true;
      break;
    }
    prev = p;
    step = std::min(step * 2.0, 1e6);
  }

  if (bracketed) {
    // zoom by bisection: lo always satisfies Armijo with the lower value
    LinePoint best = armijo_ok(lo) && lo.step > 0.0 ? lo : origin;
    while (evals < opts.max_line_evals) {
      double mid = 0.5 * (lo.step + hi.step);
      LinePoint p = eval(mid);
      if (!armijo_ok(p) || p.value >= lo.value) {
        hi = p;
      } else {
        if (curvature_ok(p)) {
          accepted = p;
          return true;
        }
        if (p.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = p;
        best = p;
      }
      if (std::fabs(hi.step - lo.step) < 1e-14 * std::max(1.0, lo.step)) break;
    }
    if (best.step > 0.0) {
      // no strong-Wolfe point found in budget; take the best Armijo point
      LinePoint p = eval(best.step);
      accepted = p;
      return true;
    }
  } else {
    // ran out of expansion budget while Armijo held: accept the last point
    if (prev.step > 0.0) {
      accepted = eval(prev.step);
      return true;
    }
  }

  // fall back to plain backtracking from 1
  double bt = 1.0;
  while (evals < opts.max_line_evals) {
    LinePoint p = eval(bt);
    if (armijo_ok(p)) {
      accepted = p;
      return true;
    }
    bt *= 0.5;
  }
  return false;
}

/// Armijo backtracking only (for the plain batch-gradient method).
inline bool backtracking_line_search(const ObjectiveFn& objective, const Vec& x, const Vec& dir,
                                     const LinePoint& origin, double step0,
                                     const OptimOptions& opts, Vec& x_out, Vec& grad_out,
                                     LinePoint& accepted) {
  double step = step0;
  for (int k = 0; k < opts.max_line_evals; ++k) {
    x_out = x + step * dir;
    double v = objective(x_out, grad_out);
    if (std::isfinite(v) && v <= origin.value + opts.armijo_c1 * step * origin.slope) {
      accepted = {step, v, grad_out.dot(dir)};
      return true;
    }
    step *= 0.5;
  }
  return false;
}

}  // namespace detail

/// Full-batch minimizer. L-BFGS (two-loop recursion, strong-Wolfe line
/// search) or steepest descent with Armijo backtracking. Deterministic: the
/// trace and result depend only on x0 and the objective. Stops on max_iters,
/// a relative objective change below tol across tol_window iterations, or
/// when no decrease is possible along the search direction.
inline Vec minimize(const ObjectiveFn& objective, Vec x, const OptimOptions& opts,
                    std::vector<TraceRecord>* trace = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Vec grad(x.size());
  double fx = objective(x, grad);
  if (!std::isfinite(fx))
    throw NumericalError("minimize: non-finite objective at the starting point (grad norm " +
                         std::to_string(grad.norm()) + ")");
  if (trace) trace->push_back({0, fx, grad.norm(), seconds()});

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> recent{fx};

  Vec dir(x.size()), x_new(x.size()), grad_new(x.size());
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    if (opts.method == OptMethod::kLbfgs && !s_hist.empty()) {
      dir = -grad;
      const int m = static_cast<int>(s_hist.size());
      std::vector<double> alpha(static_cast<std::size_t>(m));
      for (int k = m - 1; k >= 0; --k) {
        alpha[static_cast<std::size_t>(k)] = rho_hist[static_cast<std::size_t>(k)] *
                                             s_hist[static_cast<std::size_t>(k)].dot(dir);
        dir -= alpha[static_cast<std::size_t>(k)] * y_hist[static_cast<std::size_t>(k)];
      }
      double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      dir *= gamma;
      for (int k = 0; k < m; ++k) {
        double beta = rho_hist[static_cast<std::size_t>(k)] *
                      y_hist[static_cast<std::size_t>(k)].dot(dir);
        dir += (alpha[static_cast<std::size_t>(k)] - beta) * s_hist[static_cast<std::size_t>(k)];
      }
    } else {
      dir = -grad;
    }

    double slope = grad.dot(dir);
    if (slope >= 0.0) {  // not a descent direction; fall back to steepest descent
      dir = -grad;
      slope = -grad.squaredNorm();
    }
    if (slope == 0.0) break;  // exact stationary point

    detail::LinePoint origin{0.0, fx, slope};
    detail::LinePoint accepted;
    bool ok;
    if (opts.method == OptMethod::kLbfgs) {
      ok = detail::wolfe_line_search(objective, x, dir, origin, opts, x_new, grad_new, accepted);
    } else {
      double gn = grad.norm();
      double step0 = gn > 1.0 ? 1.0 / gn : 1.0;  // tame the first raw-gradient step
      ok = detail::backtracking_line_search(objective, x, dir, origin, step0, opts, x_new,
                                            grad_new, accepted);
    }
    if (!ok || accepted.value > fx) break;  // no decrease possible

    if (opts.method == OptMethod::kLbfgs) {
      Vec s = x_new - x;
      Vec y = grad_new - grad;
      double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
        if (static_cast<int>(s_hist.size()) > opts.history) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
    }

    x.swap(x_new);
    grad.swap(grad_new);
    fx = accepted.value;
    if (!std::isfinite(fx))
      throw NumericalError("minimize: non-finite objective at iteration " +
                           std::to_string(iter) + " (grad norm " + std::to_string(grad.norm()) +
                           ")");
    if (trace) trace->push_back({iter, fx, grad.norm(), seconds()});

    recent.push_back(fx);
    if (static_cast<int>(recent.size()) > opts.tol_window + 1) recent.erase(recent.begin());
    if (static_cast<int>(recent.size()) == opts.tol_window + 1) {
      double before = recent.front();
      double rel = std::fabs(before - fx) / std::max(1.0, std::fabs(before));
      if (rel < opts.tol) break;
    }
  }
  return x;
}

}  // namespace grasp
