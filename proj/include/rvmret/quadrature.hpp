#pragma once

#include <functional>
#include <vector>

namespace rvmret {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]. Results are cached per n.
const GaussRule& gauss_legendre(int n);

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

/// Adaptive 15-point Gauss-Kronrod with recursive bisection.
/// Stops on a panel when its error estimate is below max(abs_tol, rel_tol*|panel value|)
/// scaled to the panel length, or when max_depth is hit.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol = 1e-12, double rel_tol = 1e-10,
                                  int max_depth = 40);

}  // namespace rvmret
