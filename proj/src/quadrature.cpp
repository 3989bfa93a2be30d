#include "rvmret/quadrature.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace rvmret {

namespace {

GaussRule compute_gauss_legendre(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Chebyshev-like starting guess, Newton on P_n
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        rule.nodes[n - 1 - i] = z;
        rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return rule;
}

// Kronrod 15 / Gauss 7 abscissae and weights
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

void gk15(const std::function<double(double)>& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double fs = f(c - dx) + f(c + dx);
        resk += kWgk[j] * fs;
        if (j % 2 == 1) resg += kWg[j / 2] * fs;
    }
    value = resk * h;
    err = std::abs((resk - resg) * h);
}

void adapt(const std::function<double(double)>& f, double a, double b, double abs_tol,
           double rel_tol, int depth, AdaptiveResult& out) {
    double v = 0.0, e = 0.0;
    gk15(f, a, b, v, e);
    if (!std::isfinite(v)) throw std::runtime_error("integrate_adaptive: non-finite integrand");
    if (e <= std::max(abs_tol, rel_tol * std::abs(v)) || depth <= 0) {
        out.value += v;
        out.error += e;
        out.panels += 1;
        return;
    }
    const double m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * abs_tol, rel_tol, depth - 1, out);
    adapt(f, m, b, 0.5 * abs_tol, rel_tol, depth - 1, out);
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol, double rel_tol, int max_depth) {
    AdaptiveResult out;
    if (a == b) return out;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    adapt(f, a, b, abs_tol, rel_tol, max_depth, out);
    out.value *= sign;
    return out;
}

}  // namespace rvmret
