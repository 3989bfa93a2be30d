#include "rvmret/lightcone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rvmret/errors.hpp"
#include "rvmret/quadrature.hpp"
#include "rvmret/retarded_field.hpp"

namespace rvmret {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOuterRel = 1e-10;
constexpr double kInnerRel = 1e-12;
constexpr double kTailRel = 1e-8;

int family_power(ConeFamily f) {
    switch (f) {
        case ConeFamily::I1: return 1;
        case ConeFamily::I2: return 2;
        case ConeFamily::II: return 3;
    }
    return 0;
}

double family_threshold(ConeFamily f) { return f == ConeFamily::I1 ? 3.0 : 2.0; }

// int over s = t - tau in [a, b] of s^{1-n} int_{|rho-s|}^{rho+s} lambda g(t-s, lambda), times 2pi/rho
double reduced(const std::function<double(double, double)>& g, double t, double rho, double a,
               double b, int n, std::vector<double> breaks) {
    if (a == b) return 0.0;
    breaks.push_back(rho);
    breaks.push_back(t);
    std::vector<double> cuts{a};
    std::sort(breaks.begin(), breaks.end());
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    auto outer = [&](double s) {
        const double tau = t - s;
        auto inner = [&](double lam) { return lam * g(tau, lam); };
        const double v =
            integrate_adaptive(inner, std::abs(rho - s), rho + s, 0.0, kInnerRel).value;
        return std::pow(s, 1 - n) * v;
    };
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        acc += integrate_adaptive(outer, cuts[k], cuts[k + 1], 0.0, kOuterRel).value;
    return 2.0 * kPi / rho * acc;
}

double weight_fn(double q, double tau, double lam) {
    return std::pow(1.0 + std::abs(tau) + lam, -q);
}

// integral over a <= |x-y| < infinity, with analytic tail bound C S^{3-n-q} / (n+q-3)
double cone_integral(double q, double t, double rho, double a, int n) {
    const double p = n + q - 3.0;
    double acc = 0.0, S = 0.0, C = 0.0;
    std::function<double(double, double)> piece;
    if (rho == 0.0) {
        // 4 pi int r^{2-n} (1 + |t - r| + r)^{-q} dr
        auto radial = [&](double lo, double hi) {
            std::vector<double> cuts{lo};
            if (t > lo && t < hi) cuts.push_back(t);
            cuts.push_back(hi);
            double v = 0.0;
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
                v += integrate_adaptive(
                         [&](double r) { return std::pow(r, 2 - n) * weight_fn(q, t - r, r); },
                         cuts[k], cuts[k + 1], 0.0, kOuterRel)
                         .value;
            return 4.0 * kPi * v;
        };
        S = std::max({2.0 * std::abs(t), 1.0, a + 1.0});
        C = 4.0 * kPi * std::pow(2.0, q);
        acc = radial(a, S);
        for (int it = 0; C * std::pow(S, -p) / p > kTailRel * std::abs(acc); ++it) {
            if (it > 200) throw NonConvergent("cone integral tail did not reach relative 1e-8");
            acc += radial(S, 2 * S);
            S *= 2;
        }
        return acc;
    }
    auto g = [q](double tau, double lam) { return weight_fn(q, tau, lam); };
    S = std::max(2.0 * (std::abs(t) + rho), a + 1.0);
    C = 4.0 * kPi * std::pow(1.5, -q);
    acc = reduced(g, t, rho, a, S, n, {});
    for (int it = 0; C * std::pow(S, -p) / p > kTailRel * std::abs(acc); ++it) {
        if (it > 200) throw NonConvergent("cone integral tail did not reach relative 1e-8");
        acc += reduced(g, t, rho, S, 2 * S, n, {});
        S *= 2;
    }
    return acc;
}

}  // namespace

std::string family_name(ConeFamily f) {
    switch (f) {
        case ConeFamily::I1: return "I1";
        case ConeFamily::I2: return "I2";
        case ConeFamily::II: return "II";
    }
    return "?";
}

ConeFamily parse_family(const std::string& s) {
    if (s == "I1") return ConeFamily::I1;
    if (s == "I2") return ConeFamily::I2;
    if (s == "II") return ConeFamily::II;
    throw std::invalid_argument("unknown integral family '" + s + "' (expected I1, I2 or II)");
}

void validate_query(const ConeIntegralQuery& query) {
    if (!(query.x_norm >= 0.0) || !std::isfinite(query.x_norm) || !std::isfinite(query.t))
        throw std::invalid_argument("cone integral query needs finite t and x_norm >= 0");
    if (!(query.q > family_threshold(query.family))) {
        std::ostringstream os;
        os << family_name(query.family) << " requires q > " << family_threshold(query.family)
           << ", got q = " << query.q;
        throw NonConvergent(os.str());
    }
}

double lemma_a_reduce(const std::function<double(double, double)>& g, double t, double x_norm,
                      double a_lo, double b_hi, int n) {
    if (x_norm == 0.0)
        throw SingularAtOrigin("lemma_a_reduce: x_norm = 0, use the radial formula");
    if (!(x_norm > 0.0) || !(a_lo >= 0.0) || !(b_hi >= a_lo) || !std::isfinite(b_hi))
        throw std::invalid_argument("lemma_a_reduce: need x_norm > 0 and 0 <= a_lo <= b_hi < inf");
    return reduced(g, t, x_norm, a_lo, b_hi, n, {});
}

double shell_integral_direct(const std::function<double(double, double)>& g, double t,
                             double x_norm, double a_lo, double b_hi, int n, int nodes) {
    if (!(x_norm >= 0.0) || !(a_lo >= 0.0) || !(b_hi >= a_lo) || !std::isfinite(b_hi) || nodes < 2)
        throw std::invalid_argument("shell_integral_direct: need x_norm >= 0, 0 <= a_lo <= b_hi < inf");
    if (a_lo == b_hi) return 0.0;
    const GaussRule& gl = gauss_legendre(nodes);
    constexpr int kPhi = 8;
    const Vec3 x{0, 0, x_norm};
    std::vector<double> cuts{a_lo};
    for (double c : {std::min(x_norm, t), std::max(x_norm, t)})
        if (c > cuts.back() && c < b_hi) cuts.push_back(c);
    cuts.push_back(b_hi);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const int panels = std::max(1, static_cast<int>(std::ceil((cuts[k + 1] - cuts[k]) / 0.5)));
        const double h = (cuts[k + 1] - cuts[k]) / panels;
        for (int pnl = 0; pnl < panels; ++pnl) {
            const double r0 = cuts[k] + pnl * h;
            for (std::size_t ir = 0; ir < gl.nodes.size(); ++ir) {
                const double r = r0 + 0.5 * h * (gl.nodes[ir] + 1.0);
                double ang = 0.0;
                for (std::size_t is = 0; is < gl.nodes.size(); ++is) {
                    const double s = 0.5 * (gl.nodes[is] + 1.0);
                    const double mu = 2.0 * s * s - 1.0;
                    const double sn = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                    double ring = 0.0;
                    for (int ip = 0; ip < kPhi; ++ip) {
                        const double ph = 2.0 * kPi * ip / kPhi;
                        const Vec3 y = x + r * Vec3{sn * std::cos(ph), sn * std::sin(ph), mu};
                        ring += g(t - r, norm(y));
                    }
                    // dmu = 4 s ds, ds = dS / 2
                    ang += 0.5 * gl.weights[is] * 4.0 * s * ring * (2.0 * kPi / kPhi);
                }
                acc += 0.5 * h * gl.weights[ir] * std::pow(r, 2 - n) * ang;
            }
        }
    }
    return acc;
}

double eval_I(const ConeIntegralQuery& query) {
    if (query.family == ConeFamily::II) return eval_II(query.q, query.t, query.x_norm);
    validate_query(query);
    return cone_integral(query.q, query.t, query.x_norm, 0.0, family_power(query.family));
}

double eval_II(double q, double t, double x_norm) {
    validate_query({ConeFamily::II, q, t, x_norm});
    return cone_integral(q, t, x_norm, 1.0, 3);
}

double eval_cone(const ConeIntegralQuery& query) { return eval_I(query); }

double bound_shape(ConeFamily family, double q, double t, double x_norm) {
    double e = q - 3.0;
    if (family == ConeFamily::I2) e = q - 2.0;
    if (family == ConeFamily::II) e = q - 1.25;
    return std::pow(1.0 + std::abs(t) + x_norm, -1.0) * std::pow(1.0 + std::abs(t - x_norm), -e);
}

std::vector<std::pair<double, double>> bound_sample_points(int count, std::uint64_t seed,
                                                           double extent) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(-extent, extent), ux(0.0, extent);
    std::vector<std::pair<double, double>> out;
    out.reserve(std::max(count, 0));
    for (int k = 0; k < count; ++k) {
        const double x = ux(rng);
        double t = ut(rng);
        switch (k % 5) {
            case 1: t = x; break;
            case 2: t = 0.0; break;
            case 3: t = -x; break;
            default: break;
        }
        out.emplace_back(t, x);
    }
    return out;
}

BoundCheckReport check_bounds(ConeFamily family, double q,
                              const std::vector<std::pair<double, double>>& sample) {
    if (sample.empty()) throw std::invalid_argument("check_bounds: empty sample");
    BoundCheckReport rep;
    rep.family = family;
    rep.q = q;
    const std::size_t half = std::max<std::size_t>(1, sample.size() / 2);
    rep.finite = true;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        BoundSample s;
        s.t = sample[k].first;
        s.x_norm = sample[k].second;
        s.value = eval_cone({family, q, s.t, s.x_norm});
        s.shape = bound_shape(family, q, s.t, s.x_norm);
        s.ratio = s.value / s.shape;
        if (!std::isfinite(s.ratio)) rep.finite = false;
        if (s.ratio > rep.fitted_constant || k == 0) {
            rep.fitted_constant = s.ratio;
            rep.max_t = s.t;
            rep.max_x = s.x_norm;
        }
        if (k < half) rep.subsample_constant = std::max(rep.subsample_constant, s.ratio);
        rep.samples.push_back(s);
    }
    rep.inconclusive = sample.size() < 2;
    rep.stable = rep.fitted_constant <= 2.0 * rep.subsample_constant;
    rep.pass = rep.finite && std::isfinite(rep.fitted_constant) && rep.stable;
    return rep;
}

TrickReport check_trick_inequality(double t, double x_norm, double R, double a, int sample_count,
                                   std::uint64_t seed) {
    if (sample_count < 1) throw std::invalid_argument("check_trick_inequality: sample_count >= 1");
    const Vec3 x{x_norm, 0, 0};
    const ConeDomain dom = cone_domain(t, x, R, a);
    TrickReport rep;
    rep.bound = 2.0 * (1.0 + 2.0 * R) / (1.0 - a);
    auto ratio = [&](const Vec3& y) {
        const double r = norm(x - y), l = norm(y);
        return (1.0 + std::abs(t - r) + l) / (1.0 + std::abs(t - r - l));
    };
    rep.max_ratio = ratio({0, 0, 0});
    rep.samples = 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // along each ray from the origin R + a|t - |x - l e|| - l decreases in l, so the domain
    // is star-shaped; its radius depends only on the angle to x
    auto in_domain = [&](const Vec3& y) { return norm(y) <= R + a * std::abs(t - norm(x - y)); };
    double lmax = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        const double th = std::numbers::pi * k / 2000.0;
        const Vec3 e{std::cos(th), std::sin(th), 0.0};
        double lo = 0.0, hi = dom.r_max + x_norm + R;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (in_domain(mid * e) ? lo : hi) = mid;
        }
        lmax = std::max(lmax, hi);
    }
    lmax *= 1.01;
    const long cap = 1000L * sample_count;
    for (long it = 0; it < cap && rep.samples < sample_count; ++it) {
        const Vec3 d{u(rng), u(rng), u(rng)};
        if (norm2(d) > 1.0) continue;
        const Vec3 y = lmax * d;
        if (!in_domain(y)) continue;
        rep.max_ratio = std::max(rep.max_ratio, ratio(y));
        ++rep.samples;
    }
    rep.pass = rep.max_ratio <= rep.bound;
    return rep;
}

}  // namespace rvmret
