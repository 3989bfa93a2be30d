#include "rvmret/retarded_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rvmret/errors.hpp"
#include "rvmret/quadrature.hpp"

namespace rvmret {

namespace {

void require_unit(const Vec3& omega) {
    const double n = norm(omega);
    if (!(std::abs(n - 1.0) <= 1e-12)) {
        std::ostringstream os;
        os << "kernel direction has norm " << n << ", expected 1";
        throw NonUnitDirection(os.str());
    }
}

// d p_hat_j / d p_k
Mat3 dphat(const Vec3& p) {
    const double g = gamma_of(p);
    const Vec3 v = p / g;
    Mat3 m{};
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) m[j][k] = ((j == k ? 1.0 : 0.0) - v[j] * v[k]) / g;
    return m;
}

}  // namespace

KernelValue kernel_eval(const Vec3& omega, const Vec3& p) {
    require_unit(omega);
    const Vec3 v = p_hat(p);
    const double D = 1.0 + dot(omega, v);
    const Vec3 N = omega + v;
    KernelValue k;
    k.a1 = N / ((1.0 + norm2(p)) * D * D);
    k.b = N / D;
    const Mat3 dv = dphat(p);
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) {
            double od = 0.0;
            for (int j = 0; j < 3; ++j) od += omega[j] * dv[j][c];
            k.a2[i][c] = (dv[i][c] * D - N[i] * od) / (D * D);
        }
    return k;
}

KernelValue kernel_eval_B(const Vec3& omega, const Vec3& p) {
    require_unit(omega);
    const Vec3 v = p_hat(p);
    const double D = 1.0 + dot(omega, v);
    const Vec3 N = cross(omega, v);
    KernelValue k;
    k.a1 = N / ((1.0 + norm2(p)) * D * D);
    k.b = N / D;
    const Mat3 dv = dphat(p);
    for (int c = 0; c < 3; ++c) {
        const Vec3 col{dv[0][c], dv[1][c], dv[2][c]};
        const Vec3 wc = cross(omega, col);
        const double od = dot(omega, col);
        for (int i = 0; i < 3; ++i) k.a2[i][c] = (wc[i] * D - N[i] * od) / (D * D);
    }
    return k;
}

ConeDomain cone_domain(double t, const Vec3& x, double R, double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("cone_domain: a must lie in (0, 1)");
    ConeDomain d;
    d.t = t;
    d.x = x;
    d.a = a;
    d.r_max = (R + a * std::abs(t) + a * norm(x)) / (1.0 - a) + R;
    return d;
}

// ---------------------------------------------------------------- sphere rule

namespace {

struct Interval {
    double lo, hi;
};

// r-intervals along direction omega where |x + r omega| <= R + c |t - r|
int support_intervals(double t, const Vec3& x, const Vec3& omega, double R, double c, double r_max,
                      Interval out[2]) {
    const double xw = dot(x, omega);
    const double x2 = norm2(x);
    const double qa = 1.0 - c * c;
    int count = 0;
    auto solve = [&](double qb, double qc, double lo, double hi) {
        if (hi <= lo) return;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) return;
        const double sq = std::sqrt(disc);
        const double r1 = (-qb - sq) / (2.0 * qa);
        const double r2 = (-qb + sq) / (2.0 * qa);
        const double a = std::max(lo, r1);
        const double b = std::min(hi, r2);
        if (b > a) out[count++] = {a, b};
    };
    if (t > 0.0) {
        const double A = R + c * t;
        solve(2.0 * (xw + A * c), x2 - A * A, 0.0, std::min(t, r_max));
    }
    const double B = R - c * t;
    solve(2.0 * (xw - B * c), x2 - B * B, std::max(t, 0.0), r_max);
    return count;
}

struct Frame {
    Vec3 e, u, w;
};

Frame make_frame(const Vec3& x) {
    Frame f;
    const double nx = norm(x);
    f.e = nx > 0.0 ? -x / nx : Vec3{0.0, 0.0, 1.0};
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(f.e[i]) < std::abs(f.e[k])) k = i;
    Vec3 axis;
    axis[k] = 1.0;
    f.u = axis - dot(axis, f.e) * f.e;
    f.u = f.u / norm(f.u);
    f.w = cross(f.e, f.u);
    return f;
}

}  // namespace

void sphere_nodes(double t, const Vec3& x, double R, double c, const QuadratureSpec& quad,
                  std::vector<SphereNode>& out) {
    out.clear();
    if (!(c < 1.0)) {
        std::ostringstream os;
        os << "support speed " << c << " is not below 1; reduce support_margin";
        throw SupportMarginExceeded(os.str());
    }
    const double r_max = c > 0.0 ? cone_domain(t, x, R, c).r_max : norm(x) + R;
    const Frame fr = make_frame(x);
    const double nx = norm(x);
    Interval iv[2];

    auto dir = [&](double ct, double phi) {
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        return ct * fr.e + (st * std::cos(phi)) * fr.u + (st * std::sin(phi)) * fr.w;
    };

    double cmin = -1.0;
    if (nx > R + c * std::abs(t)) {
        // directions reaching the support form a cap around e
        auto hits = [&](double theta) {
            return support_intervals(t, x, dir(std::cos(theta), 0.0), R, c, r_max, iv) > 0;
        };
        constexpr int kScan = 64;
        int last = -1;
        for (int k = 0; k <= kScan; ++k)
            if (hits(std::numbers::pi * k / kScan)) last = k;
        if (last < 0) return;
        if (last < kScan) {
            double lo = std::numbers::pi * last / kScan;
            double hi = std::numbers::pi * (last + 1) / kScan;
            for (int it = 0; it < 50; ++it) {
                const double mid = 0.5 * (lo + hi);
                (hits(mid) ? lo : hi) = mid;
            }
            cmin = std::cos(hi);
        }
    }

    const GaussRule& gt = gauss_legendre(quad.angular_nodes_theta);
    const GaussRule& gr = gauss_legendre(quad.radial_nodes);
    const int nphi = quad.angular_nodes_phi;
    const double chalf = 0.5 * (1.0 - cmin);
    const double cmid = 0.5 * (1.0 + cmin);
    for (int i = 0; i < quad.angular_nodes_theta; ++i) {
        const double ct = cmid + chalf * gt.nodes[i];
        for (int j = 0; j < nphi; ++j) {
            const double phi = 2.0 * std::numbers::pi * (j + 0.5) / nphi;
            const double wang = chalf * gt.weights[i] * 2.0 * std::numbers::pi / nphi;
            const Vec3 omega = dir(ct, phi);
            const int n = support_intervals(t, x, omega, R, c, r_max, iv);
            for (int s = 0; s < n; ++s) {
                const double len = iv[s].hi - iv[s].lo;
                const int panels = std::max(1, static_cast<int>(std::ceil(len / quad.radial_panel)));
                const double pw = len / panels;
                for (int pnl = 0; pnl < panels; ++pnl) {
                    const double a = iv[s].lo + pnl * pw;
                    for (int k = 0; k < quad.radial_nodes; ++k) {
                        const double r = a + 0.5 * pw * (gr.nodes[k] + 1.0);
                        out.push_back({omega, r, wang * 0.5 * pw * gr.weights[k]});
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------- field integrals

FieldValue field_repr(double t, const Vec3& x, const Density& f, const FieldFn& force,
                      const QuadratureSpec& quad) {
    FieldValue out;
    if (f.is_zero()) return out;
    const double R = f.support_radius();
    const auto margin = f.drift_margin();
    const bool box = quad.momentum_rule == MomentumRuleKind::Box || !margin;
    const bool has_force = !force.is_null();
    thread_local std::vector<SphereNode> sph;
    thread_local std::vector<MomentumNode> mom;
    sphere_nodes(t, x, R, f.spatial_speed(), quad, sph);
    for (const SphereNode& sn : sph) {
        const Vec3 y = x + sn.r * sn.omega;
        const double tau = t - sn.r;
        if (box) check_box_boundary(tau, y, f, quad);
        momentum_nodes(quad, R, margin, tau, y, mom);
        if (mom.empty()) continue;
        FieldValue K;
        if (has_force) K = force(tau, y);
        const Vec3& w = sn.omega;
        Vec3 e1, b1, e2, b2;
        for (const MomentumNode& nd : mom) {
            const double val = f(tau, y, nd.p);
            if (val == 0.0) continue;
            const double wf = nd.w * val;
            const Vec3& v = nd.v;
            const double D = 1.0 + dot(w, v);
            const Vec3 N = w + v;
            const Vec3 M = cross(w, v);
            const double g2 = 1.0 + norm2(nd.p);
            const double s1 = wf / (g2 * D * D);
            e1 += s1 * N;
            b1 += s1 * M;
            if (has_force) {
                const Vec3 Kp = K.E + cross(v, K.B);
                const Vec3 dv = (Kp - dot(v, Kp) * v) / std::sqrt(g2);
                const double od = dot(w, dv);
                const double s2 = wf / (D * D);
                e2 += s2 * (D * dv - od * N);
                b2 += s2 * (D * cross(w, dv) - od * M);
            }
        }
        out.E += sn.weight * (-1.0 * e1 - sn.r * e2);
        out.B += sn.weight * (b1 + sn.r * b2);
    }
    if (!is_finite(out)) throw std::runtime_error("field_repr: non-finite field value");
    return out;
}

FieldValue field_raw(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad) {
    FieldValue out;
    if (f.is_zero()) return out;
    const double R = f.support_radius();
    const auto margin = f.drift_margin();
    const bool box = quad.momentum_rule == MomentumRuleKind::Box || !margin;
    const double h = quad.fd_source_step;
    std::vector<SphereNode> sph;
    std::vector<MomentumNode> mom;
    sphere_nodes(t, x, R, f.spatial_speed(), quad, sph);

    // moments with a fixed node set so the differences act on one quadrature functional
    auto moments = [&](double tau, const Vec3& y) {
        Sources s;
        for (const MomentumNode& nd : mom) {
            const double val = f(tau, y, nd.p);
            if (val == 0.0) continue;
            s.rho += nd.w * val;
            s.j += (nd.w * val) * nd.v;
        }
        return s;
    };

    for (const SphereNode& sn : sph) {
        const Vec3 y = x + sn.r * sn.omega;
        const double tau = t - sn.r;
        if (box) check_box_boundary(tau, y, f, quad);
        momentum_nodes(quad, R, margin, tau, y, mom);
        if (mom.empty()) continue;
        Vec3 grad_rho;
        std::array<Vec3, 3> dj;  // dj[i] = d j / d y_i
        for (int i = 0; i < 3; ++i) {
            Vec3 yp = y, ym = y;
            yp[i] += h;
            ym[i] -= h;
            const Sources sp = moments(tau, yp);
            const Sources sm = moments(tau, ym);
            grad_rho[i] = (sp.rho - sm.rho) / (2.0 * h);
            dj[i] = (sp.j - sm.j) / (2.0 * h);
        }
        const Vec3 dtj = (moments(tau + h, y).j - moments(tau - h, y).j) / (2.0 * h);
        const Vec3 curl{dj[1].z - dj[2].y, dj[2].x - dj[0].z, dj[0].y - dj[1].x};
        out.E += (sn.weight * sn.r) * (-1.0 * (grad_rho + dtj));
        out.B += (sn.weight * sn.r) * curl;
    }
    return out;
}

std::array<FieldValue, 4> field_gradient(const FieldFn& field, double t, const Vec3& x, double h) {
    std::array<FieldValue, 4> g;
    g[0] = (1.0 / (2.0 * h)) * (field(t + h, x) - field(t - h, x));
    for (int i = 0; i < 3; ++i) {
        Vec3 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i + 1] = (1.0 / (2.0 * h)) * (field(t, xp) - field(t, xm));
    }
    return g;
}

std::array<FieldValue, 4> field_gradient(double t, const Vec3& x, const Density& f,
                                         const FieldFn& force, const QuadratureSpec& quad) {
    const ReprField field(f, force, quad);
    return field_gradient(field, t, x, quad.fd_field_step);
}

double chain_rule_identity_residual(double t, const Vec3& x, const Vec3& y, const Vec3& p,
                                    const TestFunction& g) {
    const Vec3 d = y - x;
    const double r = norm(d);
    if (!(r > 0.0)) throw std::invalid_argument("chain_rule_identity_residual: y must differ from x");
    const Vec3 w = d / r;
    const Vec3 v = p_hat(p);
    const double tau = t - r;

    auto G = [&](const Vec3& z) { return g.value(t - norm(z - x), z); };
    const double h = 1e-4 * std::max(1.0, r);
    Vec3 gradG;
    for (int i = 0; i < 3; ++i) {
        auto at = [&](double s) {
            Vec3 z = y;
            z[i] += s;
            return G(z);
        };
        gradG[i] = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
    }

    const double gt = g.dt(tau, y);
    const Vec3 gx = g.grad(tau, y);
    const double Tg = gt + dot(v, gx);
    const double D = 1.0 + dot(w, v);
    const double rhs_t = (Tg - dot(v, gradG)) / D;
    double res = std::abs(gt - rhs_t);
    for (int i = 0; i < 3; ++i) res = std::max(res, std::abs(gx[i] - (gradG[i] + w[i] * rhs_t)));
    return res;
}

}  // namespace rvmret
