#include "rvmret/characteristics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "rvmret/errors.hpp"

namespace rvmret {

namespace {

struct State {
    Vec3 X;
    Vec3 P;
};

class Rhs {
public:
    Rhs(const FieldFn& field, bool check_domain)
        : field_(field), dom_(field.domain()), check_(check_domain) {}

    State operator()(double s, const State& y) const {
        if (check_ && !dom_.contains(s, y.X)) {
            std::ostringstream os;
            os << "characteristic left the field domain at s=" << s << ", X=(" << y.X.x << ","
               << y.X.y << "," << y.X.z << ")";
            throw DomainExceeded(os.str());
        }
        const FieldValue F = field_(s, y.X);
        const Vec3 v = p_hat(y.P);
        return {v, F.E + cross(v, F.B)};
    }

private:
    const FieldFn& field_;
    FieldDomain dom_;
    bool check_;
};

State axpy(const State& y, double h, const State& k) { return {y.X + h * k.X, y.P + h * k.P}; }

State rk4(const Rhs& rhs, double s0, double s1, int n, State y) {
    const double h = (s1 - s0) / n;
    for (int i = 0; i < n; ++i) {
        const double s = s0 + i * h;
        const double s_end = (i + 1 == n) ? s1 : s0 + (i + 1) * h;
        const State k1 = rhs(s, y);
        const State k2 = rhs(s + 0.5 * h, axpy(y, 0.5 * h, k1));
        const State k3 = rhs(s + 0.5 * h, axpy(y, 0.5 * h, k2));
        const State k4 = rhs(s_end, axpy(y, h, k3));
        y.X += (h / 6.0) * (k1.X + 2.0 * k2.X + 2.0 * k3.X + k4.X);
        y.P += (h / 6.0) * (k1.P + 2.0 * k2.P + 2.0 * k3.P + k4.P);
    }
    return y;
}

double max_abs_diff(const State& a, const State& b) {
    double m = 0.0;
    for (int i = 0; i < 3; ++i) {
        m = std::max(m, std::abs(a.X[i] - b.X[i]));
        m = std::max(m, std::abs(a.P[i] - b.P[i]));
    }
    return m;
}

}  // namespace

CharResult integrate_characteristic(double t, const Vec3& x, const Vec3& p, const FieldFn& field,
                                    double s_target, const QuadratureSpec& quad) {
    CharResult res{x, p, 0, 0.0};
    if (s_target == t) return res;
    if (field.is_null()) {
        res.X = x + (s_target - t) * p_hat(p);
        return res;
    }

    const FieldDomain dom = field.domain();
    double s_in = t, s_out = s_target;  // RK segment, ordered along the integration direction
    const bool fwd = s_target > t;
    bool check = false;
    if (dom.zero_outside) {
        const double lo = std::max(std::min(t, s_target), dom.t_min);
        const double hi = std::min(std::max(t, s_target), dom.t_max);
        if (hi <= lo) {
            res.X = x + (s_target - t) * p_hat(p);
            return res;
        }
        s_in = fwd ? lo : hi;
        s_out = fwd ? hi : lo;
    } else if (dom.bounded()) {
        if (std::min(t, s_target) < dom.t_min || std::max(t, s_target) > dom.t_max) {
            std::ostringstream os;
            os << "time interval [" << std::min(t, s_target) << ", " << std::max(t, s_target)
               << "] outside field domain [" << dom.t_min << ", " << dom.t_max << "]";
            throw DomainExceeded(os.str());
        }
        check = true;
    }

    State y{x + (s_in - t) * p_hat(p), p};
    const double span = std::abs(s_out - s_in);
    int n = std::max(quad.ode_min_steps, static_cast<int>(std::ceil(span / quad.ode_max_step)));
    if (n % 2) ++n;
    const Rhs rhs(field, check);
    const State fine = rk4(rhs, s_in, s_out, n, y);
    const State coarse = rk4(rhs, s_in, s_out, n / 2, y);
    res.est_local_error = max_abs_diff(fine, coarse) / 15.0;
    res.steps_taken = n + n / 2;
    res.X = fine.X + (s_target - s_out) * p_hat(fine.P);
    res.P = fine.P;
    if (!(res.est_local_error <= quad.ode_tol)) {
        std::ostringstream os;
        os << "ODE error estimate " << res.est_local_error << " exceeds tolerance " << quad.ode_tol
           << " with " << n << " steps";
        throw ToleranceNotMet(os.str());
    }
    return res;
}

CharResult backward_to_zero(double t, const Vec3& x, const Vec3& p, const FieldFn& field,
                            const QuadratureSpec& quad) {
    return integrate_characteristic(t, x, p, field, 0.0, quad);
}

double flow_jacobian(double t, const Vec3& x, const Vec3& p, const FieldFn& field,
                     const QuadratureSpec& quad) {
    if (t == 0.0) return 1.0;
    const double h = quad.fd_jacobian_step;
    Eigen::Matrix<double, 6, 6> J;
    for (int j = 0; j < 6; ++j) {
        Vec3 xp = x, xm = x, pp = p, pm = p;
        if (j < 3) {
            xp[j] += h;
            xm[j] -= h;
        } else {
            pp[j - 3] += h;
            pm[j - 3] -= h;
        }
        const CharResult a = backward_to_zero(t, xp, pp, field, quad);
        const CharResult b = backward_to_zero(t, xm, pm, field, quad);
        for (int i = 0; i < 3; ++i) {
            J(i, j) = (a.X[i] - b.X[i]) / (2.0 * h);
            J(i + 3, j) = (a.P[i] - b.P[i]) / (2.0 * h);
        }
    }
    return J.partialPivLu().determinant();
}

double max_momentum_estimate(double t, const Density& f, const QuadratureSpec& quad, int x_lattice,
                             int v_lattice) {
    if (f.is_zero()) return 0.0;
    const double R = f.support_radius();
    const auto margin = f.drift_margin();
    const double ext = R + f.spatial_speed() * std::abs(t);
    const double thr = quad.support_threshold * f.scale();
    const double vmax = a_of_beta(3.0 * R);
    double best = 0.0;
    std::vector<MomentumNode> nodes;
    auto consider = [&](const Vec3& xx, const Vec3& pp) {
        const double np = norm(pp);
        if (np <= best) return;
        if (f(t, xx, pp) > thr) best = np;
    };
    for (int a = 0; a < x_lattice; ++a)
        for (int b = 0; b < x_lattice; ++b)
            for (int c = 0; c < x_lattice; ++c) {
                auto coord = [&](int i) {
                    return x_lattice == 1 ? 0.0 : -ext + 2.0 * ext * i / (x_lattice - 1);
                };
                const Vec3 xx{coord(a), coord(b), coord(c)};
                for (int i = 0; i < v_lattice; ++i)
                    for (int j = 0; j < v_lattice; ++j)
                        for (int k = 0; k < v_lattice; ++k) {
                            auto vc = [&](int q) {
                                return v_lattice == 1 ? 0.0
                                                      : -vmax + 2.0 * vmax * q / (v_lattice - 1);
                            };
                            const Vec3 v{vc(i), vc(j), vc(k)};
                            const double v2 = norm2(v);
                            if (v2 >= 1.0) continue;
                            consider(xx, v / std::sqrt(1.0 - v2));
                        }
                momentum_nodes(quad, R, margin, t, xx, nodes);
                for (const auto& nd : nodes) consider(xx, nd.p);
            }
    return best;
}

}  // namespace rvmret
