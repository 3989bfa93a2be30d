#include "rvmret/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "rvmret/errors.hpp"
#include "rvmret/quadrature.hpp"

namespace rvmret {

double a_of_beta(double beta) {
    if (beta < 0.0) throw std::invalid_argument("a_of_beta: beta must be nonnegative");
    // the exact value rounds to 1 for beta beyond ~1e8; keep it strictly subluminal
    return std::min(beta / std::sqrt(1.0 + beta * beta), std::nextafter(1.0, 0.0));
}

void QuadratureSpec::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("invalid quadrature setting: ") + what);
    };
    need(momentum_nodes >= 1, "momentum_nodes >= 1");
    need(angular_nodes_theta >= 1 && angular_nodes_phi >= 1, "angular node counts >= 1");
    need(radial_nodes >= 1, "radial_nodes >= 1");
    need(radial_panel > 0.0, "radial_panel > 0");
    need(ode_max_step > 0.0, "ode_max_step > 0");
    need(ode_min_steps >= 2, "ode_min_steps >= 2");
    need(ode_tol > 0.0, "ode_tol > 0");
    need(fd_source_step > 0.0 && fd_field_step > 0.0 && fd_jacobian_step > 0.0,
         "finite-difference steps > 0");
    need(support_margin > 0.0, "support_margin > 0");
    need(support_threshold >= 0.0, "support_threshold >= 0");
    need(delta_lattice >= 3, "delta_lattice >= 3");
    need(t_max > t_min, "t_max > t_min");
    need(half_width > 0.0, "half_width > 0");
    need(n_t >= 2 && n_x >= 2, "n_t, n_x >= 2");
    need(tolerance > 0.0, "tolerance > 0");
    need(max_iter >= 1, "max_iter >= 1");
    need(min_iter >= 1 && min_iter <= max_iter, "1 <= min_iter <= max_iter");
    need(memory_ceiling_mb > 0.0, "memory_ceiling_mb > 0");
}

// ---------------------------------------------------------------- initial data

namespace {

void cubic_bump(double R, double A, const Vec3& x, const Vec3& p, PhaseDerivatives& d) {
    const double R2 = R * R;
    const std::array<double, 6> z = {x.x, x.y, x.z, p.x, p.y, p.z};
    double s = 0.0;
    for (double c : z) s += c * c;
    d = PhaseDerivatives{};
    const double u = 1.0 - s / R2;
    if (u <= 0.0) return;
    d.value = A * u * u * u;
    for (int i = 0; i < 6; ++i) d.grad[i] = -6.0 * A * z[i] / R2 * u * u;
    for (int i = 0; i < 6; ++i) {
        for (int k = 0; k < 6; ++k) {
            double h = 24.0 * A * z[i] * z[k] / (R2 * R2) * u;
            if (i == k) h -= 6.0 * A / R2 * u * u;
            d.hess[i][k] = h;
        }
    }
}

}  // namespace

double estimate_unit_delta(const std::string& profile, double R, int lattice) {
    if (profile != "cubic-bump") throw ConfigError("unknown initial-data profile: " + profile);
    static std::mutex mu;
    static std::map<std::tuple<std::string, double, int>, double> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find({profile, R, lattice});
        if (it != cache.end()) return it->second;
    }
    std::vector<double> axis(lattice);
    for (int i = 0; i < lattice; ++i) axis[i] = -R + 2.0 * R * i / (lattice - 1);
    double sup0 = 0.0;
    std::array<double, 6> sup1{};
    std::array<std::array<double, 6>, 6> sup2{};
    PhaseDerivatives d;
    const double R2 = R * R;
    for (int a = 0; a < lattice; ++a)
        for (int b = 0; b < lattice; ++b)
            for (int c = 0; c < lattice; ++c) {
                const double sx = axis[a] * axis[a] + axis[b] * axis[b] + axis[c] * axis[c];
                if (sx >= R2) continue;
                for (int e = 0; e < lattice; ++e)
                    for (int f = 0; f < lattice; ++f)
                        for (int g = 0; g < lattice; ++g) {
                            const double sp =
                                axis[e] * axis[e] + axis[f] * axis[f] + axis[g] * axis[g];
                            if (sx + sp >= R2) continue;
                            cubic_bump(R, 1.0, {axis[a], axis[b], axis[c]},
                                       {axis[e], axis[f], axis[g]}, d);
                            sup0 = std::max(sup0, std::abs(d.value));
                            for (int i = 0; i < 6; ++i) {
                                sup1[i] = std::max(sup1[i], std::abs(d.grad[i]));
                                for (int k = i; k < 6; ++k)
                                    sup2[i][k] = std::max(sup2[i][k], std::abs(d.hess[i][k]));
                            }
                        }
            }
    // one term per multi-index: mixed second derivatives counted once
    double total = sup0;
    for (int i = 0; i < 6; ++i) {
        total += sup1[i];
        for (int k = i; k < 6; ++k) total += sup2[i][k];
    }
    std::lock_guard<std::mutex> lock(mu);
    cache[{profile, R, lattice}] = total;
    return total;
}

InitialData::InitialData(double R, double amplitude, std::string profile, int delta_lattice)
    : R_(R), amplitude_(amplitude), profile_(std::move(profile)) {
    if (!(R > 0.0)) throw ConfigError("initial data: R must be positive");
    if (!(amplitude >= 0.0)) throw ConfigError("initial data: amplitude must be nonnegative");
    delta_ = amplitude_ * estimate_unit_delta(profile_, R_, delta_lattice);
}

double InitialData::operator()(const Vec3& x, const Vec3& p) const {
    const double u = 1.0 - (norm2(x) + norm2(p)) / (R_ * R_);
    if (u <= 0.0) return 0.0;
    return amplitude_ * u * u * u;
}

PhaseDerivatives InitialData::derivatives(const Vec3& x, const Vec3& p) const {
    PhaseDerivatives d;
    cubic_bump(R_, amplitude_, x, p, d);
    return d;
}

double eval_initial(const InitialData& data, const Vec3& x, const Vec3& p) { return data(x, p); }

// ---------------------------------------------------------------- momentum rules

double support_speed(double R, std::optional<double> margin) {
    if (margin) return a_of_beta(R + *margin) + *margin;
    return a_of_beta(2.0 * R);
}

double Density::spatial_speed() const { return support_speed(support_radius(), drift_margin()); }

namespace {

void box_rule(const QuadratureSpec& quad, double R, std::vector<MomentumNode>& out) {
    const GaussRule& g = gauss_legendre(quad.momentum_nodes);
    const int n = quad.momentum_nodes;
    const double h = 2.0 * R;
    out.reserve(static_cast<std::size_t>(n) * n * n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                MomentumNode nd;
                nd.p = {h * g.nodes[a], h * g.nodes[b], h * g.nodes[c]};
                nd.v = p_hat(nd.p);
                nd.w = h * h * h * g.weights[a] * g.weights[b] * g.weights[c];
                out.push_back(nd);
            }
}

}  // namespace

void momentum_nodes(const QuadratureSpec& quad, double R, std::optional<double> margin, double t,
                    const Vec3& x, std::vector<MomentumNode>& out) {
    out.clear();
    if (quad.momentum_rule == MomentumRuleKind::Box || !margin) {
        box_rule(quad, R, out);
        return;
    }
    const double m = *margin;
    const double amax = a_of_beta(R + m);
    std::array<double, 3> lo{}, hi{};
    const double at = std::abs(t);
    for (int i = 0; i < 3; ++i) {
        lo[i] = -amax;
        hi[i] = amax;
        if (at > 0.0) {
            const double c = x[i] / t;
            const double hw = R / at + m;
            lo[i] = std::max(lo[i], c - hw);
            hi[i] = std::min(hi[i], c + hw);
        } else if (std::abs(x[i]) >= R) {
            return;
        }
        if (hi[i] <= lo[i]) return;
    }
    const GaussRule& g = gauss_legendre(quad.momentum_nodes);
    const int n = quad.momentum_nodes;
    const double amax2 = amax * amax;
    std::array<double, 3> half{}, mid{};
    for (int i = 0; i < 3; ++i) {
        half[i] = 0.5 * (hi[i] - lo[i]);
        mid[i] = 0.5 * (hi[i] + lo[i]);
    }
    const double vol = half[0] * half[1] * half[2];
    for (int a = 0; a < n; ++a) {
        const double v1 = mid[0] + half[0] * g.nodes[a];
        for (int b = 0; b < n; ++b) {
            const double v2 = mid[1] + half[1] * g.nodes[b];
            for (int c = 0; c < n; ++c) {
                const double v3 = mid[2] + half[2] * g.nodes[c];
                const double v2n = v1 * v1 + v2 * v2 + v3 * v3;
                if (v2n >= amax2) continue;
                const double gam = 1.0 / std::sqrt(1.0 - v2n);
                const double g2 = gam * gam;
                MomentumNode nd;
                nd.v = {v1, v2, v3};
                nd.p = gam * nd.v;
                nd.w = vol * g.weights[a] * g.weights[b] * g.weights[c] * g2 * g2 * gam;
                out.push_back(nd);
            }
        }
    }
}

void check_box_boundary(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad) {
    const double h = 2.0 * f.support_radius();
    const double tol = quad.box_boundary_tol * f.scale();
    // face centres, edge midpoints and corners
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c) {
                if (a == 0 && b == 0 && c == 0) continue;
                const Vec3 p{h * a, h * b, h * c};
                const double v = f(t, x, p);
                if (std::abs(v) > tol) {
                    std::ostringstream os;
                    os << "density nonzero (" << v << ") on the momentum box boundary at t=" << t
                       << ", x=(" << x.x << "," << x.y << "," << x.z << "), p=(" << p.x << ","
                       << p.y << "," << p.z << ")";
                    throw QuadratureDomainViolation(os.str());
                }
            }
}

Sources sources(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad) {
    Sources s;
    if (f.is_zero()) return s;
    const auto margin = f.drift_margin();
    if (quad.momentum_rule == MomentumRuleKind::Box || !margin) check_box_boundary(t, x, f, quad);
    std::vector<MomentumNode> nodes;
    momentum_nodes(quad, f.support_radius(), margin, t, x, nodes);
    for (const auto& nd : nodes) {
        const double v = f(t, x, nd.p);
        if (v == 0.0) continue;
        s.rho += nd.w * v;
        s.j += (nd.w * v) * nd.v;
    }
    return s;
}

}  // namespace rvmret
