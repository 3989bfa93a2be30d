#include "rvmret/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rvmret/errors.hpp"
#include "rvmret/quadrature.hpp"

namespace rvmret {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes and weights on [-L, L]
std::vector<std::pair<double, double>> gl_on(int n, double L) {
    const GaussRule& g = gauss_legendre(n);
    std::vector<std::pair<double, double>> out(n);
    for (int i = 0; i < n; ++i) out[i] = {L * g.nodes[i], L * g.weights[i]};
    return out;
}

// int dx int dp phi(f) over the spatial support cube and the momentum rule
template <class Phi>
double phase_integral(double t, const Density& f, const QuadratureSpec& quad, int n, Phi phi) {
    const double L = f.support_radius() + f.spatial_speed() * std::abs(t);
    const auto ax = gl_on(n, L);
    std::vector<MomentumNode> nodes;
    double acc = 0.0;
    for (const auto& [x1, w1] : ax)
        for (const auto& [x2, w2] : ax)
            for (const auto& [x3, w3] : ax) {
                const Vec3 x{x1, x2, x3};
                momentum_nodes(quad, f.support_radius(), f.drift_margin(), t, x, nodes);
                double s = 0.0;
                for (const MomentumNode& m : nodes) s += m.w * phi(m.p, f(t, x, m.p));
                acc += w1 * w2 * w3 * s;
            }
    return acc;
}

double field_half_width(const FieldFn& field, double requested) {
    if (requested > 0.0) return requested;
    const FieldDomain d = field.domain();
    if (!std::isfinite(d.half_width))
        throw std::invalid_argument("field energy needs a cube half-width for an unbounded field");
    return d.half_width;
}

}  // namespace

// ---------------------------------------------------------------- energies

EnergyReport energies(double t, const Density& f, const FieldFn& field, const QuadratureSpec& quad,
                      const EnergyOptions& opt) {
    EnergyReport rep;
    rep.t = t;
    if (!f.is_zero())
        rep.kinetic = phase_integral(t, f, quad, opt.spatial_nodes,
                                     [](const Vec3& p, double v) { return gamma_of(p) * v; });
    if (!field.is_null()) {
        const double L = field_half_width(field, opt.field_half_width);
        const int n = opt.field_nodes;
        if (n < 2) throw std::invalid_argument("field_nodes must be >= 2");
        const double h = 2.0 * L / (n - 1);
        double acc = 0.0, edge = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const Vec3 x{-L + i * h, -L + j * h, -L + k * h};
                    const FieldValue F = field(t, x);
                    const double e2 = norm2(F.E) + norm2(F.B);
                    const bool bi = i == 0 || i == n - 1, bj = j == 0 || j == n - 1,
                               bk = k == 0 || k == n - 1;
                    const double w = (bi ? 0.5 : 1.0) * (bj ? 0.5 : 1.0) * (bk ? 0.5 : 1.0);
                    acc += w * e2;
                    if (bi || bj || bk) edge = std::max(edge, std::sqrt(e2) * norm2(x) / (L * L));
                }
        rep.field_energy = 0.5 * acc * h * h * h;
        // outside the inscribed ball with |F| <= edge (L/r)^2
        rep.field_tail_bound = 2.0 * kPi * edge * edge * L * L * L;
    }
    rep.total = rep.kinetic + rep.field_energy;
    return rep;
}

// ---------------------------------------------------------------- radiation

FieldValue outgoing_pulse(double t, const Vec3& x, const std::function<double(double)>& g) {
    const double r = norm(x);
    if (r == 0.0) return {};
    const Vec3 w = x / r;
    const Vec3 E = (g(t - r) / r) * cross(Vec3{0, 0, 1}, w);
    return {E, cross(w, E)};
}

RadiationReport incoming_radiation(double v1, double v2, double u1, double u2,
                                   const std::vector<double>& radii, const FieldFn& field,
                                   const RadiationOptions& opt) {
    if (radii.empty()) throw std::invalid_argument("incoming_radiation: no radii");
    for (std::size_t k = 0; k < radii.size(); ++k)
        if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1])))
            throw std::invalid_argument("incoming_radiation: radii must be positive and increasing");
    const FieldDomain dom = field.domain();
    auto check = [&](double t, double r) {
        if (t < dom.t_min || t > dom.t_max || r > dom.half_width) {
            std::ostringstream os;
            os << "flux sphere r = " << r << " at t = " << t << " leaves the field domain";
            throw DomainExceeded(os.str());
        }
    };
    const GaussRule& gt = gauss_legendre(opt.theta_nodes);
    const GaussRule& gs = gauss_legendre(opt.time_nodes);
    auto sphere_flux = [&](double t, double r) {
        double s = 0.0;
        for (int i = 0; i < opt.theta_nodes; ++i) {
            const double mu = gt.nodes[i], st = std::sqrt(1.0 - mu * mu);
            for (int j = 0; j < opt.phi_nodes; ++j) {
                const double ph = 2.0 * kPi * (j + 0.5) / opt.phi_nodes;
                const Vec3 w{st * std::cos(ph), st * std::sin(ph), mu};
                const FieldValue F = field(t, r * w);
                s += gt.weights[i] * dot(cross(F.E, F.B), w);
            }
        }
        return s * (2.0 * kPi / opt.phi_nodes) * r * r;
    };
    auto window = [&](double a, double b, double r, double sign) {
        double acc = 0.0;
        for (int k = 0; k < opt.time_nodes; ++k) {
            const double s = 0.5 * (a + b) + 0.5 * (b - a) * gs.nodes[k];
            const double t = s + sign * r;
            check(t, r);
            acc += 0.5 * (b - a) * gs.weights[k] * sphere_flux(t, r);
        }
        return acc;
    };
    RadiationReport rep;
    rep.radii = radii;
    for (double r : radii) {
        rep.incoming.push_back(-window(v1, v2, r, -1.0));
        rep.outgoing.push_back(window(u1, u2, r, +1.0));
    }
    auto fit = [&](const std::vector<double>& y) {
        if (y.size() == 1) return y[0];
        Eigen::MatrixXd A(y.size(), 2);
        Eigen::VectorXd b(y.size());
        for (std::size_t k = 0; k < y.size(); ++k) {
            A(k, 0) = 1.0;
            A(k, 1) = 1.0 / radii[k];
            b(k) = y[k];
        }
        return Eigen::VectorXd(A.colPivHouseholderQr().solve(b))(0);
    };
    rep.incoming_limit = fit(rep.incoming);
    rep.outgoing_limit = fit(rep.outgoing);
    rep.incoming_decreasing = true;
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (std::abs(rep.incoming[k]) > std::abs(rep.incoming[k - 1])) rep.incoming_decreasing = false;
    return rep;
}

// ---------------------------------------------------------------- free streaming condition

FscReport fsc_check(const FieldFn& field, const FieldGradientFn& gradient, double R, double eta,
                    double alpha, const std::vector<std::pair<double, Vec3>>& sample) {
    if (!(alpha > 0.5)) throw std::invalid_argument("fsc_check: alpha must exceed 1/2");
    FscReport rep;
    rep.eta = eta;
    rep.alpha = alpha;
    for (const auto& [t, x] : sample) {
        const double r = norm(x);
        if (r > R + std::abs(t)) continue;
        const double w1 = std::pow(1.0 + std::abs(t) + r, -alpha);
        const double w2 = 1.0 + R + std::abs(t) - r;
        const double F = magnitude(field(t, x));
        const auto G = gradient(t, x);
        double g2 = 0.0;
        for (int d = 1; d <= 3; ++d) g2 += norm2(G[d].E) + norm2(G[d].B);
        rep.eta_field = std::max(rep.eta_field, F / (w1 * std::pow(w2, -alpha)));
        rep.eta_gradient =
            std::max(rep.eta_gradient, std::sqrt(g2) / (w1 * std::pow(w2, -alpha - 1.0)));
        ++rep.samples;
    }
    rep.eta_measured = std::max(rep.eta_field, rep.eta_gradient);
    rep.pass = rep.eta_measured <= eta;
    return rep;
}

// ---------------------------------------------------------------- decay fit

DecayFit decay_fit(const std::vector<DecayProbe>& probes) {
    // values at roundoff level (symmetry zeros) count as zero
    double peak = 0.0;
    for (const DecayProbe& p : probes)
        if (std::isfinite(p.value)) peak = std::max(peak, p.value);
    std::vector<DecayProbe> use;
    for (const DecayProbe& p : probes)
        if (p.value > 1e-12 * peak && std::isfinite(p.value)) use.push_back(p);
    if (use.size() < 3) throw IllConditioned("decay_fit: fewer than 3 nonzero probes");
    double lo1 = 1e300, hi1 = 0, lo2 = 1e300, hi2 = 0;
    Eigen::MatrixXd A(use.size(), 3);
    Eigen::VectorXd b(use.size());
    for (std::size_t k = 0; k < use.size(); ++k) {
        const double w1 = 1.0 + std::abs(use[k].t) + use[k].x_norm;
        const double w2 = 1.0 + std::abs(use[k].t - use[k].x_norm);
        lo1 = std::min(lo1, w1);
        hi1 = std::max(hi1, w1);
        lo2 = std::min(lo2, w2);
        hi2 = std::max(hi2, w2);
        A(k, 0) = 1.0;
        A(k, 1) = -std::log(w1);
        A(k, 2) = -std::log(w2);
        b(k) = std::log(use[k].value);
    }
    if (hi1 < 4.0 * lo1 || hi2 < 4.0 * lo2) {
        std::ostringstream os;
        os << "decay_fit: probes span factors " << hi1 / lo1 << " and " << hi2 / lo2
           << " in the two weights, need 4";
        throw IllConditioned(os.str());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw IllConditioned("decay_fit: design matrix is rank-deficient");
    const Eigen::VectorXd c = qr.solve(b);
    DecayFit fit;
    fit.C = std::exp(c(0));
    fit.alpha1 = c(1);
    fit.alpha2 = c(2);
    fit.residual = (A * c - b).cwiseAbs().maxCoeff();
    fit.used = static_cast<int>(use.size());
    return fit;
}

// ---------------------------------------------------------------- conservation

std::vector<LpRow> lp_conservation(const Density& f, const std::vector<double>& t_list,
                                   const QuadratureSpec& quad, const LpOptions& opt) {
    std::vector<LpRow> rows;
    const double R = f.support_radius();
    const int m = opt.linf_lattice;
    for (double t : t_list) {
        LpRow row;
        row.t = t;
        if (!f.is_zero()) {
            double sup = 0.0;
            row.l1 = phase_integral(t, f, quad, opt.spatial_nodes, [&](const Vec3&, double v) {
                sup = std::max(sup, v);
                return std::abs(v);
            });
            row.l2 = std::sqrt(
                phase_integral(t, f, quad, opt.spatial_nodes, [](const Vec3&, double v) { return v * v; }));
            // initial lattice in the support ball, moved along free flight
            for (int a = 0; a < m * m * m; ++a)
                for (int b = 0; b < m * m * m; ++b) {
                    auto coord = [&](int idx, int k) {
                        for (int s = 0; s < k; ++s) idx /= m;
                        return m == 1 ? 0.0 : -R + 2.0 * R * (idx % m) / (m - 1);
                    };
                    const Vec3 x0{coord(a, 0), coord(a, 1), coord(a, 2)};
                    const Vec3 p0{coord(b, 0), coord(b, 1), coord(b, 2)};
                    if (norm2(x0) + norm2(p0) >= R * R) continue;
                    sup = std::max(sup, f(t, x0 + t * p_hat(p0), p0));
                }
            row.linf = sup;
        }
        rows.push_back(row);
    }
    if (!rows.empty()) {
        const LpRow& r0 = rows.front();
        auto rel = [](double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / b; };
        for (LpRow& r : rows) {
            r.drift_l1 = rel(r.l1, r0.l1);
            r.drift_l2 = rel(r.l2, r0.l2);
            r.drift_linf = rel(r.linf, r0.linf);
        }
    }
    return rows;
}

double support_volume(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad,
                      int lattice) {
    if (f.is_zero()) return 0.0;
    const double R = f.support_radius();
    const auto margin = f.drift_margin();
    const double pmax = margin ? R + *margin : 2.0 * R;
    std::array<double, 3> lo{-pmax, -pmax, -pmax}, hi{pmax, pmax, pmax};
    if (margin && t != 0.0) {
        const double amax = a_of_beta(pmax);
        const double gmax = 1.0 / std::sqrt(1.0 - amax * amax);
        const double w = R / std::abs(t) + *margin;
        for (int d = 0; d < 3; ++d) {
            const double vl = std::max(-amax, x[d] / t - w), vh = std::min(amax, x[d] / t + w);
            if (vl >= vh) return 0.0;
            lo[d] = std::max(-pmax, std::min(vl, vl * gmax));
            hi[d] = std::min(pmax, std::max(vh, vh * gmax));
            if (lo[d] >= hi[d]) return 0.0;
        }
    }
    const double thr = quad.support_threshold * f.scale();
    const double cell = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]) /
                        (static_cast<double>(lattice) * lattice * lattice);
    long count = 0;
    for (int i = 0; i < lattice; ++i)
        for (int j = 0; j < lattice; ++j)
            for (int k = 0; k < lattice; ++k) {
                const Vec3 p{lo[0] + (i + 0.5) * (hi[0] - lo[0]) / lattice,
                             lo[1] + (j + 0.5) * (hi[1] - lo[1]) / lattice,
                             lo[2] + (k + 0.5) * (hi[2] - lo[2]) / lattice};
                if (f(t, x, p) > thr) ++count;
            }
    return count * cell;
}

// ---------------------------------------------------------------- uniqueness class

double l2_norm_at_layer(const FieldTable& table, std::size_t it) {
    const Axis& a1 = table.axis(1);
    const Axis& a2 = table.axis(2);
    const Axis& a3 = table.axis(3);
    double acc = 0.0;
    for (std::size_t i = 0; i < a1.count; ++i)
        for (std::size_t j = 0; j < a2.count; ++j)
            for (std::size_t k = 0; k < a3.count; ++k) {
                const double w = ((i == 0 || i + 1 == a1.count) ? 0.5 : 1.0) *
                                 ((j == 0 || j + 1 == a2.count) ? 0.5 : 1.0) *
                                 ((k == 0 || k + 1 == a3.count) ? 0.5 : 1.0);
                const FieldValue F = table.at(table.index(it, i, j, k));
                acc += w * (norm2(F.E) + norm2(F.B));
            }
    return std::sqrt(acc * a1.step() * a2.step() * a3.step());
}

UniquenessReport uniqueness_class_check(const FieldTable& table) {
    UniquenessReport rep;
    const Axis& ta = table.axis(0);
    for (std::size_t it = 0; it < ta.count; ++it) {
        rep.t.push_back(ta.node(it));
        rep.l2.push_back(l2_norm_at_layer(table, it));
    }
    // walk from t = 0 (or the latest nonpositive time) towards t_min
    int negatives = 0;
    rep.pass = true;
    for (std::size_t it = ta.count; it-- > 0;) {
        if (rep.t[it] > 0.0) continue;
        if (rep.t[it] < 0.0) ++negatives;
        if (it + 1 < ta.count && rep.t[it + 1] <= 0.0 &&
            rep.l2[it] > rep.l2[it + 1] * (1.0 + 1e-12))
            rep.pass = false;
    }
    if (negatives == 0) rep.pass = false;
    return rep;
}

}  // namespace rvmret
