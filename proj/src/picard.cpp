#include "rvmret/picard.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "rvmret/errors.hpp"
#include "rvmret/parallel.hpp"
#include "rvmret/retarded_field.hpp"

namespace rvmret {

double free_streaming_density(const InitialData& data, double t, const Vec3& x, const Vec3& p) {
    return data(x - t * p_hat(p), p);
}

double CharacteristicDensity::operator()(double t, const Vec3& x, const Vec3& p) const {
    if (data_.amplitude() == 0.0) return 0.0;
    if (reject_) {
        const double R = data_.R();
        const double m = *margin_;
        if (norm2(p) >= (R + m) * (R + m)) return 0.0;
        const double lim = R + std::abs(t) * m;
        if (norm2(x - t * p_hat(p)) >= lim * lim) return 0.0;
    }
    if (t == 0.0) return data_(x, p);
    const CharResult r = backward_to_zero(t, x, p, *field_, quad_);
    return data_(r.X, r.P);
}

double density_from_table(const InitialData& data, double t, const Vec3& x, const Vec3& p,
                          const FieldTable& table_prev, const QuadratureSpec& quad) {
    if (t == 0.0) return data(x, p);
    const TableField field(std::shared_ptr<const FieldTable>(&table_prev, [](const FieldTable*) {}));
    const CharResult r = backward_to_zero(t, x, p, field, quad);
    return data(r.X, r.P);
}

// ---------------------------------------------------------------- domains

std::vector<GridExtent> domain_chain(const QuadratureSpec& quad, int n_iter, double R, double a) {
    if (n_iter < 1) throw std::invalid_argument("domain_chain: n_iter must be >= 1");
    const double dt = (quad.t_max - quad.t_min) / (quad.n_t - 1);
    const double dx = 2.0 * quad.half_width / (quad.n_x - 1);
    std::vector<GridExtent> ext(n_iter);
    auto finish = [&](GridExtent& e) {
        e.n_t = static_cast<std::uint64_t>(std::ceil((e.t_max - e.t_min) / dt - 1e-9)) + 1;
        e.n_x = static_cast<std::uint64_t>(std::ceil(2.0 * e.half_width / dx - 1e-9)) + 1;
        e.megabytes = static_cast<double>(e.n_t) * std::pow(static_cast<double>(e.n_x), 3) *
                      FieldTable::kComponents * sizeof(double) / 1.0e6;
    };
    GridExtent& last = ext.back();
    last.t_min = quad.t_min;
    last.t_max = quad.t_max;
    last.half_width = quad.half_width;
    finish(last);
    for (int k = n_iter - 2; k >= 0; --k) {
        const GridExtent& nxt = ext[k + 1];
        const double tfar = std::max(std::abs(nxt.t_min), std::abs(nxt.t_max));
        const double xfar = std::sqrt(3.0) * nxt.half_width;
        const double r_max = (R + a * tfar + a * xfar) / (1.0 - a) + R;
        GridExtent& e = ext[k];
        e.t_min = nxt.t_min - r_max;
        e.t_max = nxt.t_max;
        e.half_width = std::max(nxt.half_width + r_max,
                                R + a * std::max(std::abs(e.t_min), std::abs(e.t_max)));
        finish(e);
    }
    for (std::size_t k = 0; k < ext.size(); ++k) {
        if (ext[k].megabytes > quad.memory_ceiling_mb) {
            std::ostringstream os;
            os << "chained domain for iterate " << k + 1 << " needs " << ext[k].megabytes
               << " MB (" << ext[k].n_t << " x " << ext[k].n_x << "^3 nodes), ceiling "
               << quad.memory_ceiling_mb << " MB";
            throw InfeasibleBudget(os.str());
        }
    }
    return ext;
}

// ---------------------------------------------------------------- table construction

namespace {

// doubled offset of node i from the axis centre
long offset2(std::size_t i, std::uint64_t count) {
    return 2 * static_cast<long>(i) - static_cast<long>(count - 1);
}

struct CubeMap {
    std::size_t rep;        // representative node index
    std::array<int, 3> pi;  // x_d = s_d * x_rep[pi[d]]
    std::array<double, 3> s;
    double det;
};

CubeMap cube_map(const FieldTable& t, std::size_t node) {
    const auto ix = t.unravel(node);
    const std::uint64_t n = t.axis(1).count;
    std::array<long, 3> o{offset2(ix[1], n), offset2(ix[2], n), offset2(ix[3], n)};
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(o[a]) < std::abs(o[b]); });
    CubeMap m{};
    std::array<std::size_t, 3> rix{};
    for (int r = 0; r < 3; ++r) {
        const int d = order[r];
        m.pi[d] = r;
        rix[r] = static_cast<std::size_t>((std::abs(o[d]) + static_cast<long>(n - 1)) / 2);
    }
    double sgn = 1.0;
    for (int d = 0; d < 3; ++d) {
        m.s[d] = o[d] < 0 ? -1.0 : 1.0;
        sgn *= m.s[d];
    }
    // parity of pi
    int inv = 0;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            if (m.pi[a] > m.pi[b]) ++inv;
    m.det = sgn * (inv % 2 ? -1.0 : 1.0);
    m.rep = t.index(ix[0], rix[0], rix[1], rix[2]);
    return m;
}

bool symmetric_grid(const FieldTable& t) {
    const Axis& a = t.axis(1);
    return a == t.axis(2) && a == t.axis(3) && a.min == -a.max;
}

}  // namespace

FieldTable build_field_table(const Density& f, const FieldFn& force, const QuadratureSpec& quad,
                             int threads, bool symmetric, BuildStats* stats) {
    const auto t0 = std::chrono::steady_clock::now();
    FieldTable table = FieldTable::from_spec(quad);
    const std::size_t n = table.node_count();
    const bool sym = symmetric && symmetric_grid(table);

    std::vector<std::size_t> targets;
    std::vector<CubeMap> maps;
    if (sym) {
        maps.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            maps[k] = cube_map(table, k);
            if (maps[k].rep == k) targets.push_back(k);
        }
    } else {
        targets.resize(n);
        for (std::size_t k = 0; k < n; ++k) targets[k] = k;
    }

    std::vector<std::size_t> sph_count(targets.size(), 0);
    if (!f.is_zero()) {
        parallel_for(targets.size(), threads, [&](std::size_t i) {
            const std::size_t node = targets[i];
            const double t = table.node_t(node);
            const Vec3 x = table.node_x(node);
            const FieldValue F = field_repr(t, x, f, force, quad);
            if (!is_finite(F)) {
                std::ostringstream os;
                os << "non-finite field at node t=" << t << ", x=(" << x.x << "," << x.y << ","
                   << x.z << ")";
                throw std::runtime_error(os.str());
            }
            table.set(node, F);
            thread_local std::vector<SphereNode> sph;
            sphere_nodes(t, x, f.support_radius(), f.spatial_speed(), quad, sph);
            sph_count[i] = sph.size();
        });
    }

    if (sym) {
        for (std::size_t k = 0; k < n; ++k) {
            const CubeMap& m = maps[k];
            if (m.rep == k) continue;
            const FieldValue r = table.at(m.rep);
            FieldValue v;
            for (int d = 0; d < 3; ++d) {
                v.E[d] = m.s[d] * r.E[m.pi[d]];
                v.B[d] = m.det * m.s[d] * r.B[m.pi[d]];
            }
            table.set(k, v);
        }
    }

    if (stats) {
        stats->nodes_total = n;
        stats->nodes_computed = f.is_zero() ? 0 : targets.size();
        stats->sphere_nodes = 0;
        for (std::size_t c : sph_count) stats->sphere_nodes += c;
        stats->seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return table;
}

// ---------------------------------------------------------------- norms

double weighted_norm(const FieldTable& table, double w) {
    if (!(w > 0.0)) throw std::invalid_argument("weighted_norm: w must be positive");
    double sup = 0.0;
    for (std::size_t k = 0; k < table.node_count(); ++k) {
        const double t = table.node_t(k);
        const double r = norm(table.node_x(k));
        const double wt = (1.0 + std::abs(t) + r) * std::pow(1.0 + std::abs(t - r), w);
        sup = std::max(sup, wt * magnitude(table.at(k)));
    }
    return sup;
}

FieldTable grid_derivative(const FieldTable& table, int dir) {
    if (dir < 0 || dir > 3) throw std::invalid_argument("grid_derivative: dir must be 0..3");
    FieldTable out = table;
    const Axis& ax = table.axis(dir);
    const double h = ax.step();
    for (std::size_t k = 0; k < table.node_count(); ++k) {
        auto ix = table.unravel(k);
        auto lo = ix, hi = ix;
        double span = 2.0 * h;
        if (ix[dir] == 0) {
            hi[dir] += 1;
            span = h;
        } else if (ix[dir] + 1 == ax.count) {
            lo[dir] -= 1;
            span = h;
        } else {
            lo[dir] -= 1;
            hi[dir] += 1;
        }
        const FieldValue a = table.at(table.index(hi[0], hi[1], hi[2], hi[3]));
        const FieldValue b = table.at(table.index(lo[0], lo[1], lo[2], lo[3]));
        out.set(k, (1.0 / span) * (a - b));
    }
    return out;
}

double gradient_weighted_norm(const FieldTable& table, double w) {
    double m = 0.0;
    for (int d = 0; d < 4; ++d) m = std::max(m, weighted_norm(grid_derivative(table, d), w));
    return m;
}

double drift_bound(const FieldTable& table) {
    const Axis& ta = table.axis(0);
    std::vector<double> layer(ta.count, 0.0);
    for (std::size_t k = 0; k < table.node_count(); ++k) {
        const FieldValue F = table.at(k);
        auto& v = layer[table.unravel(k)[0]];
        v = std::max(v, norm(F.E) + norm(F.B));
    }
    double fwd = 0.0, bwd = 0.0;
    for (std::size_t k = 0; k + 1 < ta.count; ++k) {
        const double contrib = (ta.node(k + 1) - ta.node(k)) * std::max(layer[k], layer[k + 1]);
        if (ta.node(k + 1) > 0.0) fwd += contrib;
        if (ta.node(k) < 0.0) bwd += contrib;
    }
    return std::max(fwd, bwd);
}

// ---------------------------------------------------------------- iteration

namespace {
constexpr double kMarginFloor = 1e-9;
}

RunResult run(const PicardConfig& cfg, const std::function<void(const IterateRecord&)>& on_iterate) {
    const QuadratureSpec& quad = cfg.quad;
    quad.validate();
    const InitialData data(cfg.R, cfg.amplitude, cfg.profile, quad.delta_lattice);
    RunResult res;
    if (data.Delta() > cfg.delta_threshold) {
        std::ostringstream os;
        os << "Delta = " << data.Delta() << " exceeds the smallness threshold "
           << cfg.delta_threshold << "; contraction is not guaranteed";
        res.warnings.push_back(os.str());
    }
    const double margin = quad.support_margin;
    const bool sym = quad.use_cube_symmetry && data.cube_symmetric();
    const bool chained = quad.domain_policy == DomainPolicy::Chained;
    std::vector<GridExtent> chain;
    if (chained) chain = domain_chain(quad, quad.max_iter, cfg.R, support_speed(cfg.R, margin));
    auto grid_of = [&](int n) {
        QuadratureSpec q = quad;
        if (chained) {
            const GridExtent& e = chain[n - 1];
            q.t_min = e.t_min;
            q.t_max = e.t_max;
            q.half_width = e.half_width;
            q.n_t = static_cast<int>(e.n_t);
            q.n_x = static_cast<int>(e.n_x);
        }
        return q;
    };

    std::shared_ptr<const FieldTable> prev;
    double first_norm = 0.0;
    double prev_delta = 0.0, prev_grad_delta = 0.0;
    int growth_streak = 0;
    for (int n = 1; n <= quad.max_iter; ++n) {
        const auto t0 = std::chrono::steady_clock::now();
        std::unique_ptr<Density> f;
        std::shared_ptr<const FieldFn> force;
        double drift = 0.0;
        if (n == 1) {
            f = std::make_unique<FreeStreamingDensity>(data, kMarginFloor);
            force = std::make_shared<NullField>();
        } else {
            drift = drift_bound(*prev);
            if (drift > margin) {
                std::ostringstream os;
                os << "field of iterate " << n - 1 << " can change momenta by up to " << drift
                   << ", more than support_margin = " << margin;
                throw SupportMarginExceeded(os.str());
            }
            force = std::make_shared<TableField>(prev);
            // momenta and foot points move by at most the drift bound, so it serves as the
            // support margin of this iterate
            f = std::make_unique<CharacteristicDensity>(data, force, quad,
                                                        std::max(drift, kMarginFloor));
        }
        BuildStats stats;
        const QuadratureSpec qn = grid_of(n);
        auto table = std::make_shared<const FieldTable>(
            build_field_table(*f, *force, qn, cfg.threads, sym, &stats));

        IterateRecord rec;
        rec.n = n;
        rec.field = table;
        rec.norm_w34 = weighted_norm(*table, 0.75);
        rec.norm_w1 = weighted_norm(*table, 1.0);
        rec.grad_norm_w1 = gradient_weighted_norm(*table, 1.0);
        rec.drift_bound = drift;
        rec.truncation_bound = chained ? 0.0 : rec.norm_w1 / (1.0 + quad.half_width);
        rec.nodes_computed = stats.nodes_computed;
        rec.sphere_nodes = stats.sphere_nodes;
        if (n == 1) {
            first_norm = rec.norm_w34;
            rec.delta_norm = rec.norm_w34;
            rec.grad_delta_norm = rec.grad_norm_w1;
        } else {
            FieldTable d = *table;
            if (table->same_grid(*prev)) {
                d = difference(*table, *prev);
            } else {
                FieldTable p = *table;
                fill_table(p, [&](double t, const Vec3& x) { return prev->interpolate(t, x); });
                d = difference(*table, p);
            }
            rec.delta_norm = weighted_norm(d, 0.75);
            rec.grad_delta_norm = gradient_weighted_norm(d, 1.0);
            if (prev_delta > 0.0) rec.contraction_ratio = rec.delta_norm / prev_delta;
            if (prev_grad_delta > 0.0) rec.grad_ratio = rec.grad_delta_norm / prev_grad_delta;
        }
        rec.converged = n >= quad.min_iter && rec.delta_norm <= quad.tolerance * first_norm;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.records.push_back(rec);
        if (on_iterate) on_iterate(rec);

        if (rec.converged) {
            res.converged = true;
            break;
        }
        growth_streak = (rec.contraction_ratio > 1.0) ? growth_streak + 1 : 0;
        if (growth_streak >= 2) {
            std::ostringstream os;
            os << "contraction ratio above 1 for two consecutive iterates (last "
               << rec.contraction_ratio << " at n = " << n << ")";
            throw NonContraction(os.str());
        }
        prev = table;
        prev_delta = rec.delta_norm;
        prev_grad_delta = rec.grad_delta_norm;
    }
    return res;
}

CharDiffSummary char_difference_diagnostics(const InitialData& data, const FieldFn& field_n,
                                            const FieldFn& field_m, double t_min, double t_max,
                                            int samples, std::uint64_t seed,
                                            const QuadratureSpec& quad) {
    CharDiffSummary s;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(t_min, t_max);
    std::uniform_real_distribution<double> ub(-data.R(), data.R());
    for (int k = 0; k < samples; ++k) {
        Vec3 x0, p0;
        do {
            x0 = {ub(rng), ub(rng), ub(rng)};
            p0 = {ub(rng), ub(rng), ub(rng)};
        } while (norm2(x0) + norm2(p0) >= data.R() * data.R());
        const double t = ut(rng);
        const Vec3 x = x0 + t * p_hat(p0);
        const CharResult a = backward_to_zero(t, x, p0, field_n, quad);
        const CharResult b = backward_to_zero(t, x, p0, field_m, quad);
        const double at = 1.0 + std::abs(t);
        s.sup_df = std::max(s.sup_df, std::abs(data(a.X, a.P) - data(b.X, b.P)) / std::pow(at, 0.25));
        s.sup_dX = std::max(s.sup_dX, norm(a.X - b.X) / at);
        s.sup_dP = std::max(s.sup_dP, norm(a.P - b.P));
        ++s.samples;
    }
    return s;
}

}  // namespace rvmret
