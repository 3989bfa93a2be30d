#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rvmret/diagnostics.hpp"
#include "rvmret/errors.hpp"
#include "rvmret/picard.hpp"
#include "rvmret/quadrature.hpp"

using namespace rvmret;
constexpr double pi = std::numbers::pi;

namespace {

QuadratureSpec small_quad() {
    QuadratureSpec q;
    q.momentum_nodes = 8;
    return q;
}

// pi^3/120 A for the cubic bump
double total_charge(double A) { return A * std::pow(pi, 3) / 120.0; }

}  // namespace

TEST_CASE("energies: zero and free-streaming kinetic energy") {
    const QuadratureSpec q = small_quad();
    const ZeroDensity zero(1.0);
    const NullField null;
    const EnergyReport z = energies(1.0, zero, null, q);
    CHECK(z.kinetic == 0.0);
    CHECK(z.field_energy == 0.0);
    CHECK(z.total == 0.0);

    const FreeStreamingDensity f(InitialData(1.0, 1.0), 1e-9);
    const double k0 = energies(0.0, f, null, q).kinetic;
    const double k3 = energies(3.0, f, null, q).kinetic;
    const double km = energies(-2.0, f, null, q).kinetic;
    CHECK(k0 > total_charge(1.0));  // gamma >= 1
    CHECK(k0 < 1.5 * total_charge(1.0));
    CHECK(k3 == doctest::Approx(k0).epsilon(5e-3));
    CHECK(km == doctest::Approx(k0).epsilon(5e-3));
}

TEST_CASE("field energy of a Coulomb field on a cube") {
    // E = Q x/|x|^3 outside |x| = 1, Q x inside (uniform ball)
    const double Q = 0.3;
    FieldDomain d;
    d.half_width = 6;
    const LambdaField F(
        [Q](double, const Vec3& x) {
            const double r = norm(x);
            return FieldValue{r <= 1 ? Q * x : (Q / (r * r * r)) * x, {}};
        },
        d);
    EnergyOptions o;
    o.field_nodes = 61;
    const QuadratureSpec q = small_quad();
    const EnergyReport e = energies(0.0, ZeroDensity(1.0), F, q, o);
    // ball of radius 6: 2 pi Q^2 (1/5 + 1 - 1/6), cube adds a little
    const double ball = 2 * pi * Q * Q * (0.2 + 1.0 - 1.0 / 6.0);
    CHECK(e.field_energy > ball * 0.99);
    CHECK(e.field_energy < ball + 2 * pi * Q * Q / 6.0);
    CHECK(e.field_tail_bound > 0);
    CHECK(e.field_tail_bound >= (2 * pi * Q * Q * (1.0 / 6.0)) * 0.99);
}

TEST_CASE("incoming radiation: zero field and an outgoing pulse") {
    auto g = [](double u) { return std::abs(u) < 1 ? std::pow(1 - u * u, 3) : 0.0; };
    const LambdaField pulse([&](double t, const Vec3& x) { return outgoing_pulse(t, x, g); }, {});
    const std::vector<double> radii{2, 3, 4, 5};
    const RadiationReport r = incoming_radiation(0.0, 1.0, -1.0, 1.0, radii, pulse);
    // int_{-1}^{1} (1-u^2)^6 du = 2048/3003
    const double out = 8 * pi / 3 * 2048.0 / 3003.0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        CHECK(std::abs(r.incoming[k]) <= 1e-12);
        CHECK(r.outgoing[k] == doctest::Approx(out).epsilon(1e-3));
    }
    CHECK(r.outgoing_limit == doctest::Approx(out).epsilon(1e-3));
    CHECK(std::abs(r.incoming_limit) <= 1e-12);

    // an incoming pulse has negative Poynting flux through the sphere: E_in > 0
    const LambdaField in_pulse(
        [&](double t, const Vec3& x) {
            const double rr = norm(x);
            if (rr == 0) return FieldValue{};
            const Vec3 w = x / rr;
            const Vec3 E = (g(t + rr) / rr) * cross(Vec3{0, 0, 1}, w);
            return FieldValue{E, cross(E, w)};
        },
        {});
    const RadiationReport ri = incoming_radiation(-1.0, 1.0, -1.0, 1.0, {2.0}, in_pulse);
    CHECK(ri.incoming[0] > 0.1);

    const NullField null;
    const RadiationReport z = incoming_radiation(0.0, 1.0, 0.0, 1.0, radii, null);
    CHECK(z.incoming[0] == 0.0);
    CHECK(z.outgoing[3] == 0.0);

    FieldTable T({-4, 4, 3}, {-6, 6, 3}, {-6, 6, 3}, {-6, 6, 3});
    const TableField tf(std::make_shared<FieldTable>(T));
    CHECK_THROWS_AS(incoming_radiation(0.0, 1.0, 0.0, 1.0, {5.0}, tf), DomainExceeded);
    CHECK_THROWS_AS(incoming_radiation(0.0, 1.0, 0.0, 1.0, {7.0}, tf), DomainExceeded);
    CHECK_NOTHROW(incoming_radiation(1.0, 2.0, -6.0, -5.0, {2.0, 3.0}, tf));
}

TEST_CASE("free streaming condition") {
    const double R = 1.0;
    std::vector<std::pair<double, Vec3>> sample;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 200; ++k) {
        const double t = 5 * u(rng);
        sample.push_back({t, (R + std::abs(t)) * 0.57 * Vec3{u(rng), u(rng), u(rng)}});
    }
    const NullField null;
    auto zero_grad = [](double, const Vec3&) { return std::array<FieldValue, 4>{}; };
    const FscReport z = fsc_check(null, zero_grad, R, 0.0, 1.0, sample);
    CHECK(z.pass);
    CHECK(z.eta_measured == 0.0);

    auto shape = [R](double t, const Vec3& x) {
        return 1.0 / ((1 + std::abs(t) + norm(x)) * (1 + R + std::abs(t) - norm(x)));
    };
    const LambdaField F([&](double t, const Vec3& x) { return FieldValue{{shape(t, x), 0, 0}, {}}; },
                        {});
    const FscReport r = fsc_check(F, zero_grad, R, 1.0 + 1e-12, 1.0, sample);
    CHECK(r.eta_field == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.pass);
    CHECK(r.samples > 100);
    CHECK_THROWS(fsc_check(F, zero_grad, R, 1.0, 0.5, sample));
}

TEST_CASE("decay fit recovers synthetic power laws") {
    std::vector<DecayProbe> p1, p2, flat;
    for (double t : {-8.0, -3.0, 0.0, 2.0, 5.0, 9.0})
        for (double x : {0.0, 1.5, 4.0, 7.0, 12.0}) {
            const double w1 = 1 + std::abs(t) + x, w2 = 1 + std::abs(t - x);
            p1.push_back({t, x, 0.3 * std::pow(w1, -1.0) * std::pow(w2, -1.0)});
            p2.push_back({t, x, 2.0 * std::pow(w1, -1.0) * std::pow(w2, -1.75)});
            flat.push_back({t, x, 0.5});
        }
    const DecayFit a = decay_fit(p1);
    CHECK(a.alpha1 == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(a.alpha2 == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(a.C == doctest::Approx(0.3).epsilon(1e-3));
    CHECK(a.residual <= 1e-9);
    const DecayFit b = decay_fit(p2);
    CHECK(b.alpha1 == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(b.alpha2 == doctest::Approx(1.75).epsilon(1e-3));
    const DecayFit c = decay_fit(flat);
    CHECK(std::abs(c.alpha1) <= 1e-9);
    CHECK(std::abs(c.alpha2) <= 1e-9);

    // all probes on t = |x| have w2 = 1: no span in the second weight
    std::vector<DecayProbe> cone;
    for (double x : {1.0, 2.0, 5.0, 10.0}) cone.push_back({x, x, 1.0 / x});
    CHECK_THROWS_AS(decay_fit(cone), IllConditioned);
    // w1 and w2 proportional: rank-deficient
    std::vector<DecayProbe> line;
    for (double t : {-1.0, -3.0, -7.0, -15.0}) line.push_back({t, 0.0, 1.0 / (1 - t)});
    CHECK_THROWS_AS(decay_fit(line), IllConditioned);
}

TEST_CASE("Lp conservation and support volume for free streaming") {
    const QuadratureSpec q = small_quad();
    const FreeStreamingDensity f(InitialData(1.0, 1.0), 1e-9);
    const auto rows = lp_conservation(f, {0.0, 2.0, -3.0}, q);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].l1 == doctest::Approx(total_charge(1.0)).epsilon(5e-3));
    CHECK(rows[0].linf == doctest::Approx(1.0).epsilon(1e-12));
    for (const LpRow& r : rows) {
        CHECK(r.drift_l1 <= 5e-3);
        CHECK(r.drift_l2 <= 1e-2);
        CHECK(r.drift_linf <= 1e-12);
    }
    const double ball = 4.0 / 3.0 * pi;
    const double v0 = support_volume(0.0, {0, 0, 0}, f, q);
    CHECK(v0 <= ball * 1.02);
    CHECK(v0 >= ball * 0.9);
    CHECK(support_volume(1.0, {0, 0, 0}, ZeroDensity(1.0), q) == 0.0);
    // |p_hat| <= 1/|t| at x = 0: volume shrinks like |t|^-3
    const double v4 = support_volume(4.0, {0, 0, 0}, f, q);
    const double v8 = support_volume(8.0, {0, 0, 0}, f, q);
    CHECK(std::log(v4 / v8) / std::log(2.0) == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("uniqueness class check") {
    FieldTable Z({-4, 4, 9}, {-6, 6, 13}, {-6, 6, 13}, {-6, 6, 13});
    const UniquenessReport z = uniqueness_class_check(Z);
    CHECK(z.pass);
    CHECK(z.l2[0] == 0.0);

    FieldTable T = Z;
    fill_table(T, [](double t, const Vec3& x) {
        const double r = norm(x);
        return FieldValue{{1.0 / ((1 + std::abs(t) + r) * (1 + std::abs(t - r))), 0, 0}, {}};
    });
    CHECK(uniqueness_class_check(T).pass);
    FieldTable fine({-4, 4, 5}, {-6, 6, 49}, {-6, 6, 49}, {-6, 6, 49});
    fill_table(fine, [](double t, const Vec3& x) {
        const double r = norm(x);
        return FieldValue{{1.0 / ((1 + std::abs(t) + r) * (1 + std::abs(t - r))), 0, 0}, {}};
    });
    const UniquenessReport u = uniqueness_class_check(fine);
    CHECK(u.pass);
    // bracket by radial integrals over the inscribed and circumscribed balls
    for (std::size_t it = 0; it < u.t.size(); ++it) {
        const double t = u.t[it];
        auto dens = [t](double r) {
            const double F = 1.0 / ((1 + std::abs(t) + r) * (1 + std::abs(t - r)));
            return 4 * pi * r * r * F * F;
        };
        const double in = std::sqrt(integrate_adaptive(dens, 0, 6).value);
        const double out = std::sqrt(integrate_adaptive(dens, 0, 6 * std::sqrt(3.0)).value);
        CHECK(u.l2[it] >= 0.97 * in);
        CHECK(u.l2[it] <= 1.03 * out);
    }
    // growing towards the past fails
    FieldTable G = Z;
    fill_table(G, [](double t, const Vec3&) { return FieldValue{{1.0 - t, 0, 0}, {}}; });
    CHECK_FALSE(uniqueness_class_check(G).pass);
}
