#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rvmret/core.hpp"
#include "rvmret/errors.hpp"
#include "rvmret/quadrature.hpp"

using namespace rvmret;

namespace {

// f^in transported freely, with a declared drift margin so the adapted rule is used
struct StreamDensity : Density {
    InitialData data;
    std::optional<double> margin;
    explicit StreamDensity(double A, std::optional<double> m = 0.05) : data(1.0, A), margin(m) {}
    double operator()(double t, const Vec3& x, const Vec3& p) const override {
        return data(x - t * p_hat(p), p);
    }
    double support_radius() const override { return 1.0; }
    std::optional<double> drift_margin() const override { return margin; }
    double scale() const override { return data.amplitude(); }
};

struct ConstDensity : Density {
    double operator()(double, const Vec3&, const Vec3&) const override { return 1.0; }
    double support_radius() const override { return 1.0; }
};

// independent closed form of the default profile
double bump(const std::array<double, 6>& z) {
    double s = 0.0;
    for (double c : z) s += c * c;
    return s >= 1.0 ? 0.0 : std::pow(1.0 - s, 3);
}

}  // namespace

TEST_CASE("p_hat examples and bounds") {
    const Vec3 z = p_hat({0, 0, 0});
    CHECK(z.x == 0.0);
    CHECK(z.y == 0.0);
    CHECK(z.z == 0.0);
    const Vec3 v = p_hat({1, 0, 0});
    CHECK(v.x == doctest::Approx(0.70710678).epsilon(1e-8));
    CHECK(v.y == 0.0);
    CHECK(norm(p_hat({1e6, 0, 0})) < 1.0);
    CHECK(norm(p_hat({5e5, -5e5, 7e5})) < 1.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const Vec3 p{n(rng), n(rng), n(rng)};
        const Vec3 a = p_hat(p), b = p_hat(-p);
        CHECK(norm(a) < 1.0);
        CHECK(a.x == -b.x);
        CHECK(a.y == -b.y);
        CHECK(a.z == -b.z);
    }
}

TEST_CASE("a_of_beta examples and monotonicity") {
    CHECK(a_of_beta(0.0) == 0.0);
    CHECK(a_of_beta(2.0) == doctest::Approx(0.89442719).epsilon(1e-8));
    const double big = a_of_beta(1e9);
    CHECK(big > 0.999);
    CHECK(big < 1.0);
    double prev = -1.0;
    for (int i = 0; i < 200; ++i) {
        const double a = a_of_beta(0.05 * i);
        CHECK(a > prev);
        CHECK(a < 1.0);
        prev = a;
    }
    CHECK_THROWS(a_of_beta(-1.0));
}

TEST_CASE("eval_initial support and peak") {
    const InitialData d(1.0, 2.5);
    CHECK(eval_initial(d, {0, 0, 0}, {0, 0, 0}) == 2.5);
    CHECK(eval_initial(d, {0.6, 0, 0}, {0, 0.8, 0}) == 0.0);
    CHECK(eval_initial(d, {1.0, 0, 0}, {0, 0, 0}) == 0.0);
    CHECK(eval_initial(d, {2.0, 1.0, 0}, {0, 0, 0}) == 0.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 x{u(rng), u(rng), u(rng)}, p{u(rng), u(rng), u(rng)};
        const double v = eval_initial(d, x, p);
        CHECK(v >= 0.0);
        if (norm2(x) + norm2(p) >= 1.0) CHECK(v == 0.0);
    }
    CHECK_THROWS_AS(InitialData(0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(InitialData(1.0, 1.0, "gaussian"), ConfigError);
}

TEST_CASE("second derivative at origin matches finite differences of the closed form") {
    const InitialData d(1.0, 1.0);
    const double h = 1e-4;
    const double fd = (bump({h, 0, 0, 0, 0, 0}) - 2.0 * bump({0, 0, 0, 0, 0, 0}) +
                       bump({-h, 0, 0, 0, 0, 0})) /
                      (h * h);
    const double an = d.derivatives({0, 0, 0}, {0, 0, 0}).hess[0][0];
    CHECK(std::abs(an - fd) <= 1e-6 * std::abs(fd));
}

TEST_CASE("gradient and Hessian agree with finite differences at random points") {
    const double R = 1.3, A = 0.7;
    const InitialData d(R, A);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const double h = 1e-5;
    for (int s = 0; s < 50; ++s) {
        std::array<double, 6> z{};
        for (auto& c : z) c = u(rng);
        auto F = [&](std::array<double, 6> q) {
            return d({q[0], q[1], q[2]}, {q[3], q[4], q[5]});
        };
        const PhaseDerivatives pd = d.derivatives({z[0], z[1], z[2]}, {z[3], z[4], z[5]});
        for (int i = 0; i < 6; ++i) {
            auto zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            CHECK(pd.grad[i] == doctest::Approx((F(zp) - F(zm)) / (2 * h)).epsilon(1e-6));
            for (int k = 0; k < 6; ++k) {
                auto a = z, b = z, c = z, e = z;
                a[i] += h, a[k] += h;
                b[i] += h, b[k] -= h;
                c[i] -= h, c[k] += h;
                e[i] -= h, e[k] -= h;
                const double fd = (F(a) - F(b) - F(c) + F(e)) / (4 * h * h);
                CHECK(std::abs(pd.hess[i][k] - fd) <= 1e-4 * (1.0 + std::abs(fd)));
            }
        }
    }
}

TEST_CASE("finite-difference Hessian of the profile stays bounded near the support edge") {
    const InitialData d(1.0, 1.0);
    const double h = 1e-3;
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double r = 0.9 + 0.2 * i / 200.0;
        const double fd = (d({r + h, 0, 0}, {}) - 2 * d({r, 0, 0}, {}) + d({r - h, 0, 0}, {})) / (h * h);
        worst = std::max(worst, std::abs(fd));
    }
    CHECK(std::isfinite(worst));
    CHECK(worst < 10.0);
}

TEST_CASE("Delta lattice estimate against the analytic sup-norm sum") {
    // sup|f|=1; sup|d_i f| = max_z 6 z (1-z^2)^2; sup|d_ii f| = 6 (at origin); sup|d_ik f| = 3
    double s1 = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const double z = i / 100000.0;
        s1 = std::max(s1, 6.0 * z * (1 - z * z) * (1 - z * z));
    }
    const double analytic = 1.0 + 6.0 * s1 + 6.0 * 6.0 + 15.0 * 3.0;
    const InitialData d(1.0, 1.0);
    CHECK(d.Delta() <= analytic * (1.0 + 1e-12));
    CHECK(d.Delta() >= 0.99 * analytic);
    const InitialData half(1.0, 0.5);
    CHECK(half.Delta() == doctest::Approx(0.5 * d.Delta()));
}

TEST_CASE("sources of zero density vanish") {
    QuadratureSpec q;
    const ZeroDensity z;
    const Sources s = sources(1.0, {0.2, 0, 0}, z, q);
    CHECK(s.rho == 0.0);
    CHECK(norm(s.j) == 0.0);
}

TEST_CASE("rho at the origin matches a radial quadrature oracle") {
    // rho(0, 0) = 4 pi int_0^1 (1 - r^2)^3 r^2 dr
    const double oracle =
        4.0 * std::numbers::pi *
        integrate_adaptive([](double r) { return std::pow(1 - r * r, 3) * r * r; }, 0.0, 1.0, 1e-14)
            .value;
    QuadratureSpec q;
    q.momentum_nodes = 24;
    const StreamDensity f(1.0);
    const Sources s = sources(0.0, {0, 0, 0}, f, q);
    CHECK(s.rho == doctest::Approx(oracle).epsilon(2e-4));
    CHECK(norm(s.j) <= 1e-14);

    // default 8-node rules land within a few percent
    QuadratureSpec d8;
    CHECK(sources(0.0, {0, 0, 0}, f, d8).rho == doctest::Approx(oracle).epsilon(0.03));
    d8.momentum_rule = MomentumRuleKind::Box;
    const StreamDensity fb(1.0, std::nullopt);
    const Sources sb = sources(0.0, {0, 0, 0}, fb, d8);
    CHECK(sb.rho == doctest::Approx(oracle).epsilon(0.05));
    CHECK(norm(sb.j) <= 1e-14);
}

TEST_CASE("current is bounded by the density") {
    QuadratureSpec q;
    const StreamDensity f(1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 200; ++i) {
        const double t = u(rng);
        const Vec3 x{u(rng), u(rng), u(rng)};
        const Sources s = sources(t, x, f, q);
        CHECK(s.rho >= -1e-14);
        CHECK(norm(s.j) <= s.rho + 1e-14);
    }
}

TEST_CASE("adapted and box rules agree on transported densities") {
    QuadratureSpec q;
    q.momentum_nodes = 16;
    const StreamDensity fa(1.0);
    const StreamDensity fb(1.0, std::nullopt);
    QuadratureSpec qb = q;
    qb.momentum_rule = MomentumRuleKind::Box;
    qb.momentum_nodes = 40;
    for (double t : {0.5, 1.5}) {
        const Vec3 x{0.3 * t, 0.1, -0.2};
        const double ra = sources(t, x, fa, q).rho;
        const double rb = sources(t, x, fb, qb).rho;
        CHECK(ra == doctest::Approx(rb).epsilon(2e-2));
    }
}

TEST_CASE("box rule reports densities that reach the box boundary") {
    QuadratureSpec q;
    q.momentum_rule = MomentumRuleKind::Box;
    const ConstDensity c;
    CHECK_THROWS_AS(sources(0.0, {0, 0, 0}, c, q), QuadratureDomainViolation);
}

TEST_CASE("adapted rule drops points outside the transported support") {
    QuadratureSpec q;
    std::vector<MomentumNode> nodes;
    momentum_nodes(q, 1.0, 0.05, 0.0, {1.5, 0, 0}, nodes);
    CHECK(nodes.empty());
    momentum_nodes(q, 1.0, 0.05, 2.0, {10.0, 0, 0}, nodes);
    CHECK(nodes.empty());
    momentum_nodes(q, 1.0, 0.05, 2.0, {1.0, 0, 0}, nodes);
    CHECK(!nodes.empty());
    for (const auto& nd : nodes) {
        CHECK(norm(nd.p) < 1.05);
        CHECK(nd.w > 0.0);
    }
}

TEST_CASE("quadrature spec validation") {
    QuadratureSpec q;
    CHECK_NOTHROW(q.validate());
    q.n_t = 1;
    CHECK_THROWS_AS(q.validate(), ConfigError);
}

TEST_CASE("Gauss-Legendre and adaptive Gauss-Kronrod") {
    const GaussRule& g = gauss_legendre(5);
    double s = 0.0, m4 = 0.0;
    for (int i = 0; i < 5; ++i) {
        s += g.weights[i];
        m4 += g.weights[i] * std::pow(g.nodes[i], 8);
    }
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m4 == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
    const auto r = integrate_adaptive([](double x) { return std::abs(x - 0.3); }, -1.0, 1.0);
    CHECK(r.value == doctest::Approx(0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7).epsilon(1e-12));
    CHECK(integrate_adaptive([](double x) { return x; }, 1.0, 0.0).value ==
          doctest::Approx(-0.5));
}
