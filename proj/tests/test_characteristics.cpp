#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "rvmret/characteristics.hpp"
#include "rvmret/errors.hpp"
#include "rvmret/quadrature.hpp"

using namespace rvmret;

namespace {

// smooth bounded test field
FieldValue swirl(double t, const Vec3& x) {
    const double s = 0.05 / (1.0 + 0.1 * norm2(x) + 0.05 * t * t);
    return {{s * std::cos(x.y), s * std::sin(x.z + t), s * 0.5},
            {s * 0.3, s * std::cos(x.x - t), s * std::sin(x.y)}};
}

struct BumpDensity : Density {
    double operator()(double t, const Vec3& x, const Vec3& p) const override {
        const double u = 1.0 - norm2(x - t * p_hat(p)) - norm2(p);
        return u > 0 ? u * u * u : 0.0;
    }
    double support_radius() const override { return 1.0; }
};

}  // namespace

TEST_CASE("free streaming is exact") {
    QuadratureSpec q;
    const NullField zero;
    const CharResult r = integrate_characteristic(0.0, {0, 0, 0}, {1, 0, 0}, zero, 2.0, q);
    CHECK(r.X.x == doctest::Approx(1.41421356).epsilon(1e-8));
    CHECK(r.X.y == 0.0);
    CHECK(r.P.x == 1.0);
    const CharResult b = backward_to_zero(3.0, {1, 2, 3}, {0.5, -1, 2}, zero, q);
    const Vec3 expect = Vec3{1, 2, 3} - 3.0 * p_hat({0.5, -1, 2});
    CHECK(norm(b.X - expect) <= 1e-15);
    CHECK(b.P.x == 0.5);
}

TEST_CASE("anchor time returns the input state") {
    QuadratureSpec q;
    const LambdaField f(swirl);
    const CharResult r = integrate_characteristic(1.3, {0.2, 0.1, 0}, {0.3, 0, 1}, f, 1.3, q);
    CHECK(r.X.x == 0.2);
    CHECK(r.P.z == 1.0);
    CHECK(r.steps_taken == 0);
}

TEST_CASE("constant electric field: hyperbolic motion") {
    QuadratureSpec q;
    const double e = 0.7;
    const ConstantField f({e, 0, 0}, {0, 0, 0});
    for (double s : {0.5, 2.0, -1.5}) {
        const CharResult r = integrate_characteristic(0.0, {0, 0, 0}, {0, 0, 0}, f, s, q);
        CHECK(r.P.x == doctest::Approx(e * s).epsilon(1e-12));
        const double X = (std::sqrt(1.0 + e * e * s * s) - 1.0) / e;
        CHECK(r.X.x == doctest::Approx(X).epsilon(1e-10));
        CHECK(std::abs(r.X.y) <= 1e-15);
        CHECK(norm(p_hat(r.P)) < 1.0);
    }
}

TEST_CASE("round trip and group property") {
    QuadratureSpec q;
    const LambdaField f(swirl);
    const Vec3 x{0.4, -0.3, 0.2}, p{0.6, 0.1, -0.4};
    const CharResult fwd = integrate_characteristic(0.0, x, p, f, 2.5, q);
    const CharResult back = integrate_characteristic(2.5, fwd.X, fwd.P, f, 0.0, q);
    CHECK(norm(back.X - x) <= 10 * q.ode_tol);
    CHECK(norm(back.P - p) <= 10 * q.ode_tol);
    const CharResult a = integrate_characteristic(0.0, x, p, f, 1.0, q);
    const CharResult b = integrate_characteristic(1.0, a.X, a.P, f, 2.5, q);
    CHECK(norm(b.X - fwd.X) <= 10 * q.ode_tol);
    CHECK(norm(b.P - fwd.P) <= 10 * q.ode_tol);
    CHECK(fwd.est_local_error <= q.ode_tol);
}

TEST_CASE("momentum change under an FSC-type decaying field is bounded by the force integral") {
    QuadratureSpec q;
    const double C = 0.1;
    const LambdaField f([C](double s, const Vec3&) {
        const double g = C / ((1.0 + std::abs(s)) * (1.0 + std::abs(s)));
        return FieldValue{{g, 0.3 * g, 0}, {0, 0, g}};
    });
    for (double t : {1.0, 5.0, 20.0}) {
        const Vec3 p{0.2, -0.5, 0.1};
        const CharResult r = backward_to_zero(t, {0.3, 0.2, 0.0}, p, f, q);
        // oracle: integral of |E| + |B| along the path
        const double bound =
            integrate_adaptive([C](double s) {
                const double g = C / ((1.0 + s) * (1.0 + s));
                return g * std::sqrt(1.09) + g;
            }, 0.0, t).value;
        CHECK(norm(r.P - p) <= bound + 1e-12);
        CHECK(norm(r.P - p) <= 2.0 * C * std::sqrt(1.09));
    }
}

TEST_CASE("domain checks") {
    QuadratureSpec q;
    FieldDomain dom;
    dom.t_min = -1.0;
    dom.t_max = 1.0;
    dom.half_width = 1.0;
    const LambdaField f(swirl, dom);
    CHECK_THROWS_AS(backward_to_zero(2.0, {0, 0, 0}, {0, 0, 0}, f, q), DomainExceeded);
    CHECK_THROWS_AS(backward_to_zero(0.9, {0.9, 0, 0}, {-5, 0, 0}, f, q), DomainExceeded);
    CHECK_NOTHROW(backward_to_zero(0.5, {0.1, 0, 0}, {0.1, 0, 0}, f, q));
}

TEST_CASE("zero-outside fields use free flight outside the time window") {
    QuadratureSpec q;
    FieldDomain dom;
    dom.t_min = 0.0;
    dom.t_max = 1.0;
    dom.half_width = 100.0;
    dom.zero_outside = true;
    const double e = 0.4;
    const LambdaField f([&](double s, const Vec3& x) {
        return dom.contains(s, x) ? FieldValue{{e, 0, 0}, {}} : FieldValue{};
    }, dom);
    // starts at t = 3 with p = (e, 0, 0); backward: free flight to 1, then decelerate to 0
    const CharResult r = backward_to_zero(3.0, {0, 0, 0}, {e, 0, 0}, f, q);
    CHECK(r.P.x == doctest::Approx(0.0).epsilon(1e-12));
    const double free = 2.0 * e / std::sqrt(1 + e * e);
    const double accel = (std::sqrt(1.0 + e * e) - 1.0) / e;
    CHECK(r.X.x == doctest::Approx(-(free + accel)).epsilon(1e-10));
    // entirely outside the window
    const CharResult o = integrate_characteristic(-1.0, {0, 0, 0}, {1, 0, 0}, f, -3.0, q);
    CHECK(o.steps_taken == 0);
    CHECK(o.X.x == doctest::Approx(-2.0 / std::sqrt(2.0)));
}

TEST_CASE("tolerance failure is reported") {
    QuadratureSpec q;
    q.ode_min_steps = 2;
    q.ode_max_step = 5.0;
    q.ode_tol = 1e-14;
    const LambdaField f([](double s, const Vec3& x) {
        return FieldValue{{std::sin(5 * s) + x.y, std::cos(3 * x.x), 0}, {0, 0, 1}};
    });
    CHECK_THROWS_AS(backward_to_zero(4.0, {0, 0, 0}, {1, 0, 0}, f, q), ToleranceNotMet);
}

TEST_CASE("flow Jacobian") {
    QuadratureSpec q;
    const NullField zero;
    CHECK(flow_jacobian(2.0, {0.1, 0, 0}, {0.5, 0.2, 0}, zero, q) ==
          doctest::Approx(1.0).epsilon(1e-9));
    const LambdaField f(swirl);
    CHECK(flow_jacobian(0.0, {0, 0, 0}, {1, 1, 1}, f, q) == 1.0);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 10; ++i) {
        const Vec3 x{u(rng), u(rng), u(rng)}, p{u(rng), u(rng), u(rng)};
        const double t = 2.0 + 2.0 * u(rng);
        CHECK(std::abs(flow_jacobian(t, x, p, f, q) - 1.0) < 1e-3);
    }
}

TEST_CASE("flow Jacobian agrees with volume tracking of a sample cloud") {
    QuadratureSpec q;
    const LambdaField f([](double s, const Vec3& x) {
        // strong enough to shear the cloud noticeably
        return FieldValue{{0.5 * std::sin(x.y + s), 0.4 * std::cos(x.z), 0.3 * x.x},
                          {0.2, 0.5 * std::sin(x.x), 0.1}};
    });
    const Vec3 x0{0.2, -0.1, 0.3}, p0{0.4, 0.2, -0.3};
    const double t = 2.0;
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n(0.0, 1e-3);
    const int N = 400;
    Eigen::MatrixXd in(N, 6), out(N, 6);
    for (int k = 0; k < N; ++k) {
        Vec3 x = x0, p = p0;
        for (int i = 0; i < 3; ++i) {
            x[i] += n(rng);
            p[i] += n(rng);
        }
        const CharResult r = backward_to_zero(t, x, p, f, q);
        for (int i = 0; i < 3; ++i) {
            in(k, i) = x[i];
            in(k, i + 3) = p[i];
            out(k, i) = r.X[i];
            out(k, i + 3) = r.P[i];
        }
    }
    auto cov = [](const Eigen::MatrixXd& m) {
        const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
        return Eigen::MatrixXd(c.transpose() * c);
    };
    const double ratio = std::sqrt(cov(out).determinant() / cov(in).determinant());
    const double jac = flow_jacobian(t, x0, p0, f, q);
    CHECK(ratio == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(jac == doctest::Approx(ratio).epsilon(1e-2));
    CHECK(std::abs(jac - 1.0) < 1e-3);
}

TEST_CASE("maximum momentum estimate") {
    QuadratureSpec q;
    const ZeroDensity z;
    CHECK(max_momentum_estimate(1.0, z, q) == 0.0);
    const BumpDensity b;
    const double p0 = max_momentum_estimate(0.0, b, q);
    CHECK(p0 <= 1.0);
    CHECK(p0 > 0.5);
    CHECK(max_momentum_estimate(3.0, b, q) <= 2.0);
}
