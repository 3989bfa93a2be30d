#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rvmret/vec3.hpp"

namespace rvmret {

/// Relativistic velocity p / sqrt(1 + |p|^2).
inline Vec3 p_hat(const Vec3& p) { return p / std::sqrt(1.0 + norm2(p)); }

inline double gamma_of(const Vec3& p) { return std::sqrt(1.0 + norm2(p)); }

/// Maximal speed of a particle with momentum bound beta.
double a_of_beta(double beta);

enum class MomentumRuleKind {
    Adapted,  // Gauss-Legendre in velocity space over the transported support box
    Box,      // Gauss-Legendre over [-2R, 2R]^3 in momentum
};

enum class DomainPolicy { Fixed, Chained };

/// Every discretization choice of a run.
struct QuadratureSpec {
    // momentum integration
    int momentum_nodes = 8;
    MomentumRuleKind momentum_rule = MomentumRuleKind::Adapted;
    double box_boundary_tol = 1e-12;  // relative to the density scale

    // sphere around the probe point
    int angular_nodes_theta = 8;
    int angular_nodes_phi = 16;
    int radial_nodes = 4;
    double radial_panel = 0.5;

    // characteristics
    double ode_max_step = 0.02;
    int ode_min_steps = 400;
    double ode_tol = 1e-8;

    // finite differences
    double fd_source_step = 1e-3;
    double fd_field_step = 1e-2;
    double fd_jacobian_step = 1e-4;

    // support handling
    double support_margin = 0.05;
    double support_threshold = 1e-12;  // relative to the amplitude
    int delta_lattice = 17;

    // field grid
    double t_min = -4.0;
    double t_max = 4.0;
    double half_width = 6.0;
    int n_t = 33;
    int n_x = 25;

    // Picard iteration
    double tolerance = 1e-3;
    int max_iter = 3;
    int min_iter = 1;
    bool use_cube_symmetry = true;
    DomainPolicy domain_policy = DomainPolicy::Fixed;
    double memory_ceiling_mb = 2048.0;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// 6-vector derivative bundle of a scalar function of (x, p).
struct PhaseDerivatives {
    double value = 0.0;
    std::array<double, 6> grad{};                    // (d/dx1..dx3, d/dp1..dp3)
    std::array<std::array<double, 6>, 6> hess{};
};

/// Compactly supported C^2 initial density f^in(x, p).
class InitialData {
public:
    /// profile "cubic-bump": amplitude * (1 - (|x|^2 + |p|^2) / R^2)^3 inside the ball.
    InitialData(double R, double amplitude, std::string profile = "cubic-bump",
                int delta_lattice = 17);

    double R() const { return R_; }
    double amplitude() const { return amplitude_; }
    const std::string& profile() const { return profile_; }
    /// Sum over |mu| <= 2 of sup |d^mu f^in|, sampled on a lattice.
    double Delta() const { return delta_; }
    /// The profile is invariant under x -> Qx, p -> Qp for signed permutations Q.
    bool cube_symmetric() const { return true; }

    double operator()(const Vec3& x, const Vec3& p) const;
    PhaseDerivatives derivatives(const Vec3& x, const Vec3& p) const;

private:
    double R_;
    double amplitude_;
    std::string profile_;
    double delta_;
};

double eval_initial(const InitialData& data, const Vec3& x, const Vec3& p);

/// Lattice estimate of Delta for amplitude 1 (Delta is linear in the amplitude).
double estimate_unit_delta(const std::string& profile, double R, int lattice);

/// Phase-space density f(t, x, p).
class Density {
public:
    virtual ~Density() = default;
    virtual double operator()(double t, const Vec3& x, const Vec3& p) const = 0;
    /// Support radius R of the initial data.
    virtual double support_radius() const = 0;
    /// Bound m with |P(s) - p| <= m along every characteristic reaching the support.
    /// When set, f(t, x, p) != 0 implies |p| < R + m and |x - p_hat(p) t| < R + |t| m.
    virtual std::optional<double> drift_margin() const { return std::nullopt; }
    /// Speed c with f(t, x, .) = 0 for |x| > R + c |t|.
    virtual double spatial_speed() const;
    /// Amplitude scale for support thresholds.
    virtual double scale() const { return 1.0; }
    /// True when f vanishes identically.
    virtual bool is_zero() const { return false; }
};

class ZeroDensity final : public Density {
public:
    explicit ZeroDensity(double R = 1.0) : R_(R) {}
    double operator()(double, const Vec3&, const Vec3&) const override { return 0.0; }
    double support_radius() const override { return R_; }
    bool is_zero() const override { return true; }

private:
    double R_;
};

struct MomentumNode {
    Vec3 p;
    Vec3 v;  // p_hat(p)
    double w;
};

/// Momentum quadrature nodes for the density at (t, x). May return no nodes when
/// the declared support hint rules out the point. The adapted rule needs a margin
/// and falls back to the box rule without one.
void momentum_nodes(const QuadratureSpec& quad, double R, std::optional<double> margin, double t,
                    const Vec3& x, std::vector<MomentumNode>& out);

/// Spatial support radius bound of f(t, .) given the declared hint: |x| <= R + c |t|.
double support_speed(double R, std::optional<double> margin);

struct Sources {
    double rho = 0.0;
    Vec3 j;
};

/// rho = int f dp, j = int p_hat f dp.
Sources sources(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad);

/// Throws QuadratureDomainViolation if f is nonzero on sampled points of the
/// boundary of [-2R, 2R]^3 at (t, x).
void check_box_boundary(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad);

}  // namespace rvmret
