#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rvmret/characteristics.hpp"
#include "rvmret/core.hpp"
#include "rvmret/field_table.hpp"

namespace rvmret {

// ---------------------------------------------------------------- energies

struct EnergyReport {
    double t = 0.0;
    double kinetic = 0.0;
    double field_energy = 0.0;
    double total = 0.0;
    double field_tail_bound = 0.0;  // error budget for the field energy outside the cube
};

struct EnergyOptions {
    int spatial_nodes = 16;        // Gauss-Legendre nodes per axis over the support cube
    double field_half_width = 0;   // cube for the field energy; 0 = field domain half-width
    int field_nodes = 25;          // trapezoid nodes per axis
};

/// Kinetic energy int int sqrt(1 + p^2) f over the support box and field energy
/// (1/2) int |E|^2 + |B|^2 over a cube, with an |F| ~ r^-2 tail bound outside it.
EnergyReport energies(double t, const Density& f, const FieldFn& field, const QuadratureSpec& quad,
                      const EnergyOptions& opt = {});

// ---------------------------------------------------------------- radiation

struct RadiationOptions {
    int theta_nodes = 16;
    int phi_nodes = 32;
    int time_nodes = 16;
};

struct RadiationReport {
    std::vector<double> radii;
    std::vector<double> incoming;  // -int_{v1}^{v2} dv int_{|x|=r} (E ^ B).w at t = v - r
    std::vector<double> outgoing;  // int_{u1}^{u2} du int_{|x|=r} (E ^ B).w at t = u + r
    double incoming_limit = 0.0;   // fit a + b/r, value a
    double outgoing_limit = 0.0;
    bool incoming_decreasing = false;  // |incoming| nonincreasing in r
};

/// Poynting flux through spheres |x| = r over advanced-time (incoming) and retarded-time
/// (outgoing) windows. Throws DomainExceeded if a sphere or time leaves the field domain.
RadiationReport incoming_radiation(double v1, double v2, double u1, double u2,
                                   const std::vector<double>& radii, const FieldFn& field,
                                   const RadiationOptions& opt = {});

/// Analytic outgoing test field: E = g(t - r)/r (e3 ^ w), B = w ^ E.
FieldValue outgoing_pulse(double t, const Vec3& x, const std::function<double(double)>& g);

// ---------------------------------------------------------------- free streaming condition

struct FscReport {
    double eta_measured = 0.0;  // smallest eta satisfying both inequalities on the sample
    double eta_field = 0.0;
    double eta_gradient = 0.0;
    double eta = 0.0;
    double alpha = 0.0;
    int samples = 0;
    bool pass = false;
};

using FieldGradientFn = std::function<std::array<FieldValue, 4>(double, const Vec3&)>;

/// |F| <= eta (1+|t|+|x|)^-alpha (1+R+|t|-|x|)^-alpha and
/// |d_x F| <= eta (1+|t|+|x|)^-alpha (1+R+|t|-|x|)^{-alpha-1} for |x| <= R + |t|.
/// Sample points outside that region are skipped. The gradient norm is the Frobenius norm of
/// the 6 x 3 spatial derivative.
FscReport fsc_check(const FieldFn& field, const FieldGradientFn& gradient, double R, double eta,
                    double alpha, const std::vector<std::pair<double, Vec3>>& sample);

// ---------------------------------------------------------------- decay fit

struct DecayProbe {
    double t = 0.0;
    double x_norm = 0.0;
    double value = 0.0;  // |F| or |DF|
};

struct DecayFit {
    double C = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double residual = 0.0;  // max |log|F| - fitted log|F||
    int used = 0;           // probes with value > 1e-12 * max value
};

/// Least squares in log space: log|F| = log C - alpha1 log(1+|t|+|x|) - alpha2 log(1+|t-|x||).
/// Throws IllConditioned if the probes do not span a factor 4 in both weights or the design
/// matrix is rank-deficient.
DecayFit decay_fit(const std::vector<DecayProbe>& probes);

// ---------------------------------------------------------------- conservation

struct LpRow {
    double t = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double drift_l1 = 0.0;  // relative to the first row
    double drift_l2 = 0.0;
    double drift_linf = 0.0;
};

struct LpOptions {
    int spatial_nodes = 16;
    int linf_lattice = 9;  // initial (x, p) lattice per axis pair, transported freely
};

/// L^1, L^2 norms by quadrature over the support box and L^inf as the max over quadrature
/// nodes and freely transported initial lattice points; drifts relative to t_list[0].
std::vector<LpRow> lp_conservation(const Density& f, const std::vector<double>& t_list,
                                   const QuadratureSpec& quad, const LpOptions& opt = {});

/// Momentum-lattice measure of {p : f(t, x, p) > support_threshold * scale}.
double support_volume(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad,
                      int lattice = 32);

// ---------------------------------------------------------------- uniqueness class

struct UniquenessReport {
    std::vector<double> t;   // grid times, ascending
    std::vector<double> l2;  // ||F(t, .)||_{L^2} over the spatial grid
    bool pass = false;       // nonincreasing as t decreases over the negative-time layers
};

double l2_norm_at_layer(const FieldTable& table, std::size_t it);
UniquenessReport uniqueness_class_check(const FieldTable& table);

}  // namespace rvmret
