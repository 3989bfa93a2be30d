#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rvmret/characteristics.hpp"
#include "rvmret/core.hpp"
#include "rvmret/vec3.hpp"

namespace rvmret {

/// Kernels of the representation formula. a2 = d b / d p, rows = field component,
/// columns = momentum component.
struct KernelValue {
    Vec3 a1;
    Vec3 b;
    Mat3 a2{};
};

/// Electric kernels: a1 = (w + v)/((1+|p|^2)(1 + w.v)^2), b = (w + v)/(1 + w.v), v = p_hat(p).
KernelValue kernel_eval(const Vec3& omega, const Vec3& p);

/// Magnetic kernels obtained by the same perfect-derivative procedure applied to curl j:
/// a1 = (w ^ v)/((1+|p|^2)(1 + w.v)^2), b = (w ^ v)/(1 + w.v).
KernelValue kernel_eval_B(const Vec3& omega, const Vec3& p);

struct ConeDomain {
    double t = 0.0;
    Vec3 x;
    double r_max = 0.0;
    double a = 0.0;
};

/// Bounded past-cone region where f(t - |x-y|, y, .) can be nonzero for support speed a.
ConeDomain cone_domain(double t, const Vec3& x, double R, double a);

/// One node of the spherical rule centred at the probe point.
struct SphereNode {
    Vec3 omega;
    double r;
    double weight;  // angular weight * radial weight (no r^2 factor)
};

/// Nodes of the spherical product rule around x covering the region
/// |y| <= R + c |t - |x - y||, c < 1.
void sphere_nodes(double t, const Vec3& x, double R, double c, const QuadratureSpec& quad,
                  std::vector<SphereNode>& out);

/// Retarded field from the source integrals with finite-difference source derivatives.
FieldValue field_raw(double t, const Vec3& x, const Density& f, const QuadratureSpec& quad);

/// Retarded field from the kernel representation. `force` is the field whose Lorentz
/// force transports f (the previous iterate); pass a NullField for free streaming.
FieldValue field_repr(double t, const Vec3& x, const Density& f, const FieldFn& force,
                      const QuadratureSpec& quad);

/// field_repr exposed as a FieldFn.
class ReprField final : public FieldFn {
public:
    ReprField(const Density& f, const FieldFn& force, const QuadratureSpec& quad)
        : f_(f), force_(force), quad_(quad) {}
    FieldValue operator()(double t, const Vec3& x) const override {
        return field_repr(t, x, f_, force_, quad_);
    }

private:
    const Density& f_;
    const FieldFn& force_;
    QuadratureSpec quad_;
};

/// Central-difference derivatives (d/dt, d/dx1, d/dx2, d/dx3) of any field.
std::array<FieldValue, 4> field_gradient(const FieldFn& field, double t, const Vec3& x, double h);

std::array<FieldValue, 4> field_gradient(double t, const Vec3& x, const Density& f,
                                         const FieldFn& force, const QuadratureSpec& quad);

/// Smooth scalar g(t, y) with analytic first derivatives.
struct TestFunction {
    std::function<double(double, const Vec3&)> value;
    std::function<double(double, const Vec3&)> dt;
    std::function<Vec3(double, const Vec3&)> grad;
};

/// Max residual of the identities
///   d_t g = (T g - v.grad G) / (1 + w.v),
///   d_i g = d_i G + w_i (T g - v.grad G) / (1 + w.v),
/// where G(y) = g(t - |x - y|, y), T = d_t + v.grad, w = (y - x)/|y - x|, v = p_hat(p).
/// grad G is taken by fourth-order central differences.
double chain_rule_identity_residual(double t, const Vec3& x, const Vec3& y, const Vec3& p,
                                    const TestFunction& g);

}  // namespace rvmret
