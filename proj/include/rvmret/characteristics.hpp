#pragma once

#include <functional>
#include <limits>

#include "rvmret/core.hpp"
#include "rvmret/vec3.hpp"

namespace rvmret {

/// Declared validity region of a field: [t_min, t_max] x [-half_width, half_width]^3.
/// With zero_outside the field is defined everywhere and vanishes outside the box.
struct FieldDomain {
    double t_min = -std::numeric_limits<double>::infinity();
    double t_max = std::numeric_limits<double>::infinity();
    double half_width = std::numeric_limits<double>::infinity();
    bool zero_outside = false;

    bool contains(double t, const Vec3& x) const {
        return t >= t_min && t <= t_max && std::abs(x.x) <= half_width &&
               std::abs(x.y) <= half_width && std::abs(x.z) <= half_width;
    }
    bool bounded() const { return std::isfinite(t_min) || std::isfinite(t_max) || std::isfinite(half_width); }
};

/// Electromagnetic field (E, B)(t, x). Implementations must allow concurrent reads.
class FieldFn {
public:
    virtual ~FieldFn() = default;
    virtual FieldValue operator()(double t, const Vec3& x) const = 0;
    virtual FieldDomain domain() const { return {}; }
    virtual bool is_null() const { return false; }
};

class NullField final : public FieldFn {
public:
    FieldValue operator()(double, const Vec3&) const override { return {}; }
    bool is_null() const override { return true; }
};

class ConstantField final : public FieldFn {
public:
    ConstantField(const Vec3& E, const Vec3& B) : value_{E, B} {}
    FieldValue operator()(double, const Vec3&) const override { return value_; }

private:
    FieldValue value_;
};

class LambdaField final : public FieldFn {
public:
    using Fn = std::function<FieldValue(double, const Vec3&)>;
    explicit LambdaField(Fn fn, FieldDomain dom = {}) : fn_(std::move(fn)), dom_(dom) {}
    FieldValue operator()(double t, const Vec3& x) const override { return fn_(t, x); }
    FieldDomain domain() const override { return dom_; }

private:
    Fn fn_;
    FieldDomain dom_;
};

/// Lorentz force E + p_hat ^ B.
inline Vec3 lorentz_force(const FieldValue& F, const Vec3& p) { return F.E + cross(p_hat(p), F.B); }

struct CharResult {
    Vec3 X;
    Vec3 P;
    int steps_taken = 0;
    double est_local_error = 0.0;
};

/// Solve dX/ds = p_hat(P), dP/ds = E(s,X) + p_hat(P) ^ B(s,X) with (X,P)(t) = (x,p),
/// returning the state at s_target.
CharResult integrate_characteristic(double t, const Vec3& x, const Vec3& p, const FieldFn& field,
                                    double s_target, const QuadratureSpec& quad);

CharResult backward_to_zero(double t, const Vec3& x, const Vec3& p, const FieldFn& field,
                            const QuadratureSpec& quad);

/// Determinant of the finite-difference Jacobian of (x, p) -> (X(0), P(0)).
double flow_jacobian(double t, const Vec3& x, const Vec3& p, const FieldFn& field,
                     const QuadratureSpec& quad);

/// Largest |p| with f(t, x, p) above the support threshold over a deterministic sample:
/// an x lattice over the transported support box and, per x, a velocity lattice over
/// |v_i| <= a(3R) together with the momentum quadrature nodes.
double max_momentum_estimate(double t, const Density& f, const QuadratureSpec& quad,
                             int x_lattice = 7, int v_lattice = 13);

}  // namespace rvmret
