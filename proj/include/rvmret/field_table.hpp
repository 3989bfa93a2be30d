#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rvmret/characteristics.hpp"
#include "rvmret/core.hpp"
#include "rvmret/vec3.hpp"

namespace rvmret {

/// Uniform axis with `count` nodes from min to max inclusive.
struct Axis {
    double min = 0.0;
    double max = 0.0;
    std::uint64_t count = 0;

    double step() const { return (max - min) / static_cast<double>(count - 1); }
    double node(std::size_t i) const {
        return i + 1 == count ? max : min + static_cast<double>(i) * step();
    }
    bool operator==(const Axis&) const = default;
};

/// Space-time samples of (E, B) on a tensor grid (t, x1, x2, x3), stored row-major with
/// the six components (E1, E2, E3, B1, B2, B3) innermost. Interpolation is linear in t
/// and trilinear in x; the field is zero outside the grid.
class FieldTable {
public:
    static constexpr int kComponents = 6;

    FieldTable() = default;
    FieldTable(const Axis& t, const Axis& x1, const Axis& x2, const Axis& x3);
    /// Grid [t_min, t_max] x [-L, L]^3 with n_t x n_x^3 nodes, all values zero.
    static FieldTable from_spec(const QuadratureSpec& quad);

    const Axis& axis(int k) const { return axes_[k]; }
    const std::array<Axis, 4>& axes() const { return axes_; }
    std::size_t node_count() const { return values_.size() / kComponents; }
    bool same_grid(const FieldTable& o) const { return axes_ == o.axes_; }

    std::size_t index(std::size_t it, std::size_t i, std::size_t j, std::size_t k) const {
        return ((it * axes_[1].count + i) * axes_[2].count + j) * axes_[3].count + k;
    }
    /// Inverse of index().
    std::array<std::size_t, 4> unravel(std::size_t node) const;

    FieldValue at(std::size_t node) const;
    void set(std::size_t node, const FieldValue& v);
    double node_t(std::size_t node) const { return axes_[0].node(unravel(node)[0]); }
    Vec3 node_x(std::size_t node) const;

    /// Within the grid up to a relative rounding tolerance.
    bool contains(double t, const Vec3& x) const;
    FieldValue interpolate(double t, const Vec3& x) const;

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    /// Binary layout: "RVMFTAB\0", u32 version = 1, 4 x (f64 min, f64 max, u64 count),
    /// u64 ncomp = 6, then ncomp * nodes f64 values; all little-endian.
    void write(const std::string& path) const;
    static FieldTable read(const std::string& path);

private:
    std::array<Axis, 4> axes_{};
    std::vector<double> values_;
};

/// Node-wise a - b on identical grids.
FieldTable difference(const FieldTable& a, const FieldTable& b);

/// Fills every node from fn(t, x).
void fill_table(FieldTable& table, const std::function<FieldValue(double, const Vec3&)>& fn);

/// A FieldTable viewed as a FieldFn with zero-outside policy.
class TableField final : public FieldFn {
public:
    explicit TableField(std::shared_ptr<const FieldTable> table) : table_(std::move(table)) {}
    FieldValue operator()(double t, const Vec3& x) const override { return table_->interpolate(t, x); }
    FieldDomain domain() const override;
    const FieldTable& table() const { return *table_; }

private:
    std::shared_ptr<const FieldTable> table_;
};

}  // namespace rvmret
