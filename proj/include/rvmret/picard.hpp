#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rvmret/characteristics.hpp"
#include "rvmret/core.hpp"
#include "rvmret/field_table.hpp"

namespace rvmret {

/// f1(t, x, p) = f^in(x - p_hat t, p).
double free_streaming_density(const InitialData& data, double t, const Vec3& x, const Vec3& p);

class FreeStreamingDensity final : public Density {
public:
    FreeStreamingDensity(InitialData data, std::optional<double> margin)
        : data_(std::move(data)), margin_(margin) {}
    double operator()(double t, const Vec3& x, const Vec3& p) const override {
        return free_streaming_density(data_, t, x, p);
    }
    double support_radius() const override { return data_.R(); }
    std::optional<double> drift_margin() const override { return margin_; }
    double scale() const override { return data_.amplitude(); }
    bool is_zero() const override { return data_.amplitude() == 0.0; }

private:
    InitialData data_;
    std::optional<double> margin_;
};

/// f(t, x, p) = f^in(X(0), P(0)) along characteristics of `field`.
/// With `reject` the declared margin is used to skip points that cannot be in the support.
class CharacteristicDensity final : public Density {
public:
    CharacteristicDensity(InitialData data, std::shared_ptr<const FieldFn> field,
                          QuadratureSpec quad, std::optional<double> margin, bool reject = true)
        : data_(std::move(data)), field_(std::move(field)), quad_(quad), margin_(margin),
          reject_(reject && margin.has_value()) {}
    double operator()(double t, const Vec3& x, const Vec3& p) const override;
    double support_radius() const override { return data_.R(); }
    std::optional<double> drift_margin() const override { return margin_; }
    double scale() const override { return data_.amplitude(); }
    bool is_zero() const override { return data_.amplitude() == 0.0; }
    const FieldFn& field() const { return *field_; }

private:
    InitialData data_;
    std::shared_ptr<const FieldFn> field_;
    QuadratureSpec quad_;
    std::optional<double> margin_;
    bool reject_;
};

/// f_{n+1}(t, x, p) from the previous field table.
double density_from_table(const InitialData& data, double t, const Vec3& x, const Vec3& p,
                          const FieldTable& table_prev, const QuadratureSpec& quad);

struct GridExtent {
    double t_min = 0.0;
    double t_max = 0.0;
    double half_width = 0.0;
    std::uint64_t n_t = 0;
    std::uint64_t n_x = 0;
    double megabytes = 0.0;
};

/// Grid extents per iterate (index 0 = first iterate). The last entry is the configured
/// grid; earlier ones grow by the cone radius of the farthest probe so that every field
/// evaluation of iterate n reads iterate n-1 inside its extent. Node spacing is kept.
/// Throws InfeasibleBudget if any extent exceeds the memory ceiling.
std::vector<GridExtent> domain_chain(const QuadratureSpec& quad, int n_iter, double R, double a);

struct BuildStats {
    std::size_t nodes_total = 0;
    std::size_t nodes_computed = 0;
    std::size_t sphere_nodes = 0;
    double seconds = 0.0;
};

/// Evaluates the representation formula at every grid node. With `symmetric` only one
/// node per orbit of the signed-permutation group is computed and the rest are mapped
/// by E(Qx) = Q E(x), B(Qx) = det(Q) Q B(x); this requires a cube-symmetric density.
FieldTable build_field_table(const Density& f, const FieldFn& force, const QuadratureSpec& quad,
                             int threads, bool symmetric, BuildStats* stats = nullptr);

/// sup over nodes of (1 + |t| + |x|)(1 + |t - |x||)^w |F|.
double weighted_norm(const FieldTable& table, double w);

/// Grid derivative along axis dir (0 = t, 1..3 = x_i): central inside, one-sided at edges.
FieldTable grid_derivative(const FieldTable& table, int dir);

/// max over the four derivative directions of weighted_norm(D F, w).
double gradient_weighted_norm(const FieldTable& table, double w);

/// Bound on int |E| + |B| ds along any path inside the time window starting at s = 0,
/// from the per-layer maxima of the interpolated table.
double drift_bound(const FieldTable& table);

struct IterateRecord {
    int n = 0;
    std::shared_ptr<const FieldTable> field;
    double norm_w34 = 0.0;
    double norm_w1 = 0.0;
    double delta_norm = 0.0;  // ||F_n - F_{n-1}||_{3/4}, F_0 = 0
    double contraction_ratio = std::numeric_limits<double>::quiet_NaN();
    double grad_norm_w1 = 0.0;
    double grad_delta_norm = 0.0;  // ||D(F_n - F_{n-1})||_1
    double grad_ratio = std::numeric_limits<double>::quiet_NaN();
    double drift_bound = 0.0;
    double truncation_bound = 0.0;  // neglected |F| outside the grid from the weighted norm
    double seconds = 0.0;
    std::size_t nodes_computed = 0;
    std::size_t sphere_nodes = 0;
    bool converged = false;
};

struct PicardConfig {
    double R = 1.0;
    double amplitude = 1.0e-4;
    std::string profile = "cubic-bump";
    QuadratureSpec quad;
    int threads = 1;
    double delta_threshold = 0.05;
};

struct RunResult {
    std::vector<IterateRecord> records;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Picard iteration f1 -> F1 -> f2 -> F2 -> ... . on_iterate is called for each record as
/// soon as it is complete. Throws NonContraction when the contraction ratio exceeds 1 twice
/// in a row, SupportMarginExceeded when a field's drift bound exceeds the support margin.
RunResult run(const PicardConfig& config,
              const std::function<void(const IterateRecord&)>& on_iterate = {});

struct CharDiffSummary {
    double sup_df = 0.0;  // sup |f_n - f_m| / (1 + |t|)^{1/4}
    double sup_dX = 0.0;  // sup |X_n(0) - X_m(0)| / (1 + |t|)
    double sup_dP = 0.0;  // sup |P_n(0) - P_m(0)|
    int samples = 0;
};

/// Compares the characteristics of two fields (the ones transporting f_n and f_m) on
/// seeded samples (t, x, p) with (x - p_hat t, p) drawn in the initial support.
CharDiffSummary char_difference_diagnostics(const InitialData& data, const FieldFn& field_n,
                                            const FieldFn& field_m, double t_min, double t_max,
                                            int samples, std::uint64_t seed,
                                            const QuadratureSpec& quad);

}  // namespace rvmret
