#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rvmret {

/// I_1^q, I_2^q: int dy |x-y|^{-n} (1 + |t - |x-y|| + |y|)^{-q} over R^3.
/// II^q: the same with n = 3 over |x-y| > 1.
enum class ConeFamily { I1, I2, II };

std::string family_name(ConeFamily f);
ConeFamily parse_family(const std::string& s);  // "I1", "I2", "II"

struct ConeIntegralQuery {
    ConeFamily family = ConeFamily::I2;
    double q = 3.0;
    double t = 0.0;
    double x_norm = 0.0;
};

/// Throws NonConvergent unless q is above the family threshold (3 for I1, 2 otherwise) and
/// std::invalid_argument unless x_norm >= 0.
void validate_query(const ConeIntegralQuery& query);

/// int_{a <= |x-y| <= b} dy |x-y|^{-n} g(t - |x-y|, |y|) reduced to
/// (2 pi / |x|) int_{t-b}^{t-a} dtau (t - tau)^{1-n} int_{||x|-t+tau|}^{|x|+t-tau} g(tau, lambda) lambda dlambda
/// and evaluated by nested adaptive Gauss-Kronrod. b must be finite.
/// Throws SingularAtOrigin for x_norm = 0.
double lemma_a_reduce(const std::function<double(double, double)>& g, double t, double x_norm,
                      double a_lo, double b_hi, int n);

/// The same shell integral by a 3-D product rule in spherical coordinates about x: composite
/// Gauss-Legendre in |x-y| with breaks at |x| and t, Gauss-Legendre in cos(theta) after
/// cos(theta) = 2 s^2 - 1, trapezoid in phi. `nodes` is the per-panel order in r and s.
double shell_integral_direct(const std::function<double(double, double)>& g, double t,
                             double x_norm, double a_lo, double b_hi, int n, int nodes = 32);

/// I_n^q(t, |x|) for n = 1, 2. Tails beyond a finite radius are bounded analytically and
/// truncated at relative 1e-8. Throws NonConvergent at or below the threshold.
double eval_I(const ConeIntegralQuery& query);

/// II^q(t, |x|).
double eval_II(double q, double t, double x_norm);

/// Dispatches on query.family.
double eval_cone(const ConeIntegralQuery& query);

/// Stated bound shape (1 + |t| + |x|)^{-1} (1 + |t - |x||)^{-e} with e = q - 3, q - 2, q - 5/4.
double bound_shape(ConeFamily family, double q, double t, double x_norm);

struct BoundSample {
    double t = 0.0;
    double x_norm = 0.0;
    double value = 0.0;
    double shape = 0.0;
    double ratio = 0.0;
};

struct BoundCheckReport {
    ConeFamily family = ConeFamily::I2;
    double q = 0.0;
    std::vector<BoundSample> samples;
    double fitted_constant = 0.0;     // sup of ratio
    double subsample_constant = 0.0;  // sup over the first half of the samples
    double max_t = 0.0;               // location of the sup
    double max_x = 0.0;
    bool finite = false;
    bool stable = false;
    bool inconclusive = false;  // fewer than 2 samples, stability not testable
    bool pass = false;
};

/// Seeded (t, |x|) sample with |t|, |x| <= extent: uniform draws plus points on t = |x|,
/// t = 0 and t = -|x| (every fifth point).
std::vector<std::pair<double, double>> bound_sample_points(int count, std::uint64_t seed,
                                                           double extent = 20.0);

BoundCheckReport check_bounds(ConeFamily family, double q,
                              const std::vector<std::pair<double, double>>& sample);

struct TrickReport {
    double max_ratio = 0.0;
    double bound = 0.0;  // 2(1 + 2R)/(1 - a)
    int samples = 0;     // points that landed in the cone domain
    bool pass = false;
};

/// Samples y uniformly in the bounded cone domain {|y| <= R + a|t - |x-y||} and returns the
/// largest (1 + |t - |x-y|| + |y|) / (1 + |t - |x-y| - |y||). y = 0 is always included.
TrickReport check_trick_inequality(double t, double x_norm, double R, double a, int sample_count,
                                   std::uint64_t seed);

}  // namespace rvmret
