#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <type_traits>

#include <json.hpp>

#include "pvn/errors.hpp"
#include "pvn/numerics.hpp"

namespace pvn {

// All lengths in km, areas in km^2, densities per km / km^2. A 250 m platoon
// radius is stored as 0.25.
struct NetworkParams {
    double lambda_L = 5.0 / pi;   // road density (km^-1)
    double lambda_P = 1.0;        // platoon density per road (km^-1)
    double m = 15.0;              // mean vehicles per platoon
    double a = 0.25;              // platoon radius (km)
    double lambda_b = 5.0;        // BS density (km^-2)
    double lambda_npts = 15.0;    // per-road vehicle density, non-platooned (km^-1)
    double alpha = 3.5;           // path-loss exponent
    double bandwidth = 20e6;      // Hz

    double lambda_d() const { return m / (2.0 * a); }          // daughter density on a platoon
    double lambda_m() const { return m * lambda_P * lambda_L * pi; }  // 2D vehicle density
    double kappa_density() const { return pi * lambda_L * lambda_npts; }
    double mu_m() const { return m * lambda_P; }               // per-road vehicle density

    void validate() const {
        if (!(lambda_L > 0)) throw config_error("lambda_L must be > 0");
        if (!(lambda_P > 0)) throw config_error("lambda_P must be > 0");
        if (!(lambda_b > 0)) throw config_error("lambda_b must be > 0");
        if (!(a > 0)) throw config_error("a must be > 0");
        if (!(m >= 0)) throw config_error("m must be >= 0");
        if (!(lambda_npts >= 0)) throw config_error("lambda_npts must be >= 0");
        if (!(alpha > 2)) throw config_error("alpha must be > 2");
        if (!(bandwidth > 0)) throw config_error("bandwidth must be > 0");
    }
};

inline void to_json(nlohmann::json& j, const NetworkParams& p) {
    j = nlohmann::json{{"lambda_L", p.lambda_L},   {"lambda_P", p.lambda_P},
                       {"m", p.m},                 {"a", p.a},
                       {"lambda_b", p.lambda_b},   {"lambda_npts", p.lambda_npts},
                       {"alpha", p.alpha},         {"bandwidth", p.bandwidth}};
}

inline void from_json(const nlohmann::json& j, NetworkParams& p) {
    NetworkParams d;
    p.lambda_L = j.value("lambda_L", d.lambda_L);
    p.lambda_P = j.value("lambda_P", d.lambda_P);
    p.m = j.value("m", d.m);
    p.a = j.value("a", d.a);
    p.lambda_b = j.value("lambda_b", d.lambda_b);
    p.lambda_npts = j.value("lambda_npts", d.lambda_npts);
    p.alpha = j.value("alpha", d.alpha);
    p.bandwidth = j.value("bandwidth", d.bandwidth);
}

// Length of the intersection of the 1D balls b1(0,a) and b1(x,b).
inline double lens_1d(double a, double b, double x) {
    if (a < 0 || b < 0 || x < 0) throw domain_error("lens_1d: negative input");
    if (x <= std::abs(a - b)) return 2.0 * std::min(a, b);
    if (x <= a + b) return a + b - x;
    return 0.0;
}

inline double beta_fn(double t, double a) {
    if (t < 0) throw domain_error("beta_fn: t must be >= 0");
    return 2.0 * std::min(t, a);
}

namespace detail {

// (e^{u w} - 1) / w, stable for small |w| (templated so the PGF machinery can
// walk the unit circle with complex s).
template <class S>
S expm1_over(double u, S w) {
    if (std::abs(w) < 1e-9) {
        S uw = u * w;
        return u * (S(1.0) + uw * 0.5 + uw * uw * (1.0 / 6.0));
    }
    return (std::exp(u * w) - S(1.0)) / w;
}

}  // namespace detail

// Exponent of the PGF of the number of platooned vehicles on a line segment
// of half-length t: exp(g(s,t)) is that PGF. g(1,t) = 0 identically.
template <class S>
S g_kernel(S s, double t, const NetworkParams& p) {
    if (t < 0) throw domain_error("g_kernel: t must be >= 0");
    const double ld = p.lambda_d();
    if (!(ld > 0)) return S{};  // no vehicles at all
    const S w = s - S(1.0);
    if (w == S{}) return S{};  // both beta branches cancel in the limit
    const double beta = beta_fn(t, p.a);
    const S e = std::exp(ld * beta * w);
    return 2.0 * p.lambda_P *
           (std::abs(t - p.a) * e - (t + p.a) + detail::expm1_over(ld * beta, w) / ld);
}

// kth s-derivative of g, written out as the finite binomial sum. Has a pole in
// this form at s = 1; use kappa() for the limit.
inline double g_derivative(int k, double s, double t, const NetworkParams& p) {
    if (k < 1) throw domain_error("g_derivative: k must be >= 1");
    if (t < 0) throw domain_error("g_derivative: t must be >= 0");
    if (std::abs(s - 1.0) < 1e-12)
        throw domain_error("g_derivative: pole at s = 1, use kappa");
    const double ld = p.lambda_d();
    if (!(ld > 0)) return 0.0;
    const double beta = beta_fn(t, p.a);
    const double u = ld * beta;
    const double w = s - 1.0;
    const double e = std::exp(w * u);

    // sum_j C(k,j) j! (-1)^j / w^{j+1} * u^{k-j} * e^{wu}
    double sum = 0.0;
    double fall = 1.0;  // k!/(k-j)!
    double sgn = 1.0;   // (-1)^j
    double winv = 1.0 / w;
    double wp = winv;   // 1/w^{j+1}
    double kfact = 1.0;
    for (int j = 0; j <= k; ++j) {
        sum += fall * sgn * wp * std::pow(u, double(k - j)) * e;
        if (j == k) kfact = fall;  // fall == k! at the last term
        fall *= double(k - j);
        sgn = -sgn;
        wp *= winv;
    }
    const double ksgn = (k % 2 == 0) ? 1.0 : -1.0;
    const double last = kfact * ksgn * std::pow(winv, double(k + 1));
    return 2.0 * p.lambda_P *
           (std::pow(u, double(k)) * std::abs(t - p.a) * e + (sum - last) / ld);
}

// lim_{s->1} g^{(k)}(s,t).
inline double kappa(double t, int k, const NetworkParams& p) {
    if (k < 1) throw domain_error("kappa: k must be >= 1");
    if (t < 0) throw domain_error("kappa: t must be >= 0");
    const double ld = p.lambda_d();
    if (!(ld > 0)) return 0.0;
    const double beta = beta_fn(t, p.a);
    return 2.0 * p.lambda_P * std::pow(ld * beta, double(k)) *
           (std::abs(t - p.a) + beta / double(k + 1));
}

// ---------------------------------------------------------------------------
// Empirical Poisson-Voronoi cell statistics (generalized Gamma fits).

struct GenGammaParams {
    double a1, b1, c1;
};

inline constexpr GenGammaParams voronoi_area_fit{1.07950, 3.03226, 3.31122};
inline constexpr GenGammaParams voronoi_perimeter_fit{2.33609, 2.97006, 7.588060};

inline double gen_gamma_pdf(double x, const GenGammaParams& gp) {
    if (x < 0) throw domain_error("gen_gamma_pdf: x must be >= 0");
    if (x == 0) return gp.c1 > 1 ? 0.0 : (gp.c1 == 1 ? gp.a1 * std::pow(gp.b1, 1.0 / gp.a1) /
                                                           std::tgamma(1.0 / gp.a1)
                                                     : std::numeric_limits<double>::infinity());
    double lg = std::log(gp.a1) + (gp.c1 / gp.a1) * std::log(gp.b1) -
                std::lgamma(gp.c1 / gp.a1) + (gp.c1 - 1.0) * std::log(x) -
                gp.b1 * std::pow(x, gp.a1);
    return std::exp(lg);
}

// E[X^p] for X ~ generalized Gamma.
inline double gen_gamma_moment(double pow_order, const GenGammaParams& gp) {
    return std::exp(-pow_order / gp.a1 * std::log(gp.b1) +
                    std::lgamma((gp.c1 + pow_order) / gp.a1) -
                    std::lgamma(gp.c1 / gp.a1));
}

// PDF of the typical cell area: lambda_b * gtilde(lambda_b * v).
inline double cell_area_pdf(double v, const NetworkParams& p) {
    if (v < 0) throw domain_error("cell_area_pdf: v must be >= 0");
    return p.lambda_b * gen_gamma_pdf(p.lambda_b * v, voronoi_area_fit);
}

// PDF of the typical cell perimeter: (sqrt(lambda_b)/4) * gtilde(sqrt(lambda_b) z / 4).
inline double cell_perimeter_pdf(double z, const NetworkParams& p) {
    if (z < 0) throw domain_error("cell_perimeter_pdf: z must be >= 0");
    const double s = std::sqrt(p.lambda_b) / 4.0;
    return s * gen_gamma_pdf(s * z, voronoi_perimeter_fit);
}

// PDF of the equal-area ball radius of the typical cell.
inline double typical_radius_pdf(double r, const NetworkParams& p) {
    if (r < 0) throw domain_error("typical_radius_pdf: r must be >= 0");
    return 2.0 * pi * r * cell_area_pdf(pi * r * r, p);
}

// Size-biased version for the cell containing the typical vehicle (0-cell).
// The empirical area fit has mean 1.0000644 rather than exactly 1, so the
// size-bias factor is divided by that mean to keep this a proper density.
inline double tagged_radius_pdf(double r, const NetworkParams& p) {
    if (r < 0) throw domain_error("tagged_radius_pdf: r must be >= 0");
    static const double mean_x = gen_gamma_moment(1.0, voronoi_area_fit);
    return p.lambda_b * pi * r * r * typical_radius_pdf(r, p) / mean_x;
}

// E[r_t^n] under typical_radius_pdf, via the generalized Gamma moment.
inline double typical_radius_moment(double n, const NetworkParams& p) {
    return std::pow(pi * p.lambda_b, -n / 2.0) * gen_gamma_moment(n / 2.0, voronoi_area_fit);
}

// E[r_o^n] under tagged_radius_pdf (size-biased: one extra area power).
inline double tagged_radius_moment(double n, const NetworkParams& p) {
    return std::pow(pi * p.lambda_b, -n / 2.0) *
           gen_gamma_moment(n / 2.0 + 1.0, voronoi_area_fit) /
           gen_gamma_moment(1.0, voronoi_area_fit);
}

}  // namespace pvn
