#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "pvn/discrete_pmf.hpp"
#include "pvn/kernels.hpp"
#include "pvn/numerics.hpp"

namespace pvn {

// ---------------------------------------------------------------------------
// Power-series machinery. Every count PGF here has the form exp(F(s)) with
// F(s) = F(0) + sum_{k>=1} F_k s^k and F_k >= 0, so the PMF follows from the
// exponential-series recurrence n p(n) = sum_j j F_j p(n-j). This is the
// complete-Bell-polynomial evaluation of the derivative formulas with the
// factorials absorbed, which keeps every intermediate in [0,1].

namespace series {

// PMF of exp(F(s)) from F(0) and F_1..F_n.
inline std::vector<double> exp_pmf(double f0, std::span<const double> coeffs) {
    std::vector<double> p(coeffs.size() + 1);
    p[0] = std::exp(f0);
    for (std::size_t n = 1; n < p.size(); ++n) {
        double s = 0;
        for (std::size_t j = 1; j <= n; ++j) s += double(j) * coeffs[j - 1] * p[n - j];
        p[n] = s / double(n);
    }
    return p;
}

// Series coefficients of g(s,t) around s=0: coeff k = g^{(k)}(0,t)/k!
//   = 2 lambda_P [ |t-a| Pois(k;u) + P[Pois(u) > k] / lambda_d ],  u = lambda_d beta(t).
// Poisson pmf by upward recurrence, survival by backward accumulation.
inline void g_coeffs(double t, const NetworkParams& p, std::span<double> out) {
    const std::size_t K = out.size();
    const double ld = p.lambda_d();
    if (!(ld > 0)) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const double u = ld * beta_fn(t, p.a);
    const double abs_ta = std::abs(t - p.a);
    std::vector<double> pois(K + 1);
    pois[0] = std::exp(-u);
    for (std::size_t k = 1; k <= K; ++k) pois[k] = pois[k - 1] * u / double(k);
    double total = 0;
    for (double v : pois) total += v;
    double sf = std::max(0.0, 1.0 - total);  // P[N > K]
    for (std::size_t k = K; k >= 1; --k) {
        out[k - 1] = 2.0 * p.lambda_P * (abs_ta * pois[k] + sf / ld);
        sf += pois[k];  // P[N > k-1]
    }
}

inline std::vector<double> convolve_trunc(std::span<const double> a,
                                          std::span<const double> b, std::size_t n) {
    std::vector<double> c(n + 1, 0.0);
    for (std::size_t i = 0; i < a.size() && i <= n; ++i) {
        if (a[i] == 0) continue;
        const std::size_t jmax = std::min(b.size() - 1, n - i);
        for (std::size_t j = 0; j <= jmax; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

inline DiscretePmf finalize(std::vector<double> masses, std::size_t requested_n_max,
                            DiscretePmf::Provenance prov) {
    for (double& v : masses) v = std::max(0.0, v);
    if (requested_n_max == 0) {
        double cum = 0;
        std::size_t keep = masses.size();
        for (std::size_t k = 0; k < masses.size(); ++k) {
            cum += masses[k];
            if (cum > 1.0 - 1e-6) {
                keep = k + 1;
                break;
            }
        }
        masses.resize(keep);
    } else if (masses.size() > requested_n_max + 1) {
        masses.resize(requested_n_max + 1);
    }
    DiscretePmf out;
    out.provenance = prov;
    out.masses = std::move(masses);
    double sum = 0;
    for (double v : out.masses) sum += v;
    out.tail_mass = std::max(0.0, 1.0 - sum);
    return out;
}

}  // namespace series

inline constexpr std::size_t pmf_cap = 512;

// ---------------------------------------------------------------------------
// PGF of the number of platooned vehicles of one road at distance rho from the
// window center falling inside the ball of radius r.
template <class S>
S mcp_line_count_pgf(S s, double r, double rho, const NetworkParams& p) {
    if (std::abs(rho) > r) throw domain_error("mcp_line_count_pgf: |rho| > r");
    const double t = std::sqrt(std::max(0.0, r * r - rho * rho));
    return std::exp(g_kernel(s, t, p));
}

namespace detail_counts {

// int_0^r exp(g(s,t)) t / sqrt(r^2 - t^2) dt, split at the beta kink t = a.
template <class S>
S chord_integral(S s, double r, const NetworkParams& p, const QuadratureSpec& qs) {
    auto f = [&](double t) { return std::exp(g_kernel(s, t, p)) * t; };
    QuadratureSpec sing = qs;
    sing.singularity_hint = Singularity::inverse_sqrt_upper_endpoint;
    auto h = [&](double t) {
        return std::exp(g_kernel(s, t, p)) * t / std::sqrt(std::max(1e-300, r * r - t * t));
    };
    if (p.a < r) {
        QuadratureSpec plain = qs;
        plain.singularity_hint = Singularity::none;
        S head = integrate(
            [&](double t) { return f(t) / std::sqrt(r * r - t * t); }, 0.0, p.a, plain);
        S tail = integrate(h, p.a, r, sing);
        return head + tail;
    }
    return integrate(h, 0.0, r, sing);
}

}  // namespace detail_counts

// PGF of the total vehicle count S(r) of the platooned process in b2(o, r).
template <class S>
S count_pgf(S s, double r, const NetworkParams& p, QuadratureSpec qs = {}) {
    if (!(r > 0)) throw domain_error("count_pgf: r must be > 0");
    S integral = detail_counts::chord_integral(s, r, p, qs);
    return std::exp(-2.0 * pi * p.lambda_L * (S(r) - integral));
}

// Non-platooned counterpart (independent 1D PPP of density lambda_npts per road).
template <class S>
S npts_count_pgf(S s, double r, const NetworkParams& p, QuadratureSpec qs = {}) {
    if (!(r > 0)) throw domain_error("npts_count_pgf: r must be > 0");
    const double lam = p.lambda_npts;
    QuadratureSpec sing = qs;
    sing.singularity_hint = Singularity::inverse_sqrt_upper_endpoint;
    S integral = integrate(
        [&](double t) {
            return std::exp(2.0 * lam * (s - S(1.0)) * t) * t /
                   std::sqrt(std::max(1e-300, r * r - t * t));
        },
        0.0, r, sing);
    return std::exp(-2.0 * pi * p.lambda_L * (S(r) - integral));
}

namespace detail_counts {

// Gauss-Legendre evaluation grid for the chord integral in theta space,
// panel-split at the beta kink so per-node series are smooth.
struct ChordGrid {
    std::vector<double> t;   // chord half-lengths r sin(theta)
    std::vector<double> w;   // quadrature weight including the r sin(theta) factor
};

inline ChordGrid make_chord_grid(double r, const NetworkParams& p, int nodes) {
    ChordGrid grid;
    std::vector<double> x, w;
    const double th_kink = (p.a < r) ? std::asin(p.a / r) : 0.0;
    std::vector<std::pair<double, double>> panels;
    if (th_kink > 0) {
        panels.push_back({0.0, th_kink});
        panels.push_back({th_kink, pi / 2.0});
    } else {
        panels.push_back({0.0, pi / 2.0});
    }
    gauss_legendre(nodes, x, w);
    for (auto [lo, hi] : panels) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double th = c + h * x[i];
            grid.t.push_back(r * std::sin(th));
            grid.w.push_back(h * w[i] * r * std::sin(th));
        }
    }
    return grid;
}

// Series coefficients F_1..F_K of the exponent of the ball-count PGF, plus
// F(0), built from per-node line-count PMFs. line_pmf(t) must return the
// per-line PMF p_line(0..K; t).
template <class LinePmf>
std::pair<double, std::vector<double>> ball_exponent_series(
    double r, const NetworkParams& p, std::size_t K, int nodes, LinePmf&& line_pmf) {
    ChordGrid grid = make_chord_grid(r, p, nodes);
    std::vector<double> F(K, 0.0);
    double i0 = 0;
    for (std::size_t i = 0; i < grid.t.size(); ++i) {
        std::vector<double> pl = line_pmf(grid.t[i]);
        i0 += grid.w[i] * pl[0];
        for (std::size_t k = 1; k <= K; ++k) F[k - 1] += grid.w[i] * pl[k];
    }
    const double scale = 2.0 * pi * p.lambda_L;
    for (double& v : F) v *= scale;
    double f0 = -scale * (r - i0);
    return {f0, std::move(F)};
}

}  // namespace detail_counts

// PMF of one road's count on a chord of half-length t (PGF exp(g(s,t))).
inline std::vector<double> line_count_pmf(double t, std::size_t K, const NetworkParams& p) {
    std::vector<double> coeffs(K);
    series::g_coeffs(t, p, coeffs);
    return series::exp_pmf(g_kernel(0.0, t, p), coeffs);
}

// PMF of S(r). n_max = 0 selects the smallest support with cumulative mass
// > 1 - 1e-6, capped at 512.
inline DiscretePmf count_pmf(double r, const NetworkParams& p, std::size_t n_max = 0,
                             int nodes = 64) {
    const std::size_t K = (n_max == 0) ? pmf_cap : std::min(n_max, pmf_cap);
    auto [f0, F] = detail_counts::ball_exponent_series(
        r, p, K, nodes, [&](double t) { return line_count_pmf(t, K, p); });
    auto masses = series::exp_pmf(f0, F);
    bool ok = true;
    for (double v : masses)
        if (!std::isfinite(v)) ok = false;
    if (!ok) {
        auto pmf = pgf_invert(
            [&](std::complex<double> s) { return count_pgf(s, r, p); }, std::max<std::size_t>(K, 1));
        return series::finalize(std::move(pmf.masses), n_max,
                                DiscretePmf::Provenance::pgf_inversion);
    }
    return series::finalize(std::move(masses), n_max, DiscretePmf::Provenance::bell);
}

// PMF of the non-platooned ball count.
inline DiscretePmf npts_count_pmf(double r, const NetworkParams& p, std::size_t n_max = 0,
                                  int nodes = 64) {
    const std::size_t K = (n_max == 0) ? pmf_cap : std::min(n_max, pmf_cap);
    const double lam = p.lambda_npts;
    auto [f0, F] = detail_counts::ball_exponent_series(
        r, p, K, nodes, [&](double t) {
            std::vector<double> pl(K + 1);
            double mu = 2.0 * lam * t;
            pl[0] = std::exp(-mu);
            for (std::size_t k = 1; k <= K; ++k) pl[k] = pl[k - 1] * mu / double(k);
            return pl;
        });
    auto masses = series::exp_pmf(f0, F);
    return series::finalize(std::move(masses), n_max, DiscretePmf::Provenance::bell);
}

// Mean and variance of S(r) in closed form (two branches of the beta kink).
inline std::pair<double, double> count_mean_var(double r, const NetworkParams& p) {
    if (!(r > 0)) throw domain_error("count_mean_var: r must be > 0");
    const double lP = p.lambda_P, ld = p.lambda_d(), a = p.a, lL = p.lambda_L;
    const double mean = p.lambda_m() * pi * r * r;
    double var;
    if (a >= r) {
        var = mean + 2.0 * pi * lL *
                         ((32.0 / 3.0) * std::pow(a * lP * ld, 2) * r * r * r +
                          8.0 * lP * ld * ld *
                              ((2.0 / 3.0) * a * r * r * r - pi * std::pow(r, 4) / 16.0));
    } else {
        const double s0 = std::sqrt(r * r - a * a);
        const double asn = std::asin(s0 / r);
        var = mean + std::pow(8.0 * lP * ld * a, 2) / 3.0 * pi * lL * r * r * r +
              4.0 * pi * lL * lP * ld * ld *
                  (r * r * r * (8.0 * a / 3.0 - pi * r / 4.0) +
                   s0 * (-std::pow(a, 3) / 3.0 - 13.0 * a * r * r / 6.0) +
                   (2.0 * a * a * r * r + std::pow(r, 4) / 2.0) * asn);
    }
    return {mean, var};
}

// Non-platooned mean/variance of the ball count.
inline std::pair<double, double> npts_count_mean_var(double r, const NetworkParams& p) {
    const double kap = p.kappa_density();
    const double mean = kap * pi * r * r;
    const double var =
        mean + (16.0 / 3.0) * pi * p.lambda_L * p.lambda_npts * p.lambda_npts * r * r * r;
    return {mean, var};
}

// ---------------------------------------------------------------------------
// Palm (typical-vehicle) versions.

namespace detail_counts {

template <class S>
S exp_diff_over(double alpha, double beta, S w) {
    // (e^{alpha w} - e^{beta w}) / w with a stable small-w branch
    if (std::abs(w) < 1e-8) {
        double d1 = alpha - beta, d2 = alpha * alpha - beta * beta,
               d3 = std::pow(alpha, 3) - std::pow(beta, 3);
        return S(d1) + w * (0.5 * d2) + w * w * (d3 / 6.0);
    }
    return (std::exp(alpha * w) - std::exp(beta * w)) / w;
}

}  // namespace detail_counts

// PGF of the residual-cluster contribution: average over the parent offset of
// a Poisson count on the lens overlap, a^{-1) int_0^a e^{(s-1) lambda_d A1(r,a,x)} dx
// in closed form.
template <class S>
S palm_cluster_pgf(S s, double r, const NetworkParams& p) {
    const double a = p.a, ld = p.lambda_d();
    if (!(ld > 0)) return S(1.0);
    const S w = (s - S(1.0)) * ld;
    if (r <= a) {
        return ((a - r) * std::exp(2.0 * r * w) +
                detail_counts::exp_diff_over(2.0 * r, r, w)) /
               a;
    }
    if (r < 2.0 * a) {
        return ((r - a) * std::exp(2.0 * a * w) +
                detail_counts::exp_diff_over(2.0 * a, r, w)) /
               a;
    }
    return std::exp(2.0 * a * w);
}

// PMF of the residual-cluster count: a uniform mixture of Poisson laws with
// mean lambda_d A1(r,a,x), x ~ U[0,a]; Gauss panels split at the lens kink.
inline std::vector<double> palm_cluster_pmf(double r, std::size_t K, const NetworkParams& p,
                                            int nodes = 32) {
    std::vector<double> out(K + 1, 0.0);
    const double a = p.a, ld = p.lambda_d();
    if (!(ld > 0)) {
        out[0] = 1.0;
        return out;
    }
    std::vector<std::pair<double, double>> panels;
    const double kink = std::abs(r - a);
    if (kink > 0 && kink < a)
        panels = {{0.0, kink}, {kink, a}};
    else
        panels = {{0.0, a}};
    std::vector<double> x, w;
    gauss_legendre(nodes, x, w);
    std::vector<double> pois(K + 1);
    for (auto [lo, hi] : panels) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double xx = c + h * x[i];
            double mu = ld * lens_1d(r, a, xx);
            pois[0] = std::exp(-mu);
            for (std::size_t k = 1; k <= K; ++k) pois[k] = pois[k - 1] * mu / double(k);
            double weight = h * w[i] / a;
            for (std::size_t k = 0; k <= K; ++k) out[k] += weight * pois[k];
        }
    }
    return out;
}

// PGF of the count around the typical vehicle: ordinary count times the
// tagged-line factor times the residual-cluster factor.
template <class S>
S palm_count_pgf(S s, double r, const NetworkParams& p, QuadratureSpec qs = {}) {
    return count_pgf(s, r, p, qs) * std::exp(g_kernel(s, r, p)) * palm_cluster_pgf(s, r, p);
}

// Mean of the Palm count in closed form (r <= a branch has the printed form;
// the general lens average covers r > a as well).
inline double palm_count_mean(double r, const NetworkParams& p) {
    const double base = p.lambda_m() * pi * r * r;
    const double line = kappa(r, 1, p);  // 2 lambda_P m r for every r
    const double a = p.a, ld = p.lambda_d();
    if (!(ld > 0)) return base + line;
    // a^{-1} int_0^a A1(r,a,x) dx: plateau of height 2 min(r,a) up to |a-r|
    // (clipped at a), then the linear ramp a + r - x.
    const double mn = std::min(r, a);
    const double plateau_end = std::min(std::abs(a - r), a);
    double integral = 2.0 * mn * plateau_end;
    if (a > plateau_end)
        integral += (a + r) * (a - plateau_end) - 0.5 * (a * a - plateau_end * plateau_end);
    return base + line + ld * integral / a;
}

// PMF of the Palm count: discrete convolution of the three factor PMFs
// (identical in law to the multinomial derivative sum, numerically stable).
inline DiscretePmf palm_count_pmf(double r, const NetworkParams& p, std::size_t n_max = 0,
                                  int nodes = 64) {
    const std::size_t K = (n_max == 0) ? pmf_cap : std::min(n_max, pmf_cap);
    DiscretePmf base = count_pmf(r, p, K, nodes);
    base.masses.resize(K + 1, 0.0);

    std::vector<double> coeffs(K);
    series::g_coeffs(r, p, coeffs);
    std::vector<double> f2 = series::exp_pmf(g_kernel(0.0, r, p), coeffs);
    std::vector<double> f3 = palm_cluster_pmf(r, K, p);

    auto conv = series::convolve_trunc(base.masses, f2, K);
    conv = series::convolve_trunc(conv, f3, K);
    return series::finalize(std::move(conv), n_max, base.provenance);
}

namespace detail_counts {

// Piecewise adaptive integration with known interior breakpoints, so that
// support edges of compactly supported integrands never force deep refinement.
template <class F>
double integrate_split(F&& f, double lo, double hi, std::vector<double> brks,
                       const QuadratureSpec& spec) {
    brks.push_back(lo);
    brks.push_back(hi);
    std::sort(brks.begin(), brks.end());
    double total = 0;
    double prev = lo;
    for (double b : brks) {
        double x = std::clamp(b, lo, hi);
        if (x > prev + 1e-14) {
            total += integrate(f, prev, x, spec);
            prev = x;
        }
    }
    return total;
}

}  // namespace detail_counts

// Laplace functional of the platooned process for a nonnegative function v
// supported inside b2(o, support_radius). reduced_palm multiplies in the
// phi-averaged tagged-line factor.
inline double laplace_functional(const std::function<double(double, double)>& v,
                                 const NetworkParams& p, double support_radius,
                                 bool reduced_palm = false) {
    const double a = p.a, ld = p.lambda_d(), R = support_radius;
    QuadratureSpec inner_spec{1e-9, 1e-13, 200, Singularity::none};
    QuadratureSpec mid_spec{1e-9, 1e-12, 400, Singularity::none};
    QuadratureSpec outer_spec{1e-8, 1e-11, 400, Singularity::none};

    auto u_on_line = [&](double rho, double phi, double t) {
        // absolute position of scalar coordinate t on the line L(rho, phi)
        double qx = rho * std::cos(phi) + t * std::sin(phi);
        double qy = rho * std::sin(phi) - t * std::cos(phi);
        return std::exp(-v(qx, qy));
    };

    // chord half-length of the support ball on the line at distance rho
    auto chord = [&](double rho) { return std::sqrt(std::max(0.0, R * R - rho * rho)); };

    auto cluster_factor = [&](double rho, double phi, double x) {
        const double c = chord(rho);
        // u differs from 1 only on [-c-x, c-x] in the y variable
        double integral = detail_counts::integrate_split(
            [&](double y) { return 1.0 - u_on_line(rho, phi, x + y); }, -a, a,
            {-c - x, c - x}, inner_spec);
        return std::exp(-ld * integral);
    };

    auto line_pgfl = [&](double rho, double phi) {
        if (std::abs(rho) >= R) return 1.0;
        const double c = chord(rho);
        double integral = detail_counts::integrate_split(
            [&](double x) { return 1.0 - cluster_factor(rho, phi, x); }, -c - a, c + a,
            {-(c - a), c - a, -(c + a), c + a, 0.0}, mid_spec);
        return std::exp(-p.lambda_P * integral);
    };

    double outer = integrate(
        [&](double rho) {
            return integrate([&](double phi) { return 1.0 - line_pgfl(rho, phi); }, 0.0, pi,
                             outer_spec);
        },
        -R, R, outer_spec);
    double lf = std::exp(-p.lambda_L * outer);

    if (reduced_palm) {
        double palm = integrate(
            [&](double phi) {
                double tagged = line_pgfl(0.0, phi);
                double cluster_avg = detail_counts::integrate_split(
                    [&](double xo) { return cluster_factor(0.0, phi, -xo); }, -a, a, {},
                    mid_spec) / (2.0 * a);
                return tagged * cluster_avg;
            },
            0.0, pi, outer_spec) / pi;
        lf *= palm;
    }
    return lf;
}

}  // namespace pvn
