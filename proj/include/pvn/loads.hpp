#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <json.hpp>

#include "pvn/chords.hpp"
#include "pvn/counts.hpp"
#include "pvn/kernels.hpp"

namespace pvn {

enum class Scenario { PTS, NPTS };
enum class CellKind { typical_exact, typical_approx, tagged_approx };

struct LoadSummary {
    DiscretePmf pmf;
    double mean = 0;
    double variance = 0;
    double p_on = std::numeric_limits<double>::quiet_NaN();  // typical cells only
    Scenario scenario = Scenario::PTS;
    CellKind cell = CellKind::typical_approx;

    nlohmann::json to_json() const {
        nlohmann::json j = pmf.to_json();
        j["mean"] = mean;
        j["variance"] = variance;
        if (std::isfinite(p_on)) j["p_on"] = p_on;
        j["scenario"] = scenario == Scenario::PTS ? "PTS" : "NPTS";
        j["cell"] = cell == CellKind::typical_exact
                        ? "typical_exact"
                        : (cell == CellKind::typical_approx ? "typical_approx" : "tagged_approx");
        return j;
    }
};

namespace detail_loads {

// Deconditioning grid over a cell radius: Gauss-Legendre nodes on [0, r_hi]
// where r_hi carries all but 1e-5 of the radius distribution; weights include
// the radius density.
struct RadiusGrid {
    std::vector<double> r, w;
    double tail = 0;  // mass beyond r_hi
};

template <class Pdf>
RadiusGrid make_radius_grid(Pdf&& pdf, double scale, int nodes = 200) {
    // scan for the 1 - 1e-5 quantile
    const double r_max = 12.0 * scale;
    const int scan = 6000;
    double cum = 0, r_hi = r_max, prev = 0;
    for (int i = 1; i <= scan; ++i) {
        double r = r_max * double(i) / scan;
        double f = pdf(r);
        cum += 0.5 * (f + prev) * (r_max / scan);
        prev = f;
        if (cum >= 1.0 - 1e-5) {
            r_hi = r;
            break;
        }
    }
    RadiusGrid g;
    g.tail = std::max(0.0, 1.0 - cum);
    std::vector<double> x, w;
    gauss_legendre(nodes, x, w);
    g.r.resize(std::size_t(nodes));
    g.w.resize(std::size_t(nodes));
    double total = 0;
    for (int i = 0; i < nodes; ++i) {
        double r = 0.5 * r_hi * (x[std::size_t(i)] + 1.0);
        g.r[std::size_t(i)] = r;
        g.w[std::size_t(i)] = 0.5 * r_hi * w[std::size_t(i)] * pdf(r);
        total += g.w[std::size_t(i)];
    }
    // fold the 1e-5 tail back in so deconditioned PGFs are exact at s=1
    for (double& wi : g.w) wi /= total;
    return g;
}

inline RadiusGrid typical_radius_grid(const NetworkParams& p, int nodes = 200) {
    return make_radius_grid([&](double r) { return typical_radius_pdf(r, p); },
                            1.0 / std::sqrt(p.lambda_b), nodes);
}

inline RadiusGrid tagged_radius_grid(const NetworkParams& p, int nodes = 200) {
    return make_radius_grid([&](double r) { return tagged_radius_pdf(r, p); },
                            1.0 / std::sqrt(p.lambda_b), nodes);
}

// Trapezoid weights of a tabulated chord density (weight includes the density).
inline void chord_weights(const TabulatedPdf& f, std::vector<double>& w) {
    const std::size_t n = f.grid.size();
    w.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = f.grid[i + 1] - f.grid[i];
        w[i] += 0.5 * h * f.density[i];
        w[i + 1] += 0.5 * h * f.density[i + 1];
    }
}

inline void accumulate_scaled(std::vector<double>& acc, const std::vector<double>& x,
                              double c) {
    if (acc.size() < x.size()) acc.resize(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) acc[i] += c * x[i];
}

}  // namespace detail_loads

// ---------------------------------------------------------------------------
// Typical-cell load, ball approximation: decondition the ball count over the
// equal-area radius of the typical cell.

inline LoadSummary typical_load_approx(const NetworkParams& p, std::size_t n_max = 256,
                                       int radius_nodes = 200, int chord_nodes = 64) {
    auto grid = detail_loads::typical_radius_grid(p, radius_nodes);
    std::vector<double> masses;
    for (std::size_t i = 0; i < grid.r.size(); ++i) {
        auto pmf = count_pmf(grid.r[i], p, n_max, chord_nodes);
        pmf.masses.resize(n_max + 1, 0.0);
        detail_loads::accumulate_scaled(masses, pmf.masses, grid.w[i]);
    }
    LoadSummary out;
    out.scenario = Scenario::PTS;
    out.cell = CellKind::typical_approx;
    out.pmf = series::finalize(std::move(masses), n_max, DiscretePmf::Provenance::bell);
    out.mean = p.lambda_m() / p.lambda_b;
    // Var = E[(F1)^2 + F2] + mean - mean^2 with F1 = lambda_m pi r^2 and
    // F2 = Var(S(r)) - E S(r); both closed-form.
    double second = 0;
    for (std::size_t i = 0; i < grid.r.size(); ++i) {
        auto [m_r, v_r] = count_mean_var(grid.r[i], p);
        second += grid.w[i] * (m_r * m_r + (v_r - m_r));
    }
    out.variance = second + out.mean - out.mean * out.mean;
    out.p_on = 1.0 - out.pmf.masses[0];
    return out;
}

// Active (on) probability of the typical BS.
inline double p_on_typical(const NetworkParams& p, Scenario sc = Scenario::PTS,
                           int radius_nodes = 200) {
    auto grid = detail_loads::typical_radius_grid(p, radius_nodes);
    double off = 0;
    for (std::size_t i = 0; i < grid.r.size(); ++i) {
        double void_p = (sc == Scenario::PTS) ? count_pgf(0.0, grid.r[i], p)
                                              : npts_count_pgf(0.0, grid.r[i], p);
        off += grid.w[i] * void_p;
    }
    return 1.0 - off;
}

// ---------------------------------------------------------------------------
// Typical-cell load, exact route: Poisson number of chords through the cell
// (mean lambda_L * perimeter), each carrying an independent line count over
// the typical-chord length distribution.

template <class S>
S typical_load_pgf_exact(S s, const NetworkParams& p, const TabulatedPdf& f_c) {
    std::vector<double> cw;
    detail_loads::chord_weights(f_c, cw);
    S chord_mean{};
    for (std::size_t j = 0; j < f_c.grid.size(); ++j)
        chord_mean += cw[j] * std::exp(g_kernel(s, 0.5 * f_c.grid[j], p));
    QuadratureSpec zspec{1e-9, 1e-12, 400, Singularity::none};
    const S one(1.0);
    S total = semi_infinite_integrate(
        [&](double z) {
            return std::exp(-p.lambda_L * z * (one - chord_mean)) * cell_perimeter_pdf(z, p);
        },
        0.0, zspec, 1.0 / std::sqrt(p.lambda_b));
    return total;
}

inline LoadSummary typical_load_exact(const NetworkParams& p, const TabulatedPdf& f_c,
                                      std::size_t n_max = 256) {
    LoadSummary out;
    out.scenario = Scenario::PTS;
    out.cell = CellKind::typical_exact;
    out.pmf = pgf_invert(
        [&](std::complex<double> s) { return typical_load_pgf_exact(s, p, f_c); }, n_max);
    out.mean = p.lambda_m() / p.lambda_b;
    out.variance = out.pmf.variance();
    out.p_on = 1.0 - out.pmf.masses[0];
    return out;
}

// ---------------------------------------------------------------------------
// Tagged-cell load (cell of the BS serving the typical vehicle), ball
// approximation. Conditional on (R_o, C_o) the load is the independent sum of
// the ball count, the tagged-line chord count, and the residual-cluster
// overlap count; R_o and C_o are deconditioned separately.

namespace detail_loads {

// PGF of the residual-cluster count on the tagged chord. The parent offset
// and the chord center are independent uniforms, so the lens argument has the
// trapezoidal difference density A1(c/2, a, d) / (a c) on [0, a + c/2];
// closed form with the exponential integrated piecewise.
template <class S>
S tagged_cluster_pgf(S s, double c, const NetworkParams& p) {
    const double a = p.a, ld = p.lambda_d();
    if (!(ld > 0) || c <= 0) return S(1.0);
    const double half = 0.5 * c;
    const double mn = std::min(a, half);
    const double plateau = std::abs(a - half);
    const S w = (s - S(1.0)) * ld;
    const double b = 2.0 * mn;  // lens height on the plateau
    S plateau_part = std::exp(b * w) * (b * plateau);
    // ramp: value v runs linearly 0..b; integral of v e^{w v} dv
    S ramp_part;
    if (std::abs(w) * b < 1e-6) {
        S wb = w * b;
        ramp_part = b * b * (0.5 + wb / 3.0 + wb * wb / 8.0);
    } else {
        ramp_part = ((b * w - S(1.0)) * std::exp(b * w) + S(1.0)) / (w * w);
    }
    return (plateau_part + ramp_part) / (a * c);
}

// PMF counterpart: uniform mixture of Poisson laws over the difference density.
inline std::vector<double> tagged_cluster_pmf(double c, std::size_t K,
                                              const NetworkParams& p, int nodes = 24) {
    std::vector<double> out(K + 1, 0.0);
    const double a = p.a, ld = p.lambda_d();
    if (!(ld > 0) || c <= 0) {
        out[0] = 1.0;
        return out;
    }
    const double half = 0.5 * c;
    const double hi = a + half;
    const double kink = std::abs(a - half);
    std::vector<double> x, w;
    gauss_legendre(nodes, x, w);
    std::vector<double> pois(K + 1);
    auto add_panel = [&](double lo, double hi_) {
        if (hi_ <= lo) return;
        const double mid = 0.5 * (lo + hi_), hh = 0.5 * (hi_ - lo);
        for (int i = 0; i < nodes; ++i) {
            double d = mid + hh * x[std::size_t(i)];
            double lens = lens_1d(half, a, d);
            double mu = ld * lens;
            pois[0] = std::exp(-mu);
            for (std::size_t k = 1; k <= K; ++k) pois[k] = pois[k - 1] * mu / double(k);
            double weight = hh * w[std::size_t(i)] * lens / (a * c);
            for (std::size_t k = 0; k <= K; ++k) out[k] += weight * pois[k];
        }
    };
    add_panel(0.0, kink);
    add_panel(kink, hi);
    return out;
}

}  // namespace detail_loads

// Conditional tagged-load PGF at fixed chord length and ball radius.
template <class S>
S tagged_load_pgf_conditional(S s, double r_o, double c_o, const NetworkParams& p) {
    return count_pgf(s, r_o, p) * std::exp(g_kernel(s, 0.5 * c_o, p)) *
           detail_loads::tagged_cluster_pgf(s, c_o, p);
}

// Tagged-load PGF deconditioned over R_o and C_o (factors are independent).
template <class S>
S tagged_load_pgf(S s, const NetworkParams& p, const TabulatedPdf& f_co,
                  int radius_nodes = 200) {
    auto grid = detail_loads::tagged_radius_grid(p, radius_nodes);
    S disk{};
    for (std::size_t i = 0; i < grid.r.size(); ++i)
        disk += grid.w[i] * count_pgf(s, grid.r[i], p);
    std::vector<double> cw;
    detail_loads::chord_weights(f_co, cw);
    S chord{};
    for (std::size_t j = 0; j < f_co.grid.size(); ++j) {
        double c = f_co.grid[j];
        chord += cw[j] * std::exp(g_kernel(s, 0.5 * c, p)) *
                 detail_loads::tagged_cluster_pgf(s, c, p);
    }
    return disk * chord;
}

// Mean tagged load conditional on the chord length (closed form).
inline double tagged_load_mean_conditional(double c_o, const NetworkParams& p) {
    const double size_bias = p.lambda_b * pi * tagged_radius_moment(2.0, p);  // ~1.28
    const double ball = size_bias * p.lambda_m() / p.lambda_b;
    const double line = p.m * p.lambda_P * c_o;
    const double a = p.a, half = 0.5 * c_o;
    const double mn = std::min(a, half);
    double cluster = p.lambda_d() *
                     (4.0 * mn * mn * std::abs(a - half) + 8.0 * mn * mn * mn / 3.0) /
                     (a * c_o);
    return ball + line + cluster;
}

inline LoadSummary tagged_load_pmf(const NetworkParams& p, const TabulatedPdf& f_co,
                                   std::size_t n_max = 256, int radius_nodes = 200,
                                   int chord_nodes = 64) {
    auto grid = detail_loads::tagged_radius_grid(p, radius_nodes);
    std::vector<double> disk;
    for (std::size_t i = 0; i < grid.r.size(); ++i) {
        auto pmf = count_pmf(grid.r[i], p, n_max, chord_nodes);
        pmf.masses.resize(n_max + 1, 0.0);
        detail_loads::accumulate_scaled(disk, pmf.masses, grid.w[i]);
    }
    std::vector<double> cw;
    detail_loads::chord_weights(f_co, cw);
    std::vector<double> chord;
    for (std::size_t j = 0; j < f_co.grid.size(); ++j) {
        double c = f_co.grid[j];
        if (cw[j] <= 0) continue;
        std::vector<double> coeffs(n_max);
        series::g_coeffs(0.5 * c, p, coeffs);
        auto line = series::exp_pmf(g_kernel(0.0, 0.5 * c, p), coeffs);
        auto cluster = detail_loads::tagged_cluster_pmf(c, n_max, p);
        auto conv = series::convolve_trunc(line, cluster, n_max);
        detail_loads::accumulate_scaled(chord, conv, cw[j]);
    }
    auto masses = series::convolve_trunc(disk, chord, n_max);
    LoadSummary out;
    out.scenario = Scenario::PTS;
    out.cell = CellKind::tagged_approx;
    out.pmf = series::finalize(std::move(masses), n_max, DiscretePmf::Provenance::bell);
    // deconditioned mean via the conditional closed form
    double mean = 0;
    for (std::size_t j = 0; j < f_co.grid.size(); ++j)
        mean += cw[j] * tagged_load_mean_conditional(f_co.grid[j], p);
    out.mean = mean;
    out.variance = out.pmf.variance();
    return out;
}

// ---------------------------------------------------------------------------
// Non-platooned (PLP-PPP) baselines.

inline LoadSummary npts_typical_load(const NetworkParams& p, std::size_t n_max = 256,
                                     int radius_nodes = 200, int chord_nodes = 64) {
    auto grid = detail_loads::typical_radius_grid(p, radius_nodes);
    std::vector<double> masses;
    for (std::size_t i = 0; i < grid.r.size(); ++i) {
        auto pmf = npts_count_pmf(grid.r[i], p, n_max, chord_nodes);
        pmf.masses.resize(n_max + 1, 0.0);
        detail_loads::accumulate_scaled(masses, pmf.masses, grid.w[i]);
    }
    LoadSummary out;
    out.scenario = Scenario::NPTS;
    out.cell = CellKind::typical_approx;
    out.pmf = series::finalize(std::move(masses), n_max, DiscretePmf::Provenance::bell);
    const double kap = p.kappa_density();
    out.mean = kap / p.lambda_b;
    const double er3 = typical_radius_moment(3.0, p);
    const double er4 = typical_radius_moment(4.0, p);
    out.variance = kap * pi * kap * pi * er4 +
                   (16.0 / 3.0) * pi * p.lambda_L * p.lambda_npts * p.lambda_npts * er3 +
                   out.mean - out.mean * out.mean;
    out.p_on = 1.0 - out.pmf.masses[0];
    return out;
}

template <class S>
S npts_tagged_load_pgf(S s, const NetworkParams& p, const TabulatedPdf& f_co,
                       int radius_nodes = 200) {
    auto grid = detail_loads::tagged_radius_grid(p, radius_nodes);
    S disk{};
    for (std::size_t i = 0; i < grid.r.size(); ++i)
        disk += grid.w[i] * npts_count_pgf(s, grid.r[i], p);
    std::vector<double> cw;
    detail_loads::chord_weights(f_co, cw);
    S chord{};
    for (std::size_t j = 0; j < f_co.grid.size(); ++j)
        chord += cw[j] * std::exp(p.lambda_npts * (s - S(1.0)) * f_co.grid[j]);
    return disk * chord;
}

inline LoadSummary npts_tagged_load(const NetworkParams& p, const TabulatedPdf& f_co,
                                    std::size_t n_max = 256, int radius_nodes = 200,
                                    int chord_nodes = 64) {
    auto grid = detail_loads::tagged_radius_grid(p, radius_nodes);
    std::vector<double> disk;
    for (std::size_t i = 0; i < grid.r.size(); ++i) {
        auto pmf = npts_count_pmf(grid.r[i], p, n_max, chord_nodes);
        pmf.masses.resize(n_max + 1, 0.0);
        detail_loads::accumulate_scaled(disk, pmf.masses, grid.w[i]);
    }
    std::vector<double> cw;
    detail_loads::chord_weights(f_co, cw);
    std::vector<double> chord;
    std::vector<double> pois(n_max + 1);
    for (std::size_t j = 0; j < f_co.grid.size(); ++j) {
        double mu = p.lambda_npts * f_co.grid[j];
        pois[0] = std::exp(-mu);
        for (std::size_t k = 1; k <= n_max; ++k) pois[k] = pois[k - 1] * mu / double(k);
        detail_loads::accumulate_scaled(chord, pois, cw[j]);
    }
    auto masses = series::convolve_trunc(disk, chord, n_max);
    LoadSummary out;
    out.scenario = Scenario::NPTS;
    out.cell = CellKind::tagged_approx;
    out.pmf = series::finalize(std::move(masses), n_max, DiscretePmf::Provenance::bell);
    out.mean = p.kappa_density() * pi * tagged_radius_moment(2.0, p) +
               p.lambda_npts * f_co.moment(1);
    out.variance = out.pmf.variance();
    return out;
}

// ---------------------------------------------------------------------------
// Operational metrics of the paper's comparative study.

struct OperationalMetrics {
    double s_avg;   // mean typical load given active
    double p_less;  // P[load <= floor(s_avg) | active]
    double P1;      // P[tagged load = 1]
    double m_avg;   // mean tagged load
    double P_less;  // P[tagged load <= m_avg]
};

inline OperationalMetrics operational_metrics(const LoadSummary& typical,
                                              const LoadSummary& tagged) {
    OperationalMetrics m{};
    const double pon = typical.p_on;
    m.s_avg = typical.mean / pon;
    const auto k_avg = std::size_t(std::floor(m.s_avg));
    double cum = 0;
    for (std::size_t k = 1; k <= k_avg && k < typical.pmf.masses.size(); ++k)
        cum += typical.pmf.masses[k];
    m.p_less = cum / pon;
    m.P1 = tagged.pmf.p(1);
    m.m_avg = tagged.mean;
    const auto m_floor = std::size_t(std::floor(m.m_avg));
    double cum2 = 0;
    for (std::size_t k = 0; k <= m_floor && k < tagged.pmf.masses.size(); ++k)
        cum2 += tagged.pmf.masses[k];
    m.P_less = cum2;
    return m;
}

}  // namespace pvn
