#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "pvn/errors.hpp"
#include "pvn/numerics.hpp"

namespace pvn {

// Continuous density sampled on a strictly increasing grid. Evaluation between
// nodes uses monotone cubic (Fritsch-Carlson) interpolation; integrals and
// moments use the trapezoid rule on the grid.
struct TabulatedPdf {
    std::vector<double> grid;
    std::vector<double> density;
    bool normalized_flag = false;
    double normalization_residual = 0.0;  // measured integral minus 1, pre-renormalization

    double trapezoid_integral() const {
        double s = 0;
        for (std::size_t i = 1; i < grid.size(); ++i)
            s += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
        return s;
    }

    double moment(int k) const {
        double s = 0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            double fa = density[i - 1] * std::pow(grid[i - 1], k);
            double fb = density[i] * std::pow(grid[i], k);
            s += 0.5 * (fa + fb) * (grid[i] - grid[i - 1]);
        }
        return s;
    }

    // Gate: accept only if the raw integral is within half a percent of 1,
    // then rescale exactly.
    void renormalize() {
        double total = trapezoid_integral();
        normalization_residual = total - 1.0;
        if (total < 0.995 || total > 1.005)
            throw normalization_failure("tabulated pdf failed the normalization gate", total);
        for (double& d : density) d /= total;
        normalized_flag = true;
    }

    double operator()(double x) const {
        if (grid.empty() || x <= grid.front() || x >= grid.back()) {
            if (!grid.empty() && x == grid.front()) return density.front();
            if (!grid.empty() && x == grid.back()) return density.back();
            return 0.0;
        }
        ensure_slopes();
        auto it = std::upper_bound(grid.begin(), grid.end(), x);
        std::size_t i = std::size_t(it - grid.begin()) - 1;
        double h = grid[i + 1] - grid[i];
        double t = (x - grid[i]) / h;
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        double h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        return h00 * density[i] + h10 * h * slopes_[i] + h01 * density[i + 1] +
               h11 * h * slopes_[i + 1];
    }

    // Trapezoid CDF with linear interpolation inside a cell.
    double cdf(double x) const {
        if (grid.empty() || x <= grid.front()) return 0.0;
        build_cdf();
        if (x >= grid.back()) return cdf_.back();
        auto it = std::upper_bound(grid.begin(), grid.end(), x);
        std::size_t i = std::size_t(it - grid.begin()) - 1;
        double dx = x - grid[i];
        double fx = density[i] + (density[i + 1] - density[i]) * dx / (grid[i + 1] - grid[i]);
        return cdf_[i] + 0.5 * (density[i] + fx) * dx;
    }

    void write_csv(std::ostream& os, const std::string& meta = "") const {
        os << "# normalized=" << (normalized_flag ? 1 : 0)
           << " normalization_residual=" << normalization_residual;
        if (!meta.empty()) os << ' ' << meta;
        os << "\nc_km,density\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            os << grid[i] << ',' << density[i] << '\n';
    }

private:
    mutable std::vector<double> slopes_;
    mutable std::vector<double> cdf_;

    void ensure_slopes() const {
        if (!slopes_.empty()) return;
        const std::size_t n = grid.size();
        slopes_.assign(n, 0.0);
        if (n < 2) return;
        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = grid[i + 1] - grid[i];
            delta[i] = (density[i + 1] - density[i]) / h[i];
        }
        slopes_[0] = delta[0];
        slopes_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0) {
                slopes_[i] = 0;
            } else {
                double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
                slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
    }

    void build_cdf() const {
        if (!cdf_.empty()) return;
        cdf_.assign(grid.size(), 0.0);
        for (std::size_t i = 1; i < grid.size(); ++i)
            cdf_[i] = cdf_[i - 1] +
                      0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    }
};

// ---------------------------------------------------------------------------
// Two disks pinned to a common boundary point: the geometry of Gilbert's
// construction for chords through the origin. Q1 = (l1, 0), Q2 = (-l2, 0),
// and the shared boundary point sits at y*angle(theta).
struct TwoDiskUnion {
    double area;
    double d_l1;
    double d_l2;
};

inline TwoDiskUnion two_disk_union_area(double l1, double l2, double y, double theta) {
    if (l1 < 0 || l2 < 0 || y < 0) throw domain_error("two_disk_union_area: negative length");
    if (theta < 0 || theta > pi) throw domain_error("two_disk_union_area: theta outside [0,pi]");
    const double ct = std::cos(theta), st = std::sin(theta);
    const double ys = y * st;
    const double p1 = l1 - y * ct;  // r1 cos(alpha1)
    const double p2 = l2 + y * ct;  // r2 cos(alpha2)
    const double r1sq = p1 * p1 + ys * ys;
    const double r2sq = p2 * p2 + ys * ys;
    const double a1 = std::atan2(ys, p1);
    const double a2 = std::atan2(ys, p2);
    double v1 = r1sq * (pi - a1) + p1 * ys;
    double v2 = r2sq * (pi - a2) + p2 * ys;
    return {v1 + v2, 2.0 * p1 * (pi - a1) + 2.0 * ys, 2.0 * p2 * (pi - a2) + 2.0 * ys};
}

// ---------------------------------------------------------------------------
// Joint density of the two residual chord segments (forward/backward distance
// from the origin to the cell boundary along a fixed line). The normalization
// constant is 2 lambda_b^3 over the half-angle domain [0, pi]: the closed-form
// check  int int f dl1 dl2 = C/(2 lambda_b^3)  pins it, and the Monte Carlo
// marginal agrees.
inline double residual_chord_joint_pdf(double l1, double l2, double lambda_b,
                                       int theta_nodes = 48) {
    if (!(l1 > 0) || !(l2 > 0)) throw domain_error("residual_chord_joint_pdf: lengths must be > 0");
    if (!(lambda_b > 0)) throw domain_error("residual_chord_joint_pdf: lambda_b must be > 0");
    static thread_local std::vector<double> xs, ws;
    static thread_local int cached_nodes = 0;
    if (cached_nodes != theta_nodes) {
        gauss_legendre(theta_nodes, xs, ws);
        cached_nodes = theta_nodes;
    }
    QuadratureSpec yspec{1e-8, 1e-14, 300, Singularity::none};
    const double y_width = 0.5 / std::sqrt(lambda_b);

    double outer = 0;
    for (int i = 0; i < theta_nodes; ++i) {
        const double theta = 0.5 * pi * (xs[std::size_t(i)] + 1.0);
        auto integrand = [&](double y) {
            TwoDiskUnion u = two_disk_union_area(l1, l2, y, theta);
            return std::exp(-lambda_b * u.area) * u.d_l1 * u.d_l2 * y;
        };
        double inner = semi_infinite_integrate(integrand, 0.0, yspec, y_width);
        outer += 0.5 * pi * ws[std::size_t(i)] * inner;
    }
    return 2.0 * lambda_b * lambda_b * lambda_b * outer;
}

// Marginal density of one residual segment (used by the Monte Carlo gate).
inline double residual_chord_marginal_pdf(double l1, double lambda_b) {
    QuadratureSpec spec{1e-7, 1e-12, 200, Singularity::none};
    return semi_infinite_integrate(
        [&](double l2) { return l2 > 0 ? residual_chord_joint_pdf(l1, l2, lambda_b) : 0.0; },
        1e-9, spec, 0.25 / std::sqrt(lambda_b));
}

inline std::vector<double> chord_grid(double lambda_b, std::size_t points = 400,
                                      double c_max_scale = 8.0) {
    std::vector<double> g(points);
    const double lo = 1e-3 / std::sqrt(lambda_b), hi = c_max_scale / std::sqrt(lambda_b);
    const double ratio = std::log(hi / lo);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo * std::exp(ratio * double(i) / double(points - 1));
    return g;
}

// PDF of the full chord through the origin (tagged chord): convolution of the
// two residual segments along l1 + l2 = c.
inline TabulatedPdf tagged_chord_pdf(double lambda_b, std::vector<double> grid = {},
                                     int conv_nodes = 24) {
    if (grid.empty()) grid = chord_grid(lambda_b);
    std::vector<double> xs, ws;
    gauss_legendre(conv_nodes, xs, ws);
    TabulatedPdf out;
    out.grid = grid;
    out.density.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double c = grid[i];
        // f(c) = int_0^c f(c - l, l) dl = 2 int_0^{c/2} by symmetry
        double s = 0;
        for (int j = 0; j < conv_nodes; ++j) {
            double l = 0.25 * c * (xs[std::size_t(j)] + 1.0);
            s += 0.25 * c * ws[std::size_t(j)] *
                 residual_chord_joint_pdf(c - l, std::max(l, 1e-12), lambda_b);
        }
        out.density[i] = 2.0 * s;
    }
    out.renormalize();
    return out;
}

// Mean typical chord length of a Poisson-Voronoi tessellation.
inline double typical_chord_mean(double lambda_b) { return pi / (4.0 * std::sqrt(lambda_b)); }

// Length-debiased typical-chord PDF: f_C(c) proportional to f_{C_o}(c) / c,
// scaled so that E[C] = pi / (4 sqrt(lambda_b)) is recovered.
inline TabulatedPdf typical_chord_pdf(double lambda_b, const TabulatedPdf& tagged) {
    TabulatedPdf out;
    out.grid = tagged.grid;
    out.density.resize(tagged.grid.size());
    const double ec = typical_chord_mean(lambda_b);
    for (std::size_t i = 0; i < tagged.grid.size(); ++i)
        out.density[i] = ec * tagged.density[i] / tagged.grid[i];
    out.renormalize();
    return out;
}

}  // namespace pvn
