#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "pvn/counts.hpp"

using namespace pvn;
using Catch::Approx;

namespace {

NetworkParams fig3_params(double m = 15.0) {
    NetworkParams p;
    p.lambda_L = 5.0 / pi;
    p.lambda_P = 1.0;
    p.m = m;
    p.a = 0.25;
    p.lambda_b = 5.0;
    p.lambda_npts = m;
    return p;
}

// Independent variance oracle: 2 pi lambda_L int_0^r (kappa(t,1)^2 + kappa(t,2))
// t/sqrt(r^2-t^2) dt + mean, evaluated by adaptive quadrature.
double variance_oracle(double r, const NetworkParams& p) {
    QuadratureSpec qs;
    qs.rel_tol = 1e-12;
    qs.abs_tol = 1e-14;
    qs.singularity_hint = Singularity::inverse_sqrt_upper_endpoint;
    double extra = integrate(
        [&](double t) {
            double k1 = kappa(t, 1, p), k2 = kappa(t, 2, p);
            return (k1 * k1 + k2) * t / std::sqrt(std::max(1e-300, r * r - t * t));
        },
        0.0, r, qs);
    return p.lambda_m() * pi * r * r + 2.0 * pi * p.lambda_L * extra;
}

}  // namespace

TEST_CASE("mcp_line_count_pgf: trivial anchors") {
    auto p = fig3_params();
    CHECK(mcp_line_count_pgf(1.0, 0.5, 0.2, p) == Approx(1.0).margin(1e-12));
    CHECK(mcp_line_count_pgf(0.3, 0.5, 0.5, p) == Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(mcp_line_count_pgf(0.3, 0.5, 0.6, p), domain_error);
}

TEST_CASE("count_pgf: normalization at s=1") {
    auto p = fig3_params();
    for (double r : {0.1, 0.25, 0.5, 1.0})
        CHECK(count_pgf(1.0, r, p) == Approx(1.0).margin(1e-9));
}

TEST_CASE("count_pgf: finite-difference mean equals lambda_m pi r^2") {
    auto p = fig3_params();
    for (double r : {0.1, 0.25, 0.5, 1.0}) {
        double h = 1e-6;
        double mean_fd = (count_pgf(1.0 + h, r, p) - count_pgf(1.0 - h, r, p)) / (2.0 * h);
        CHECK(mean_fd == Approx(p.lambda_m() * pi * r * r).epsilon(1e-3));
    }
}

TEST_CASE("count_pgf: maps [0,1] into (0,1], nondecreasing, convex") {
    auto p = fig3_params(5.0);
    const double r = 0.5;
    double prev = 0.0, prev_slope = -1.0;
    bool first = true, first_slope = true;
    for (double s = 0.0; s <= 1.0001; s += 0.05) {
        double v = count_pgf(std::min(s, 1.0), r, p);
        CHECK(v > 0.0);
        CHECK(v <= 1.0 + 1e-12);
        if (!first) {
            double slope = v - prev;
            CHECK(slope >= -1e-12);
            if (!first_slope) CHECK(slope >= prev_slope - 1e-9);
            prev_slope = slope;
            first_slope = false;
        }
        prev = v;
        first = false;
    }
}

TEST_CASE("count_pmf: k=0 anchor, normalization, inversion equivalence") {
    auto p = fig3_params(5.0);
    const double r = 0.5;
    auto pmf = count_pmf(r, p);
    CHECK(pmf.provenance == DiscretePmf::Provenance::bell);
    CHECK(pmf.masses[0] == Approx(count_pgf(0.0, r, p)).margin(1e-9));
    CHECK(pmf.total_mass() == Approx(1.0).margin(1e-6));

    auto inv = pgf_invert([&](std::complex<double> s) { return count_pgf(s, r, p); },
                          pmf.n_max());
    for (std::size_t k = 0; k <= pmf.n_max(); ++k)
        CHECK(pmf.masses[k] == Approx(inv.masses[k]).margin(1e-6));
}

TEST_CASE("count_pmf: explicit Bell-polynomial route agrees (printed derivative form)") {
    // Small parameters so the literal factorial-bearing form stays in range.
    auto p = fig3_params(3.0);
    const double r = 0.3;
    const int n_top = 14;

    QuadratureSpec qs;
    qs.rel_tol = 1e-11;
    qs.abs_tol = 1e-13;
    qs.singularity_hint = Singularity::inverse_sqrt_upper_endpoint;

    std::vector<double> fm(n_top);
    for (int k = 1; k <= n_top; ++k) {
        fm[std::size_t(k - 1)] =
            2.0 * pi * p.lambda_L *
            integrate(
                [&](double t) {
                    auto gd = std::vector<double>(std::size_t(k), 0.0);
                    for (int j = 1; j <= k; ++j)
                        gd[std::size_t(j - 1)] = g_derivative(j, 0.0, t, p);
                    auto bell = complete_bell(gd);
                    return std::exp(g_kernel(0.0, t, p)) * bell[std::size_t(k)] * t /
                           std::sqrt(std::max(1e-300, r * r - t * t));
                },
                0.0, r, qs);
    }
    auto bell_outer = complete_bell(fm);
    double p0 = count_pgf(0.0, r, p);

    auto pmf = count_pmf(r, p, std::size_t(n_top));
    for (int n = 0; n <= n_top; ++n) {
        double expect = (n == 0) ? p0
                                 : p0 * bell_outer[std::size_t(n)] /
                                       std::exp(std::lgamma(double(n) + 1.0));
        CHECK(pmf.masses[std::size_t(n)] == Approx(expect).margin(1e-9));
    }
}

TEST_CASE("count_mean_var: variance branches against the quadrature oracle") {
    auto p = fig3_params();
    for (double r : {0.1, 0.2, 0.25, 0.4, 0.8, 1.5}) {
        auto [mean, var] = count_mean_var(r, p);
        CHECK(mean == Approx(p.lambda_m() * pi * r * r).epsilon(1e-12));
        CHECK(var == Approx(variance_oracle(r, p)).epsilon(1e-8));
        CHECK(var >= mean);  // clustering over-dispersion
    }
}

TEST_CASE("count_mean_var: branch continuity at a = r") {
    const double r = 0.4;
    NetworkParams lo = fig3_params(), hi = fig3_params();
    lo.a = r * (1.0 - 1e-12);
    hi.a = r;
    double v_lo = count_mean_var(r, lo).second;
    double v_hi = count_mean_var(r, hi).second;
    CHECK(v_lo == Approx(v_hi).epsilon(1e-9));
}

TEST_CASE("count_mean_var: over-dispersion across a parameter grid") {
    for (double m : {2.0, 8.0, 20.0})
        for (double a : {0.05, 0.25, 2.0})
            for (double r : {0.1, 0.5, 1.0}) {
                auto p = fig3_params(m);
                p.a = a;
                auto [mean, var] = count_mean_var(r, p);
                CHECK(var >= mean - 1e-9);
            }
}

TEST_CASE("count variance converges to the non-platooned value as a grows") {
    auto p = fig3_params();
    p.a = 10.0;
    p.lambda_npts = p.m * p.lambda_P;
    const double r = 0.5;
    double v_pts = count_mean_var(r, p).second;
    double v_npts = npts_count_mean_var(r, p).second;
    CHECK(std::abs(v_pts - v_npts) / v_npts < 0.05);
}

TEST_CASE("palm_count_pgf: normalization and mean") {
    auto p = fig3_params();
    for (double r : {0.1, 0.2, 0.25}) {
        CHECK(palm_count_pgf(1.0, r, p) == Approx(1.0).margin(1e-9));
        double h = 1e-6;
        double mean_fd =
            (palm_count_pgf(1.0 + h, r, p) - palm_count_pgf(1.0 - h, r, p)) / (2.0 * h);
        double expect = p.lambda_m() * pi * r * r + 2.0 * p.lambda_P * p.m * r +
                        p.lambda_d() * (2.0 * r - r * r / (2.0 * p.a));
        CHECK(mean_fd == Approx(expect).epsilon(1e-3));
        CHECK(palm_count_mean(r, p) == Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("palm_count_pgf: palm mean dominates the unconditioned mean") {
    auto p = fig3_params();
    for (double r : {0.05, 0.25, 0.5, 1.0})
        CHECK(palm_count_mean(r, p) >= p.lambda_m() * pi * r * r);
}

TEST_CASE("palm_count_pmf: anchors and cross-oracle equivalence") {
    auto p = fig3_params(5.0);
    const double r = 0.2;
    auto pmf = palm_count_pmf(r, p);
    double f3_at_0 = palm_cluster_pgf(0.0, r, p);
    double expect0 = count_pgf(0.0, r, p) * std::exp(g_kernel(0.0, r, p)) * f3_at_0;
    CHECK(pmf.masses[0] == Approx(expect0).margin(1e-9));
    CHECK(pmf.total_mass() == Approx(1.0).margin(1e-6));
    CHECK(pmf.mean() + pmf.tail_mass * double(pmf.n_max()) ==
          Approx(palm_count_mean(r, p)).epsilon(2e-3));

    auto inv = pgf_invert([&](std::complex<double> s) { return palm_count_pgf(s, r, p); },
                          pmf.n_max());
    for (std::size_t k = 0; k <= pmf.n_max(); ++k)
        CHECK(pmf.masses[k] == Approx(inv.masses[k]).margin(1e-6));
}

TEST_CASE("palm_cluster_pgf: piecewise closed form vs direct quadrature") {
    auto p = fig3_params();
    QuadratureSpec qs;
    qs.rel_tol = 1e-12;
    for (double r : {0.1, 0.25, 0.3, 0.6}) {
        for (double s : {0.0, 0.4, 0.9}) {
            auto f = [&](double x) {
                return std::exp((s - 1.0) * p.lambda_d() * lens_1d(r, p.a, x));
            };
            // split the oracle at the lens kink so its own error is negligible
            double kink = std::clamp(std::abs(r - p.a), 0.0, p.a);
            double direct =
                (integrate(f, 0.0, kink, qs) + integrate(f, kink, p.a, qs)) / p.a;
            CHECK(palm_cluster_pgf(s, r, p) == Approx(direct).epsilon(1e-9));
        }
    }
}

TEST_CASE("npts count: normalization, mean, pmf mass") {
    auto p = fig3_params();
    const double r = 0.5;
    CHECK(npts_count_pgf(1.0, r, p) == Approx(1.0).margin(1e-9));
    double h = 1e-6;
    double mean_fd = (npts_count_pgf(1.0 + h, r, p) - npts_count_pgf(1.0 - h, r, p)) / (2 * h);
    CHECK(mean_fd == Approx(p.kappa_density() * pi * r * r).epsilon(1e-3));
    auto pmf = npts_count_pmf(r, p);
    CHECK(pmf.total_mass() == Approx(1.0).margin(1e-6));
    CHECK(pmf.masses[0] == Approx(npts_count_pgf(0.0, r, p)).margin(1e-9));
}

TEST_CASE("laplace_functional: zero function and indicator reduction") {
    auto p = fig3_params(5.0);
    CHECK(laplace_functional([](double, double) { return 0.0; }, p, 0.5) ==
          Approx(1.0).margin(1e-9));

    const double c = 0.7, r = 0.5;
    double lf = laplace_functional(
        [&](double x, double y) { return (x * x + y * y <= r * r) ? c : 0.0; }, p, r);
    double expect = count_pgf(std::exp(-c), r, p);
    CHECK(lf == Approx(expect).margin(1e-6));
}
