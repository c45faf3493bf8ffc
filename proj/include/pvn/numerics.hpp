#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "pvn/discrete_pmf.hpp"
#include "pvn/errors.hpp"

namespace pvn {

inline constexpr double pi = 3.141592653589793238462643383279502884;

enum class Singularity { none, inverse_sqrt_upper_endpoint };

struct QuadratureSpec {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    int max_subdivisions = 2000;
    Singularity singularity_hint = Singularity::none;

    void validate() const {
        if (!(rel_tol > 0)) throw domain_error("QuadratureSpec: rel_tol must be > 0");
        if (!(abs_tol >= 0)) throw domain_error("QuadratureSpec: abs_tol must be >= 0");
        if (max_subdivisions < 1)
            throw domain_error("QuadratureSpec: max_subdivisions must be >= 1");
    }
};

namespace detail {

// Gauss-Kronrod 7-15 pair (QUADPACK nodes/weights, positive half).
constexpr double gk_node[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

inline double norm_of(double v) { return std::abs(v); }
inline double norm_of(const std::complex<double>& v) { return std::abs(v); }
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(const std::complex<double>& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

template <class F, class V = std::invoke_result_t<F, double>>
V gk15_panel(const F& f, double a, double b, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    V f0 = f(c);
    if (!finite(f0)) throw non_finite_error("integrand returned non-finite value");
    V k15 = gk_wk[7] * f0;
    V g7 = gk_wg[3] * f0;
    for (int i = 0; i < 7; ++i) {
        V fa = f(c - h * gk_node[i]);
        V fb = f(c + h * gk_node[i]);
        if (!finite(fa) || !finite(fb))
            throw non_finite_error("integrand returned non-finite value");
        V s = fa + fb;
        k15 += gk_wk[i] * s;
        if (i % 2 == 1) g7 += gk_wg[i / 2] * s;
    }
    k15 *= h;
    g7 *= h;
    err = norm_of(k15 - g7);
    // QUADPACK-style sharpening of the raw difference
    err = 200.0 * err * std::sqrt(std::min(1.0, 200.0 * err));
    return k15;
}

template <class F, class V = std::invoke_result_t<F, double>>
V adaptive_gk(const F& f, double lo, double hi, const QuadratureSpec& spec) {
    struct Panel {
        double a, b, err;
        V val;
    };
    std::vector<Panel> stack;
    double err0;
    V v0 = gk15_panel(f, lo, hi, err0);
    stack.push_back({lo, hi, err0, v0});
    int splits = 0;
    while (true) {
        V total = V{};
        double total_err = 0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < stack.size(); ++i) {
            total += stack[i].val;
            total_err += stack[i].err;
            if (stack[i].err > stack[worst].err) worst = i;
        }
        double tol = std::max(spec.abs_tol, spec.rel_tol * norm_of(total));
        if (total_err <= tol) return total;
        if (splits >= spec.max_subdivisions)
            throw non_convergence("quadrature subdivision budget exhausted",
                                  norm_of(total), total_err);
        Panel p = stack[worst];
        stack.erase(stack.begin() + std::ptrdiff_t(worst));
        double mid = 0.5 * (p.a + p.b);
        double e1, e2;
        V v1 = gk15_panel(f, p.a, mid, e1);
        V v2 = gk15_panel(f, mid, p.b, e2);
        stack.push_back({p.a, mid, e1, v1});
        stack.push_back({mid, p.b, e2, v2});
        ++splits;
    }
}

}  // namespace detail

// Adaptive integration of f over [lo, hi]. With
// Singularity::inverse_sqrt_upper_endpoint the substitution t = hi*sin(theta)
// removes a 1/sqrt(hi - t) endpoint blow-up exactly (requires 0 <= lo <= hi).
template <class F, class V = std::invoke_result_t<F, double>>
V integrate(const F& f, double lo, double hi, const QuadratureSpec& spec = {}) {
    spec.validate();
    if (!(lo <= hi)) throw domain_error("integrate: lo must be <= hi");
    if (lo == hi) return V{};
    if (spec.singularity_hint == Singularity::inverse_sqrt_upper_endpoint) {
        if (lo < 0 || hi <= 0)
            throw domain_error("inverse_sqrt_upper_endpoint needs 0 <= lo < hi");
        const double th0 = std::asin(std::min(1.0, lo / hi));
        QuadratureSpec inner = spec;
        inner.singularity_hint = Singularity::none;
        auto g = [&](double th) {
            return f(hi * std::sin(th)) * (hi * std::cos(th));
        };
        return detail::adaptive_gk(g, th0, std::asin(1.0), inner);
    }
    return detail::adaptive_gk(f, lo, hi, spec);
}

// Integral over [lo, inf) by panel doubling: panels [lo, lo+h], [lo+h, lo+3h],
// ... stop once the latest panel is below tolerance. All integrands here decay
// at least exponentially, so the stop is a reliable tail bound.
template <class F, class V = std::invoke_result_t<F, double>>
V semi_infinite_integrate(const F& f, double lo, const QuadratureSpec& spec = {},
                          double initial_width = 1.0) {
    spec.validate();
    if (!(initial_width > 0)) throw domain_error("initial_width must be > 0");
    V total{};
    double a = lo, h = initial_width;
    for (int k = 0; k < 60; ++k) {
        V panel = integrate(f, a, a + h, spec);
        total += panel;
        double tol = std::max(spec.abs_tol, spec.rel_tol * detail::norm_of(total));
        if (k > 0 && detail::norm_of(panel) < tol) return total;
        a += h;
        h *= 2;
    }
    throw non_convergence("semi-infinite doubling cap (60) exceeded",
                          detail::norm_of(total), detail::norm_of(total));
}

// ---------------------------------------------------------------------------
// Complete Bell polynomials.

// B_0..B_k via the binomial recurrence B_{n+1} = sum_i C(n,i) B_{n-i} x_{i+1}.
// Throws overflow_error instead of silently saturating; callers can retry with
// complete_bell_log.
inline std::vector<double> complete_bell(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) throw non_finite_error("complete_bell: non-finite input");
    const std::size_t k = x.size();
    std::vector<double> b(k + 1);
    b[0] = 1.0;
    std::vector<double> binom{1.0};  // row C(n, .)
    for (std::size_t n = 0; n + 1 <= k; ++n) {
        double s = 0;
        for (std::size_t i = 0; i <= n; ++i) s += binom[i] * b[n - i] * x[i];
        if (!std::isfinite(s))
            throw overflow_error("complete_bell: value exceeds floating range");
        b[n + 1] = s;
        binom.push_back(1.0);
        for (std::size_t i = n; i >= 1; --i) binom[i] += binom[i - 1];
    }
    return b;
}

// Sign + log-magnitude value for the log-space Bell recurrence.
struct signed_log {
    double log_abs = -std::numeric_limits<double>::infinity();
    int sign = 0;  // -1, 0, +1

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
    static signed_log from(double v) {
        if (v == 0) return {};
        return {std::log(std::abs(v)), v > 0 ? 1 : -1};
    }
};

// Log-space variant: exact against overflow, log-sum-exp over the recurrence.
inline std::vector<signed_log> complete_bell_log(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) throw non_finite_error("complete_bell_log: non-finite input");
    const std::size_t k = x.size();
    std::vector<signed_log> b(k + 1);
    b[0] = {0.0, 1};
    std::vector<signed_log> lx(k);
    for (std::size_t i = 0; i < k; ++i) lx[i] = signed_log::from(x[i]);

    std::vector<double> term_log(k + 1);
    std::vector<int> term_sign(k + 1);
    for (std::size_t n = 0; n + 1 <= k; ++n) {
        double mx = -std::numeric_limits<double>::infinity();
        std::size_t cnt = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            if (lx[i].sign == 0 || b[n - i].sign == 0) continue;
            double lc = std::lgamma(double(n) + 1) - std::lgamma(double(i) + 1) -
                        std::lgamma(double(n - i) + 1);
            term_log[cnt] = lc + b[n - i].log_abs + lx[i].log_abs;
            term_sign[cnt] = b[n - i].sign * lx[i].sign;
            mx = std::max(mx, term_log[cnt]);
            ++cnt;
        }
        if (cnt == 0) {
            b[n + 1] = {};
            continue;
        }
        double acc = 0;
        for (std::size_t j = 0; j < cnt; ++j)
            acc += term_sign[j] * std::exp(term_log[j] - mx);
        if (acc == 0)
            b[n + 1] = {};
        else
            b[n + 1] = {mx + std::log(std::abs(acc)), acc > 0 ? 1 : -1};
    }
    return b;
}

// ---------------------------------------------------------------------------
// PGF inversion on the unit circle (trapezoidal / roots-of-unity oracle).

struct PgfInvertOptions {
    double abs_tol = 1e-9;        // aliasing budget governing N
    double pgf_at_one_tol = 1e-6;
};

// p(k) = (1/N) sum_j pgf(w^j) w^{-jk}, N = next power of two >= 4*n_max.
// Independent of every derivative-based path, so it doubles as an oracle.
inline DiscretePmf pgf_invert(const std::function<std::complex<double>(std::complex<double>)>& pgf,
                              std::size_t n_max, PgfInvertOptions opt = {}) {
    if (n_max < 1) throw domain_error("pgf_invert: n_max must be >= 1");
    std::size_t n_pts = 8;
    while (n_pts < 4 * n_max) n_pts *= 2;

    std::complex<double> at_one = pgf(std::complex<double>(1.0, 0.0));
    if (std::abs(at_one - 1.0) > opt.pgf_at_one_tol)
        throw invalid_pgf_error("pgf_invert: |pgf(1) - 1| exceeds tolerance");

    // Conjugate symmetry: evaluate only the upper half circle.
    const std::size_t half = n_pts / 2;
    std::vector<std::complex<double>> vals(half + 1);
    const double dtheta = 2.0 * std::asin(1.0) * 2.0 / double(n_pts);  // 2*pi/N
    for (std::size_t j = 0; j <= half; ++j) {
        double th = dtheta * double(j);
        vals[j] = pgf(std::complex<double>(std::cos(th), std::sin(th)));
        if (!detail::finite(vals[j]))
            throw non_finite_error("pgf_invert: pgf returned non-finite value");
    }

    std::vector<double> p(n_pts);
    for (std::size_t k = 0; k < n_pts; ++k) {
        double acc = vals[0].real();
        double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        acc += sgn * vals[half].real();
        for (std::size_t j = 1; j < half; ++j) {
            double th = dtheta * double(j) * double(k);
            acc += 2.0 * (vals[j].real() * std::cos(th) + vals[j].imag() * std::sin(th));
        }
        p[k] = acc / double(n_pts);
    }

    double clamped = 0, pos_sum = 0;
    for (double& v : p) {
        if (v < 0) {
            clamped -= v;
            v = 0;
        }
        pos_sum += v;
    }
    if (pos_sum > 0)
        for (double& v : p) v /= pos_sum;

    DiscretePmf out;
    out.provenance = DiscretePmf::Provenance::pgf_inversion;
    out.clamped_mass = clamped;
    out.masses.assign(p.begin(), p.begin() + std::ptrdiff_t(std::min(n_max + 1, n_pts)));
    out.tail_mass = 0;
    for (std::size_t k = n_max + 1; k < n_pts; ++k) out.tail_mass += p[k];
    return out;
}

// ---------------------------------------------------------------------------
// Small numeric helpers shared across modules.

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(std::size_t(n));
    weights.resize(std::size_t(n));
    const double pi = 2.0 * std::asin(1.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = 0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[std::size_t(i)] = -x;
        nodes[std::size_t(n - 1 - i)] = x;
        weights[std::size_t(i)] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[std::size_t(n - 1 - i)] = weights[std::size_t(i)];
    }
}

// Regularized lower incomplete gamma P(a,x) (series / continued fraction).
inline double gamma_p(double a, double x) {
    if (x < 0 || a <= 0) throw domain_error("gamma_p: requires a > 0, x >= 0");
    if (x == 0) return 0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Lentz continued fraction for Q(a,x)
    const double tiny = 1e-300;
    double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

}  // namespace pvn
