#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "pvn/discrete_pmf.hpp"
#include "pvn/errors.hpp"
#include "pvn/numerics.hpp"

namespace pvn {

// Same integral routed through the substitution z = u^{(alpha-2)/2}, which
// maps it onto a smooth integral over [0,1]; kept as an independent check.
inline double sir_integral_alt(double tau, double alpha) {
    if (tau <= 0) return 0.0;
    QuadratureSpec spec{1e-12, 1e-14, 2000, Singularity::none};
    const double expo = alpha / (alpha - 2.0);
    return 2.0 / (alpha - 2.0) *
           integrate([&](double z) { return tau / (1.0 + tau * std::pow(z, expo)); }, 0.0,
                     1.0, spec);
}

// J(tau, alpha) = int_1^inf dt / (1 + t^{alpha/2}/tau): the interference
// integral of the Rayleigh/nearest-BS coverage expression.
inline double sir_integral(double tau, double alpha) {
    if (!(alpha > 2)) throw domain_error("sir_integral: alpha must be > 2");
    if (tau <= 0) return 0.0;
    // the integrand decays like t^{-alpha/2}, so start the doubling at the
    // crossover scale tau^{2/alpha}; the relative-contribution stop then
    // converges within the doubling cap for alpha >= 3
    QuadratureSpec spec{1e-11, 1e-13, 2000, Singularity::none};
    const double width = std::max(2.0, std::pow(tau, 2.0 / alpha));
    auto f = [&](double t) { return 1.0 / (1.0 + std::pow(t, alpha / 2.0) / tau); };
    try {
        return semi_infinite_integrate(f, 1.0, spec, width);
    } catch (const non_convergence&) {
        // polynomial tails near alpha = 2 outrun the doubling budget; the
        // bounded-interval transform is exact there
        return sir_integral_alt(tau, alpha);
    }
}

// P(SIR > tau) for the typical user with partially loaded BSs: interferers are
// the active fraction p_on of the serving process.
inline double sir_coverage(double tau_sir, double p_on, double alpha) {
    if (tau_sir < 0) throw domain_error("sir_coverage: tau must be >= 0");
    if (p_on < 0 || p_on > 1) throw domain_error("sir_coverage: p_on in [0,1]");
    if (tau_sir == 0 || p_on == 0) return 1.0;
    // J grows like tau^{2/alpha}; past the double range the coverage is zero
    if (!std::isfinite(tau_sir) || tau_sir > 1e280) return 0.0;
    return 1.0 / (1.0 + p_on * sir_integral(tau_sir, alpha));
}

struct RateCoverageResult {
    double value;
    double error_bracket;   // half-width from the truncated load tail
    std::size_t k_truncation;
};

// Rate coverage: mixture of SIR coverages over the tagged-BS load, with the
// per-user bandwidth share folding the load into the SIR threshold
// gamma_k = 2^{(k+1) tau / B} - 1. The residual load tail is bracketed
// pessimistically (no coverage) and optimistically (last term's coverage).
inline RateCoverageResult rate_coverage(double tau_rate, double bandwidth, double alpha,
                                        const DiscretePmf& tagged_load, double p_on) {
    if (!(tau_rate >= 0)) throw domain_error("rate_coverage: tau must be >= 0");
    if (!(bandwidth > 0)) throw domain_error("rate_coverage: bandwidth must be > 0");
    constexpr std::size_t cap = 512;
    double acc = 0, covered_mass = 0, last_cov = 1.0;
    std::size_t k = 0;
    for (; k < tagged_load.masses.size() && k <= cap; ++k) {
        double mass = tagged_load.masses[k];
        double gamma = std::exp2(double(k + 1) * tau_rate / bandwidth) - 1.0;
        last_cov = sir_coverage(gamma, p_on, alpha);
        acc += mass * last_cov;
        covered_mass += mass;
        if (1.0 - covered_mass < 1e-5) {
            ++k;
            break;
        }
    }
    double residual = std::max(0.0, 1.0 - covered_mass);
    double lo = acc, hi = acc + residual * last_cov;
    return {0.5 * (lo + hi), 0.5 * (hi - lo), k};
}

struct RateCoverageCurve {
    std::vector<double> thresholds;  // bit/s
    std::vector<double> r_c;
    std::vector<double> bracket;
    std::size_t k_truncation = 0;

    void write_csv(std::ostream& os, const std::string& meta = "") const {
        os << "# k_truncation=" << k_truncation;
        if (!meta.empty()) os << ' ' << meta;
        os << "\ntau_bps,r_c,err_bracket\n";
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            os << thresholds[i] << ',' << r_c[i] << ',' << bracket[i] << '\n';
    }
};

inline RateCoverageCurve rate_coverage_curve(const std::vector<double>& taus, double bandwidth,
                                             double alpha, const DiscretePmf& tagged_load,
                                             double p_on) {
    RateCoverageCurve curve;
    curve.thresholds = taus;
    for (double tau : taus) {
        auto r = rate_coverage(tau, bandwidth, alpha, tagged_load, p_on);
        curve.r_c.push_back(r.value);
        curve.bracket.push_back(r.error_bracket);
        curve.k_truncation = std::max(curve.k_truncation, r.k_truncation);
    }
    return curve;
}

}  // namespace pvn
