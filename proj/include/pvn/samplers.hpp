#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include <json.hpp>

#include "pvn/kernels.hpp"
#include "pvn/rng.hpp"

namespace pvn {

// Line in Hesse normal form: the normal from the origin has length |rho| and
// direction phi. Scalar coordinates on the line are measured from the base
// point (rho cos phi, rho sin phi).
struct LineAtom {
    double rho;
    double phi;  // [0, pi)
};

struct Point2 {
    double x, y;
};

inline Point2 line_point(const LineAtom& l, double u) {
    const double c = std::cos(l.phi), s = std::sin(l.phi);
    return {l.rho * c + u * s, l.rho * s - u * c};
}

struct VehicleRealization {
    struct Vehicle {
        std::int32_t line_id;
        std::int32_t platoon_id;
        double offset;  // scalar position on the line
        Point2 pos;
    };

    std::vector<LineAtom> lines;
    std::vector<Vehicle> vehicles;
    RngSeed seed;
    double window_radius = 0;
    bool palm = false;            // typical vehicle at the origin (not listed)
    std::int32_t tagged_line = -1;

    void write_csv(std::ostream& os) const {
        os << "# seed=" << seed.seed << " stream=" << seed.stream_id
           << " window_radius_km=" << window_radius << " palm=" << (palm ? 1 : 0) << "\n";
        os << "line_id,platoon_id,x_km,y_km\n";
        for (const auto& v : vehicles)
            os << v.line_id << ',' << v.platoon_id << ',' << v.pos.x << ',' << v.pos.y << '\n';
    }

    nlohmann::json to_json() const {
        nlohmann::json jl = nlohmann::json::array();
        for (const auto& l : lines) jl.push_back({{"rho", l.rho}, {"phi", l.phi}});
        nlohmann::json jv = nlohmann::json::array();
        for (const auto& v : vehicles)
            jv.push_back({{"line_id", v.line_id},
                          {"platoon_id", v.platoon_id},
                          {"x_km", v.pos.x},
                          {"y_km", v.pos.y}});
        return {{"seed", seed.seed},
                {"stream_id", seed.stream_id},
                {"window_radius_km", window_radius},
                {"palm", palm},
                {"tagged_line", tagged_line},
                {"lines", jl},
                {"vehicles", jv}};
    }
};

namespace detail {

inline int poisson_draw(rng_stream& rng, double mean) {
    if (mean <= 0) return 0;
    std::poisson_distribution<int> d(mean);
    return d(rng);
}

}  // namespace detail

// Homogeneous 2D PPP in a disk of the given radius around the origin.
inline std::vector<Point2> sample_ppp_2d(double density, double window_radius,
                                         rng_stream& rng) {
    std::vector<Point2> pts;
    const int n = detail::poisson_draw(rng, density * pi * window_radius * window_radius);
    pts.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        double r = window_radius * std::sqrt(rng.uniform());
        double th = rng.uniform(0.0, 2.0 * pi);
        pts.push_back({r * std::cos(th), r * std::sin(th)});
    }
    return pts;
}

// Poisson line process restricted to lines meeting the disk b2(center, R).
// The L-space intensity is lambda_L * drho * dphi over R x [0,pi), so the
// number of lines hitting a disk of radius R is Poisson(2 pi lambda_L R),
// i.e. lambda_L times the perimeter, which is what reproduces the vehicle
// density lambda_m = m lambda_P lambda_L pi downstream.
inline std::vector<LineAtom> sample_plp(double lambda_L, double window_radius,
                                        rng_stream& rng, Point2 center = {0.0, 0.0}) {
    std::vector<LineAtom> lines;
    const int n = detail::poisson_draw(rng, lambda_L * pi * 2.0 * window_radius);
    lines.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        double phi = rng.uniform(0.0, pi);
        double rho = rng.uniform(-window_radius, window_radius) +
                     center.x * std::cos(phi) + center.y * std::sin(phi);
        lines.push_back({rho, phi});
    }
    return lines;
}

// Per-line sampling guard: parents this far beyond the kept interval are
// still sampled so clusters straddling the boundary are represented.
inline double mcp_guard(const NetworkParams& p) {
    return std::max(p.a, 3.0 / p.lambda_P);
}

// 1D Matern cluster process on [lo, hi]: parent PPP(lambda_P) on the guarded
// interval, Poisson(m) daughters uniform within +-a of each parent. emit is
// called as emit(platoon_id, position) for every daughter inside [lo, hi].
template <class Emit>
void sample_mcp_interval(const NetworkParams& p, double lo, double hi, double guard,
                         rng_stream& rng, Emit&& emit) {
    if (hi <= lo) return;
    const double plo = lo - guard, phi_ = hi + guard;
    const int n_parents = detail::poisson_draw(rng, p.lambda_P * (phi_ - plo));
    for (int j = 0; j < n_parents; ++j) {
        double xp = rng.uniform(plo, phi_);
        if (xp + p.a < lo || xp - p.a > hi) continue;  // cluster cannot reach
        const int nd = detail::poisson_draw(rng, p.m);
        for (int k = 0; k < nd; ++k) {
            double x = xp + rng.uniform(-p.a, p.a);
            if (x >= lo && x <= hi) emit(j, x);
        }
    }
}

inline std::vector<double> sample_mcp_1d(const NetworkParams& p, double interval_half_length,
                                         rng_stream& rng) {
    std::vector<double> xs;
    sample_mcp_interval(p, -interval_half_length, interval_half_length, mcp_guard(p), rng,
                        [&](int, double x) { xs.push_back(x); });
    return xs;
}

// 1D PPP on [lo, hi] (per-road traffic in the non-platooned scenario).
template <class Emit>
void sample_ppp_interval(double density, double lo, double hi, rng_stream& rng, Emit&& emit) {
    if (hi <= lo) return;
    const int n = detail::poisson_draw(rng, density * (hi - lo));
    for (int k = 0; k < n; ++k) emit(0, rng.uniform(lo, hi));
}

// Platooned vehicles on a Poisson road layout inside a disk window.
inline VehicleRealization sample_plp_mcp(const NetworkParams& p, double window_radius,
                                         RngSeed seed, Point2 center = {0.0, 0.0}) {
    rng_stream rng(seed);
    VehicleRealization out;
    out.seed = seed;
    out.window_radius = window_radius;
    out.lines = sample_plp(p.lambda_L, window_radius, rng, center);
    const double guard = mcp_guard(p);
    for (std::size_t i = 0; i < out.lines.size(); ++i) {
        const LineAtom& l = out.lines[i];
        // signed distance of the line from the window center along its normal
        double d = l.rho - center.x * std::cos(l.phi) - center.y * std::sin(l.phi);
        double chord = std::sqrt(std::max(0.0, window_radius * window_radius - d * d));
        // chord midpoint in scalar coordinates on the line
        double mid = center.x * std::sin(l.phi) - center.y * std::cos(l.phi);
        sample_mcp_interval(p, mid - chord, mid + chord, guard, rng, [&](int pj, double u) {
            out.vehicles.push_back({std::int32_t(i), pj, u, line_point(l, u)});
        });
    }
    return out;
}

// Non-platooned counterpart: independent 1D PPP(lambda_npts) per road.
inline VehicleRealization sample_plp_ppp(const NetworkParams& p, double window_radius,
                                         RngSeed seed) {
    rng_stream rng(seed);
    VehicleRealization out;
    out.seed = seed;
    out.window_radius = window_radius;
    out.lines = sample_plp(p.lambda_L, window_radius, rng);
    for (std::size_t i = 0; i < out.lines.size(); ++i) {
        const LineAtom& l = out.lines[i];
        double chord = std::sqrt(std::max(0.0, window_radius * window_radius - l.rho * l.rho));
        sample_ppp_interval(p.lambda_npts, -chord, chord, rng, [&](int pj, double u) {
            out.vehicles.push_back({std::int32_t(i), pj, u, line_point(l, u)});
        });
    }
    return out;
}

// Palm version: an independent copy of the process, plus an independent MCP on
// a tagged line through the origin, plus the residual cluster of the typical
// vehicle whose parent is uniform within +-a of the origin. The typical
// vehicle itself sits at the origin and is not listed.
inline VehicleRealization sample_palm_plp_mcp(const NetworkParams& p, double window_radius,
                                              RngSeed seed) {
    rng_stream rng(seed);
    VehicleRealization out;
    out.seed = seed;
    out.window_radius = window_radius;
    out.palm = true;
    out.lines = sample_plp(p.lambda_L, window_radius, rng);
    const double guard = mcp_guard(p);
    for (std::size_t i = 0; i < out.lines.size(); ++i) {
        const LineAtom& l = out.lines[i];
        double chord = std::sqrt(std::max(0.0, window_radius * window_radius - l.rho * l.rho));
        sample_mcp_interval(p, -chord, chord, guard, rng, [&](int pj, double u) {
            out.vehicles.push_back({std::int32_t(i), pj, u, line_point(l, u)});
        });
    }

    LineAtom tagged{0.0, rng.uniform(0.0, pi)};
    out.tagged_line = std::int32_t(out.lines.size());
    out.lines.push_back(tagged);
    sample_mcp_interval(p, -window_radius, window_radius, guard, rng, [&](int pj, double u) {
        out.vehicles.push_back({out.tagged_line, pj, u, line_point(tagged, u)});
    });

    // residual cluster of the typical vehicle
    double xo = rng.uniform(-p.a, p.a);
    const int nd = detail::poisson_draw(rng, p.m);
    for (int k = 0; k < nd; ++k) {
        double u = xo + rng.uniform(-p.a, p.a);
        if (std::abs(u) <= window_radius)
            out.vehicles.push_back({out.tagged_line, -1, u, line_point(tagged, u)});
    }
    return out;
}

}  // namespace pvn
