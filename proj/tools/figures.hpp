#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pvn/coverage.hpp"
#include "pvn/montecarlo.hpp"
#include "pvn/validation.hpp"

namespace pvn::figures {

inline constexpr const char* version = "pvn 0.1.0";

struct FigOptions {
    std::string out_dir = ".";
    std::uint64_t seed = 20260810;
    bool quick = false;
    int threads = 0;
};

namespace detail {

inline std::string meta_line(const NetworkParams& p, std::uint64_t seed,
                             const std::string& extra = "") {
    nlohmann::json j = p;
    std::ostringstream os;
    os << "# " << version << " seed=" << seed << " params=" << j.dump();
    if (!extra.empty()) os << ' ' << extra;
    return os.str();
}

inline std::ofstream open_csv(const FigOptions& o, const std::string& name) {
    std::ofstream f(o.out_dir + "/" + name);
    if (!f) throw config_error("cannot write " + o.out_dir + "/" + name);
    return f;
}

struct SweepCtx {
    std::map<double, TabulatedPdf> chords;
    const TabulatedPdf& chord(double lb) {
        auto it = chords.find(lb);
        if (it == chords.end())
            it = chords.emplace(lb, tagged_chord_pdf(lb, chord_grid(lb, 220), 14)).first;
        return it->second;
    }
};

inline NetworkParams paper_defaults(double mu = 15.0) {
    NetworkParams p;
    p.lambda_L = 5.0 / pi;
    p.lambda_P = 1.0;
    p.m = mu;
    p.a = 0.25;
    p.lambda_b = 5.0;
    p.lambda_npts = mu;
    p.alpha = 3.5;
    p.bandwidth = 20e6;
    return p;
}

}  // namespace detail

// Bhattacharyya validation of the load approximations against simulation.
inline void figure3(const FigOptions& o) {
    detail::SweepCtx ctx;
    auto ms = o.quick ? std::vector<double>{5.0, 15.0} : std::vector<double>{5.0, 10.0, 15.0, 20.0};
    auto lbs = o.quick ? std::vector<double>{5.0} : std::vector<double>{5.0, 10.0};
    const std::int64_t cap = o.quick ? 20000 : 100000;

    auto f = detail::open_csv(o, "figure3.csv");
    f << detail::meta_line(detail::paper_defaults(), o.seed, "replication_cap=" + std::to_string(cap))
      << "\nm,lambda_b,bc_typical,bc_tagged\n";
    std::uint64_t stream = 0;
    for (double lb : lbs)
        for (double m : ms) {
            NetworkParams p = detail::paper_defaults(m);
            p.lambda_b = lb;
            auto typical = typical_load_approx(p, 256, 150, 48);
            SimConfig cfg;
            cfg.params = p;
            cfg.threads = o.threads;
            cfg.seed = {o.seed, 1000 + stream++};
            auto emp_t = acceptance::detail::run_until_bc_stable(
                cfg, typical.pmf, 10000, cap,
                [](const SimConfig& c) { return simulate_typical_load(c); });
            auto tagged = tagged_load_pmf(p, ctx.chord(lb), 256, 150, 48);
            cfg.seed = {o.seed, 1000 + stream++};
            auto emp_g = acceptance::detail::run_until_bc_stable(
                cfg, tagged.pmf, 10000, cap,
                [](const SimConfig& c) { return simulate_tagged_load(c); });
            f << m << ',' << lb << ',' << bhattacharyya(typical.pmf, emp_t) << ','
              << bhattacharyya(tagged.pmf, emp_g) << '\n';
        }
}

// Mean/variance of the typical (a) and tagged (b) loads vs per-road density.
inline void figure4(const FigOptions& o) {
    detail::SweepCtx ctx;
    auto mus = o.quick ? std::vector<double>{5.0, 15.0}
                       : std::vector<double>{5.0, 10.0, 15.0, 20.0, 25.0};
    const std::vector<double> a_grid{0.05, 0.25, 1.0};

    NetworkParams base = detail::paper_defaults();
    base.lambda_L = 5.0;  // figure-4 road density

    auto fa = detail::open_csv(o, "figure4a.csv");
    fa << detail::meta_line(base, o.seed) << "\nmu,mean";
    for (double a : a_grid) fa << ",var_a" << int(a * 1000) << "m";
    fa << ",var_npts\n";
    auto fb = detail::open_csv(o, "figure4b.csv");
    fb << detail::meta_line(base, o.seed) << "\nmu";
    for (double a : a_grid) fb << ",mean_a" << int(a * 1000) << "m,var_a" << int(a * 1000) << "m";
    fb << ",mean_npts,var_npts\n";

    const std::size_t n_max = 384;
    for (double mu : mus) {
        NetworkParams p = base;
        p.m = mu;
        p.lambda_npts = mu;
        fa << mu << ',' << p.lambda_m() / p.lambda_b;
        for (double a : a_grid) {
            NetworkParams q = p;
            q.a = a;
            fa << ',' << typical_load_approx(q, 64, 100, 32).variance;
        }
        fa << ',' << npts_typical_load(p, 64, 100, 32).variance << '\n';

        fb << mu;
        for (double a : a_grid) {
            NetworkParams q = p;
            q.a = a;
            auto t = tagged_load_pmf(q, ctx.chord(q.lambda_b), n_max, 120, 40);
            fb << ',' << t.mean << ',' << t.variance;
        }
        auto tn = npts_tagged_load(p, ctx.chord(p.lambda_b), n_max, 120, 40);
        fb << ',' << tn.mean << ',' << tn.variance << '\n';
    }
}

// Off probability vs density, and the active-load / underload trade-off.
inline void figure5(const FigOptions& o) {
    auto f = detail::open_csv(o, "figure5a.csv");
    NetworkParams base = detail::paper_defaults();
    f << detail::meta_line(base, o.seed) << "\nmu,p_off_pts,p_off_npts\n";
    auto mus = o.quick ? std::vector<double>{5.0, 15.0, 25.0}
                       : std::vector<double>{2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
    for (double mu : mus) {
        NetworkParams p = detail::paper_defaults(mu);
        f << mu << ',' << 1.0 - p_on_typical(p, Scenario::PTS, 120) << ','
          << 1.0 - p_on_typical(p, Scenario::NPTS, 120) << '\n';
    }

    auto g = detail::open_csv(o, "figure5b.csv");
    g << detail::meta_line(base, o.seed)
      << "\nlambda_b,s_avg_pts,p_less_pts,s_avg_npts,p_less_npts\n";
    auto lbs = o.quick ? std::vector<double>{2.0, 5.0, 15.0}
                       : std::vector<double>{2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
    detail::SweepCtx ctx;
    for (double lb : lbs) {
        NetworkParams p = detail::paper_defaults();
        p.lambda_b = lb;
        auto typ = typical_load_approx(p, 192, 120, 40);
        auto tag = tagged_load_pmf(p, ctx.chord(lb), 192, 120, 40);
        auto m_pts = operational_metrics(typ, tag);
        auto typn = npts_typical_load(p, 192, 120, 40);
        auto tagn = npts_tagged_load(p, ctx.chord(lb), 192, 120, 40);
        auto m_npts = operational_metrics(typn, tagn);
        g << lb << ',' << m_pts.s_avg << ',' << m_pts.p_less << ',' << m_npts.s_avg << ','
          << m_npts.p_less << '\n';
    }
}

// Underload probability vs BS density, active BS density, and off probability.
inline void figure6(const FigOptions& o) {
    auto f = detail::open_csv(o, "figure6.csv");
    NetworkParams base = detail::paper_defaults();
    f << detail::meta_line(base, o.seed)
      << "\nlambda_b,p_less_pts,p_less_npts,active_pts,active_npts,p_off_pts,p_off_npts\n";
    auto lbs = o.quick ? std::vector<double>{2.0, 5.0, 15.0}
                       : std::vector<double>{2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
    detail::SweepCtx ctx;
    for (double lb : lbs) {
        NetworkParams p = detail::paper_defaults();
        p.lambda_b = lb;
        auto typ = typical_load_approx(p, 192, 120, 40);
        auto tag = tagged_load_pmf(p, ctx.chord(lb), 192, 120, 40);
        auto typn = npts_typical_load(p, 192, 120, 40);
        auto tagn = npts_tagged_load(p, ctx.chord(lb), 192, 120, 40);
        auto mp = operational_metrics(typ, tag);
        auto mn = operational_metrics(typn, tagn);
        f << lb << ',' << mp.p_less << ',' << mn.p_less << ',' << typ.p_on * lb << ','
          << typn.p_on * lb << ',' << 1.0 - typ.p_on << ',' << 1.0 - typn.p_on << '\n';
    }
}

// Tagged-cell balance: single-user probability, mean tagged load, safe regime.
inline void figure7(const FigOptions& o) {
    detail::SweepCtx ctx;
    {
        auto f = detail::open_csv(o, "figure7a.csv");
        NetworkParams base = detail::paper_defaults();
        base.lambda_L = 2.0;
        f << detail::meta_line(base, o.seed)
          << "\nmu,P1_pts_lb10,P1_npts_lb10,P1_pts_lb5,P1_npts_lb5\n";
        auto mus = o.quick ? std::vector<double>{5.0, 15.0}
                           : std::vector<double>{2.0, 3.0, 5.0, 8.0, 10.0, 15.0};
        for (double mu : mus) {
            f << mu;
            for (double lb : {10.0, 5.0}) {
                NetworkParams p = base;
                p.m = mu;
                p.lambda_npts = mu;
                p.lambda_b = lb;
                auto pts = tagged_load_pmf(p, ctx.chord(lb), 192, 100, 40);
                auto npts = npts_tagged_load(p, ctx.chord(lb), 192, 100, 40);
                f << ',' << pts.pmf.p(1) << ',' << npts.pmf.p(1);
            }
            f << '\n';
        }
    }
    {
        auto f = detail::open_csv(o, "figure7bc.csv");
        NetworkParams base = detail::paper_defaults();
        f << detail::meta_line(base, o.seed)
          << "\nlambda_b,m_avg_pts,P_less_pts,m_avg_npts,P_less_npts\n";
        auto lbs = o.quick ? std::vector<double>{2.0, 5.0, 15.0}
                           : std::vector<double>{2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
        for (double lb : lbs) {
            NetworkParams p = detail::paper_defaults();
            p.lambda_b = lb;
            auto typ = typical_load_approx(p, 192, 120, 40);
            auto tag = tagged_load_pmf(p, ctx.chord(lb), 192, 120, 40);
            auto typn = npts_typical_load(p, 192, 120, 40);
            auto tagn = npts_tagged_load(p, ctx.chord(lb), 192, 120, 40);
            auto mp = operational_metrics(typ, tag);
            auto mn = operational_metrics(typn, tagn);
            f << lb << ',' << mp.m_avg << ',' << mp.P_less << ',' << mn.m_avg << ','
              << mn.P_less << '\n';
        }
    }
}

// Rate coverage vs BS density and vs active BS density.
inline void figure8(const FigOptions& o) {
    detail::SweepCtx ctx;
    auto f = detail::open_csv(o, "figure8.csv");
    NetworkParams base = detail::paper_defaults();
    f << detail::meta_line(base, o.seed)
      << "\nlambda_b,tau_bps,r_c_pts,err_pts,r_c_npts,err_npts,active_pts,active_npts\n";
    auto lbs = o.quick ? std::vector<double>{2.0, 5.0, 12.0}
                       : std::vector<double>{2.0, 3.0, 5.0, 8.0, 12.0, 20.0, 30.0};
    for (double lb : lbs) {
        NetworkParams p = detail::paper_defaults();
        p.lambda_b = lb;
        auto tag = tagged_load_pmf(p, ctx.chord(lb), 256, 120, 40);
        auto tagn = npts_tagged_load(p, ctx.chord(lb), 256, 120, 40);
        double pon = p_on_typical(p, Scenario::PTS, 120);
        double ponn = p_on_typical(p, Scenario::NPTS, 120);
        for (double tau : {0.5e6, 2e6}) {
            auto rc = rate_coverage(tau, p.bandwidth, p.alpha, tag.pmf, pon);
            auto rcn = rate_coverage(tau, p.bandwidth, p.alpha, tagn.pmf, ponn);
            f << lb << ',' << tau << ',' << rc.value << ',' << rc.error_bracket << ','
              << rcn.value << ',' << rcn.error_bracket << ',' << pon * lb << ',' << ponn * lb
              << '\n';
        }
    }
}

inline void write_figure(int n, const FigOptions& o) {
    switch (n) {
        case 3: figure3(o); return;
        case 4: figure4(o); return;
        case 5: figure5(o); return;
        case 6: figure6(o); return;
        case 7: figure7(o); return;
        case 8: figure8(o); return;
        default: throw config_error("figure id must be 3..8");
    }
}

}  // namespace pvn::figures
