// Command-line front end: parameter configs, experiment subcommands,
// figure-data generation, and the validation suite runner.
//
// Exit codes: 0 ok, 2 usage/config error, 3 numerical failure, 4 validation
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pvn/coverage.hpp"
#include "pvn/montecarlo.hpp"
#include "pvn/validation.hpp"
#include "figures.hpp"

namespace {

using namespace pvn;

constexpr const char* kVersion = "pvn 0.1.0";

struct Common {
    std::string config;
    std::string out = ".";
    NetworkParams params;
    std::uint64_t seed = 20260810;
    std::uint64_t stream = 0;
    int threads = 0;

    // flag-provided overrides (flags beat the config file, which beats defaults)
    std::map<std::string, double> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON file with model parameters");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--seed", c.seed, "base RNG seed");
    cmd->add_option("--stream", c.stream, "RNG stream id");
    cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    for (const char* f : {"lambda-L", "lambda-P", "m", "a", "lambda-b", "lambda-npts",
                          "alpha", "bandwidth"}) {
        std::string name = f;
        cmd->add_option_function<double>(
            "--" + name, [&c, name](double v) { c.overrides[name] = v; },
            "override model parameter " + name);
    }
}

void finalize_params(Common& c) {
    if (!c.config.empty()) {
        std::ifstream in(c.config);
        if (!in) throw config_error("cannot open config file: " + c.config);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw config_error(std::string("config parse error: ") + e.what());
        }
        c.params = j.get<NetworkParams>();
    }
    auto set = [&](const char* k, double& field) {
        auto it = c.overrides.find(k);
        if (it != c.overrides.end()) field = it->second;
    };
    set("lambda-L", c.params.lambda_L);
    set("lambda-P", c.params.lambda_P);
    set("m", c.params.m);
    set("a", c.params.a);
    set("lambda-b", c.params.lambda_b);
    set("lambda-npts", c.params.lambda_npts);
    set("alpha", c.params.alpha);
    set("bandwidth", c.params.bandwidth);
    c.params.validate();
    std::filesystem::create_directories(c.out);
}

std::string meta(const Common& c, const std::string& extra = "") {
    nlohmann::json j = c.params;
    std::ostringstream os;
    os << kVersion << " seed=" << c.seed << " stream=" << c.stream << " params=" << j.dump();
    if (!extra.empty()) os << ' ' << extra;
    return os.str();
}

std::ofstream open_out(const Common& c, const std::string& name) {
    std::ofstream f(c.out + "/" + name);
    if (!f) throw config_error("cannot write " + c.out + "/" + name);
    f.precision(12);
    return f;
}

const TabulatedPdf& chord_table(double lambda_b) {
    static std::map<double, TabulatedPdf> cache;
    auto it = cache.find(lambda_b);
    if (it == cache.end())
        it = cache.emplace(lambda_b, tagged_chord_pdf(lambda_b, chord_grid(lambda_b, 260), 16))
                 .first;
    return it->second;
}

// --- pmf ---------------------------------------------------------------

int cmd_pmf(Common& c, const std::string& kind, double r, std::size_t n_max) {
    finalize_params(c);
    DiscretePmf pmf;
    nlohmann::json extra;
    if (kind == "count") {
        pmf = count_pmf(r, c.params, n_max);
        extra["r_km"] = r;
        extra["mean_expected"] = c.params.lambda_m() * pi * r * r;
    } else if (kind == "palm-count") {
        pmf = palm_count_pmf(r, c.params, n_max);
        extra["r_km"] = r;
        extra["mean_expected"] = palm_count_mean(r, c.params);
    } else if (kind == "npts-count") {
        pmf = npts_count_pmf(r, c.params, n_max);
        extra["r_km"] = r;
    } else if (kind == "typical-load") {
        auto load = typical_load_approx(c.params, n_max ? n_max : 256);
        pmf = load.pmf;
        extra = load.to_json();
    } else if (kind == "typical-load-exact") {
        auto f_c = typical_chord_pdf(c.params.lambda_b, chord_table(c.params.lambda_b));
        auto load = typical_load_exact(c.params, f_c, n_max ? n_max : 256);
        pmf = load.pmf;
        extra = load.to_json();
    } else if (kind == "tagged-load") {
        auto load = tagged_load_pmf(c.params, chord_table(c.params.lambda_b), n_max ? n_max : 256);
        pmf = load.pmf;
        extra = load.to_json();
    } else if (kind == "npts-typical-load") {
        auto load = npts_typical_load(c.params, n_max ? n_max : 256);
        pmf = load.pmf;
        extra = load.to_json();
    } else if (kind == "npts-tagged-load") {
        auto load = npts_tagged_load(c.params, chord_table(c.params.lambda_b), n_max ? n_max : 256);
        pmf = load.pmf;
        extra = load.to_json();
    } else {
        throw config_error("unknown pmf kind: " + kind);
    }
    auto csv = open_out(c, kind + ".csv");
    pmf.write_csv(csv, meta(c));
    auto js = open_out(c, kind + ".json");
    nlohmann::json j = pmf.to_json();
    j["params"] = c.params;
    j["kind"] = kind;
    j["extra"] = extra;
    j["mean"] = pmf.mean();
    j["variance"] = pmf.variance();
    js << j.dump(2) << "\n";
    std::cout << "wrote " << c.out << "/" << kind << ".csv (mass "
              << pmf.total_mass() << ", mean " << pmf.mean() << ")\n";
    return 0;
}

// --- chord ---------------------------------------------------------------

int cmd_chord(Common& c, std::size_t grid_points) {
    finalize_params(c);
    auto tagged = tagged_chord_pdf(c.params.lambda_b, chord_grid(c.params.lambda_b, grid_points));
    auto typical = typical_chord_pdf(c.params.lambda_b, tagged);
    auto f1 = open_out(c, "tagged_chord.csv");
    tagged.write_csv(f1, meta(c, "lambda_b=" + std::to_string(c.params.lambda_b)));
    auto f2 = open_out(c, "typical_chord.csv");
    typical.write_csv(f2, meta(c, "lambda_b=" + std::to_string(c.params.lambda_b)));
    std::cout << "wrote chord tables: E[C_o]=" << tagged.moment(1)
              << " E[C]=" << typical.moment(1) << "\n";
    return 0;
}

// --- load ---------------------------------------------------------------

int cmd_load(Common& c, const std::string& scenario, std::size_t n_max) {
    finalize_params(c);
    Scenario sc = scenario == "npts" ? Scenario::NPTS : Scenario::PTS;
    const auto& f_co = chord_table(c.params.lambda_b);
    LoadSummary typical = (sc == Scenario::PTS) ? typical_load_approx(c.params, n_max)
                                                : npts_typical_load(c.params, n_max);
    LoadSummary tagged = (sc == Scenario::PTS)
                             ? tagged_load_pmf(c.params, f_co, n_max)
                             : npts_tagged_load(c.params, f_co, n_max);
    auto metrics = operational_metrics(typical, tagged);

    auto t1 = open_out(c, "typical_load.csv");
    typical.pmf.write_csv(t1, meta(c, "cell=typical scenario=" + scenario));
    auto t2 = open_out(c, "tagged_load.csv");
    tagged.pmf.write_csv(t2, meta(c, "cell=tagged scenario=" + scenario));
    auto js = open_out(c, "load_summary.json");
    js << nlohmann::json{{"params", c.params},
                         {"scenario", scenario},
                         {"typical", typical.to_json()},
                         {"tagged", tagged.to_json()},
                         {"metrics",
                          {{"s_avg", metrics.s_avg},
                           {"p_less", metrics.p_less},
                           {"P1", metrics.P1},
                           {"m_avg", metrics.m_avg},
                           {"P_less", metrics.P_less}}}}
              .dump(2)
       << "\n";
    std::cout << "typical mean " << typical.mean << ", tagged mean " << tagged.mean
              << ", p_on " << typical.p_on << "\n";
    return 0;
}

// --- coverage ---------------------------------------------------------------

int cmd_coverage(Common& c, const std::string& scenario, std::vector<double> taus) {
    finalize_params(c);
    if (taus.empty()) taus = {0.25e6, 0.5e6, 1e6, 2e6, 4e6};
    Scenario sc = scenario == "npts" ? Scenario::NPTS : Scenario::PTS;
    const auto& f_co = chord_table(c.params.lambda_b);
    DiscretePmf tagged = (sc == Scenario::PTS)
                             ? tagged_load_pmf(c.params, f_co, 256).pmf
                             : npts_tagged_load(c.params, f_co, 256).pmf;
    double pon = p_on_typical(c.params, sc);
    auto curve = rate_coverage_curve(taus, c.params.bandwidth, c.params.alpha, tagged, pon);
    auto f = open_out(c, "rate_coverage.csv");
    curve.write_csv(f, meta(c, "scenario=" + scenario + " p_on=" + std::to_string(pon)));
    std::cout << "wrote rate_coverage.csv (" << taus.size() << " thresholds, p_on=" << pon
              << ")\n";
    return 0;
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(Common& c, const std::string& mode, std::int64_t reps, double window,
                 double guard, double ball_radius, const std::string& scenario, bool pooled,
                 const std::string& silencing, double p_on_flag,
                 std::vector<double> sir_taus) {
    finalize_params(c);
    SimConfig cfg;
    cfg.params = c.params;
    cfg.replications = reps;
    cfg.window_radius = window;
    cfg.guard_margin = guard;
    cfg.ball_radius = ball_radius;
    cfg.seed = {c.seed, c.stream};
    cfg.threads = c.threads;
    cfg.pooled = pooled;
    cfg.scenario = scenario == "npts" ? Scenario::NPTS : Scenario::PTS;
    cfg.silencing = silencing == "load-coupled" ? SimConfig::Silencing::load_coupled
                                                : SimConfig::Silencing::thinned;

    auto write_hist = [&](const EmpiricalDistribution& emp, const std::string& name) {
        auto f = open_out(c, name + ".csv");
        emp.write_csv(f, meta(c, "mode=" + mode));
        auto js = open_out(c, name + ".json");
        nlohmann::json j = emp.to_json();
        j["params"] = c.params;
        j["mode"] = mode;
        js << j.dump(2) << "\n";
        std::cout << name << ": reps=" << emp.replications << " mean=" << emp.mean()
                  << " wall=" << emp.wall_seconds << "s\n";
    };

    if (mode == "typical-load") {
        cfg.mode = SimConfig::Mode::typical_load;
        write_hist(simulate_typical_load(cfg), "sim_typical_load");
    } else if (mode == "tagged-load") {
        cfg.mode = SimConfig::Mode::tagged_load;
        write_hist(simulate_tagged_load(cfg), "sim_tagged_load");
    } else if (mode == "palm-count") {
        cfg.mode = SimConfig::Mode::palm_count;
        write_hist(simulate_palm_count(cfg), "sim_palm_count");
    } else if (mode == "void") {
        cfg.mode = SimConfig::Mode::void_probability;
        auto emp = simulate_ball_count(cfg);
        write_hist(emp, "sim_ball_count");
        std::cout << "void probability: " << double(emp.counts[0]) / double(emp.replications)
                  << "\n";
    } else if (mode == "sir") {
        cfg.mode = SimConfig::Mode::sir;
        cfg.p_on = p_on_flag >= 0 ? p_on_flag : p_on_typical(c.params, cfg.scenario);
        auto sir = simulate_sir(cfg);
        if (sir_taus.empty()) sir_taus = {0.25, 0.5, 1.0, 2.0, 4.0};
        auto f = open_out(c, "sim_sir.csv");
        f << "# " << meta(c, "mode=sir p_on=" + std::to_string(cfg.p_on) +
                                 " silencing=" + silencing)
          << "\ntau,coverage\n";
        for (double tau : sir_taus) {
            double cov = 0;
            for (double s : sir) cov += (s > tau);
            f << tau << ',' << cov / double(sir.size()) << '\n';
        }
        std::cout << "wrote sim_sir.csv (" << sir.size() << " samples)\n";
    } else {
        throw config_error("unknown simulate mode: " + mode);
    }
    return 0;
}

// --- snapshot (vehicle realization export) -----------------------------------

int cmd_snapshot(Common& c, double window, bool palm, const std::string& scenario) {
    finalize_params(c);
    double R = window > 0 ? window : 10.0 / std::sqrt(c.params.lambda_b) + 4.0 * c.params.a;
    VehicleRealization real =
        palm ? sample_palm_plp_mcp(c.params, R, {c.seed, c.stream})
             : (scenario == "npts" ? sample_plp_ppp(c.params, R, {c.seed, c.stream})
                                   : sample_plp_mcp(c.params, R, {c.seed, c.stream}));
    auto f = open_out(c, "realization.csv");
    real.write_csv(f);
    auto js = open_out(c, "realization.json");
    js << real.to_json().dump(2) << "\n";
    std::cout << "wrote realization with " << real.vehicles.size() << " vehicles on "
              << real.lines.size() << " roads\n";
    return 0;
}

// --- figure ---------------------------------------------------------------

int cmd_figure(Common& c, int n, bool quick) {
    finalize_params(c);
    figures::FigOptions o;
    o.out_dir = c.out;
    o.seed = c.seed;
    o.quick = quick;
    o.threads = c.threads;
    figures::write_figure(n, o);
    std::cout << "wrote figure " << n << " data tables to " << c.out << "\n";
    return 0;
}

// --- validate ---------------------------------------------------------------

int cmd_validate(Common& c, bool quick, bool tamper, const std::string& report) {
    finalize_params(c);
    acceptance::Options opt;
    opt.quick = quick;
    opt.seed = c.seed;
    opt.threads = c.threads;
    if (tamper) opt.tolerance_scale = 1e-3;  // harness check: impossible gates
    auto results = acceptance::run_all(opt, &std::cout);
    bool pass = true;
    for (const auto& r : results) pass = pass && r.pass;
    if (!report.empty()) {
        std::ofstream f(report);
        f << acceptance::report_json(results, opt).dump(2) << "\n";
    }
    return pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"platooned vehicular network analysis toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common c;

    auto* pmf = app.add_subcommand("pmf", "analytic count/load PMFs");
    std::string pmf_kind = "count";
    double pmf_r = 0.5;
    std::size_t pmf_nmax = 0;
    pmf->add_option("--kind", pmf_kind,
                    "count|palm-count|npts-count|typical-load|typical-load-exact|tagged-load|"
                    "npts-typical-load|npts-tagged-load");
    pmf->add_option("--r", pmf_r, "ball radius in km (count kinds)");
    pmf->add_option("--n-max", pmf_nmax, "PMF truncation (0 = automatic)");
    add_common(pmf, c);

    auto* chord = app.add_subcommand("chord", "Poisson-Voronoi chord length tables");
    std::size_t grid_points = 400;
    chord->add_option("--grid-points", grid_points, "table resolution");
    add_common(chord, c);

    auto* load = app.add_subcommand("load", "per-BS load summaries and metrics");
    std::string load_scenario = "pts";
    std::size_t load_nmax = 256;
    load->add_option("--scenario", load_scenario, "pts|npts");
    load->add_option("--n-max", load_nmax, "PMF truncation");
    add_common(load, c);

    auto* cov = app.add_subcommand("coverage", "rate coverage curves");
    std::string cov_scenario = "pts";
    std::vector<double> cov_taus;
    cov->add_option("--scenario", cov_scenario, "pts|npts");
    cov->add_option("--taus", cov_taus, "rate thresholds in bit/s")->delimiter(',');
    add_common(cov, c);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiments");
    std::string sim_mode = "typical-load", sim_scenario = "pts", sim_silencing = "thinned";
    std::int64_t sim_reps = 100000;
    double sim_window = 0, sim_guard = 0, sim_ball = 0.25, sim_pon = -1;
    bool sim_pooled = false;
    std::vector<double> sim_taus;
    sim->add_option("--mode", sim_mode, "typical-load|tagged-load|palm-count|void|sir");
    sim->add_option("--reps", sim_reps, "replications");
    sim->add_option("--window", sim_window, "window radius km (0 = default)");
    sim->add_option("--guard", sim_guard, "guard margin km (0 = default)");
    sim->add_option("--ball-radius", sim_ball, "ball radius for palm-count/void");
    sim->add_option("--scenario", sim_scenario, "pts|npts");
    sim->add_flag("--pooled", sim_pooled, "histogram every interior BS");
    sim->add_option("--silencing", sim_silencing, "thinned|load-coupled");
    sim->add_option("--p-on", sim_pon, "thinning probability (-1 = analytic)");
    sim->add_option("--sir-taus", sim_taus, "SIR thresholds")->delimiter(',');
    add_common(sim, c);

    auto* snap = app.add_subcommand("snapshot", "export one vehicle realization");
    double snap_window = 0;
    bool snap_palm = false;
    std::string snap_scenario = "pts";
    snap->add_option("--window", snap_window, "window radius km (0 = default)");
    snap->add_flag("--palm", snap_palm, "condition on a typical vehicle at the origin");
    snap->add_option("--scenario", snap_scenario, "pts|npts");
    add_common(snap, c);

    auto* fig = app.add_subcommand("figure", "data tables for the study figures");
    int fig_n = 4;
    bool fig_quick = false;
    fig->add_option("--n", fig_n, "figure id in 3..8")->required();
    fig->add_flag("--quick", fig_quick, "reduced grids and replications");
    add_common(fig, c);

    auto* val = app.add_subcommand("validate", "run the acceptance criteria");
    bool val_quick = false, val_tamper = false;
    std::string val_report;
    val->add_flag("--quick", val_quick, "reduced replication counts");
    val->add_flag("--tamper", val_tamper, "tighten every gate (harness self-check)")
        ->group("");  // hidden
    val->add_option("--report", val_report, "write the machine-readable report here");
    add_common(val, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (pmf->parsed()) return cmd_pmf(c, pmf_kind, pmf_r, pmf_nmax);
        if (chord->parsed()) return cmd_chord(c, grid_points);
        if (load->parsed()) return cmd_load(c, load_scenario, load_nmax);
        if (cov->parsed()) return cmd_coverage(c, cov_scenario, cov_taus);
        if (sim->parsed())
            return cmd_simulate(c, sim_mode, sim_reps, sim_window, sim_guard, sim_ball,
                                sim_scenario, sim_pooled, sim_silencing, sim_pon, sim_taus);
        if (snap->parsed()) return cmd_snapshot(c, snap_window, snap_palm, snap_scenario);
        if (fig->parsed()) return cmd_figure(c, fig_n, fig_quick);
        if (val->parsed()) return cmd_validate(c, val_quick, val_tamper, val_report);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const non_convergence& e) {
        std::cerr << "numerical failure: " << e.what() << " (estimate " << e.estimate
                  << ", bound " << e.error_bound << ")\n";
        return 3;
    } catch (const normalization_failure& e) {
        std::cerr << "numerical failure: " << e.what() << " (integral "
                  << e.measured_integral << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
