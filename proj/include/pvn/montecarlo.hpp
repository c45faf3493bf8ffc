#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pvn/discrete_pmf.hpp"
#include "pvn/kernels.hpp"
#include "pvn/loads.hpp"
#include "pvn/samplers.hpp"

namespace pvn {

// ---------------------------------------------------------------------------
// Histogram of integer outcomes with seed provenance.
struct EmpiricalDistribution {
    std::vector<std::int64_t> counts;
    std::int64_t replications = 0;
    RngSeed seed;
    double window_radius = 0;
    bool pooled = false;
    double wall_seconds = 0;

    void add(std::size_t k) {
        if (k >= counts.size()) counts.resize(k + 1, 0);
        ++counts[k];
        ++replications;
    }

    void merge(const EmpiricalDistribution& other) {
        if (other.counts.size() > counts.size()) counts.resize(other.counts.size(), 0);
        for (std::size_t i = 0; i < other.counts.size(); ++i) counts[i] += other.counts[i];
        replications += other.replications;
    }

    double mean() const {
        double s = 0;
        for (std::size_t k = 0; k < counts.size(); ++k) s += double(k) * double(counts[k]);
        return s / double(replications);
    }
    double variance() const {
        double mu = mean(), s = 0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            double d = double(k) - mu;
            s += d * d * double(counts[k]);
        }
        return s / double(replications - 1);
    }
    double std_error_of_mean() const { return std::sqrt(variance() / double(replications)); }

    DiscretePmf to_pmf() const {
        DiscretePmf p;
        p.provenance = DiscretePmf::Provenance::empirical;
        p.masses.resize(counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k)
            p.masses[k] = double(counts[k]) / double(replications);
        p.tail_mass = 0;
        return p;
    }

    void write_csv(std::ostream& os, const std::string& meta = "") const {
        os << "# replications=" << replications << " seed=" << seed.seed
           << " stream=" << seed.stream_id << " window_radius_km=" << window_radius
           << " pooled=" << (pooled ? 1 : 0) << " wall_seconds=" << wall_seconds;
        if (!meta.empty()) os << ' ' << meta;
        os << "\nk,count\n";
        for (std::size_t k = 0; k < counts.size(); ++k) os << k << ',' << counts[k] << '\n';
    }

    nlohmann::json to_json() const {
        return {{"counts", counts},        {"replications", replications},
                {"seed", seed.seed},       {"stream_id", seed.stream_id},
                {"window_radius", window_radius}, {"pooled", pooled},
                {"wall_seconds", wall_seconds}};
    }
};

// Bhattacharyya overlap between an analytic PMF and a normalized histogram.
inline double bhattacharyya(const DiscretePmf& p, const EmpiricalDistribution& q) {
    double s = 0;
    const double n = double(q.replications);
    const std::size_t top = std::max(p.masses.size(), q.counts.size());
    for (std::size_t k = 0; k < top; ++k) {
        double pk = k < p.masses.size() ? p.masses[k] : 0.0;
        double qk = k < q.counts.size() ? double(q.counts[k]) / n : 0.0;
        s += std::sqrt(pk * qk);
    }
    return s;
}

inline double bhattacharyya(const DiscretePmf& p, const DiscretePmf& q) {
    double s = 0;
    const std::size_t top = std::max(p.masses.size(), q.masses.size());
    for (std::size_t k = 0; k < top; ++k) s += std::sqrt(p.p(k) * q.p(k));
    return s;
}

// ---------------------------------------------------------------------------
struct SimConfig {
    NetworkParams params;
    enum class Mode { typical_load, tagged_load, palm_count, sir, void_probability };
    Mode mode = Mode::typical_load;
    double window_radius = 0;  // 0: default 10/sqrt(lambda_b) + 4a
    double guard_margin = 0;   // 0: default 2/sqrt(lambda_b) + a
    std::int64_t replications = 100000;
    RngSeed seed;
    Scenario scenario = Scenario::PTS;
    bool pooled = false;            // typical_load: histogram every interior BS
    double ball_radius = 0.25;      // palm_count / void modes
    enum class Silencing { thinned, load_coupled };
    Silencing silencing = Silencing::thinned;
    double p_on = 1.0;              // thinned silencing
    int threads = 0;                // 0: hardware concurrency

    double effective_window() const {
        double w = window_radius > 0
                       ? window_radius
                       : 10.0 / std::sqrt(params.lambda_b) + 4.0 * params.a;
        return std::max(w, 5.0 * std::max({1.0 / std::sqrt(params.lambda_b), params.a,
                                           1.0 / params.lambda_P}));
    }
    double effective_guard() const {
        double g = guard_margin > 0 ? guard_margin
                                    : 2.0 / std::sqrt(params.lambda_b) + params.a;
        return std::max(g, std::max(params.a, 2.0 / std::sqrt(params.lambda_b)));
    }

    void validate() const {
        params.validate();
        if (replications < 1) throw config_error("SimConfig: replications must be >= 1");
        if (effective_window() <= effective_guard())
            throw config_error("SimConfig: window must exceed the guard margin");
        if (mode == Mode::palm_count || mode == Mode::void_probability)
            if (!(ball_radius > 0)) throw config_error("SimConfig: ball_radius must be > 0");
    }
};

namespace mc_detail {

// Uniform-grid spatial index for nearest-point queries over one realization.
class NearestGrid {
public:
    void build(const std::vector<Point2>& pts, double extent, double target_cell) {
        pts_ = &pts;
        extent_ = extent;
        n_ = std::max(1, int(2.0 * extent / target_cell));
        n_ = std::min(n_, 512);
        cell_ = 2.0 * extent / n_;
        offsets_.assign(std::size_t(n_) * std::size_t(n_) + 1, 0);
        ids_.resize(pts.size());
        for (const auto& q : pts) ++offsets_[std::size_t(index(q.x, q.y)) + 1];
        for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
        std::vector<int> cursor(offsets_.begin(), offsets_.end() - 1);
        for (int i = 0; i < int(pts.size()); ++i) {
            int c = index(pts[std::size_t(i)].x, pts[std::size_t(i)].y);
            ids_[std::size_t(cursor[std::size_t(c)]++)] = i;
        }
    }

    // index of the nearest point, -1 if the set is empty
    int nearest(double x, double y) const {
        if (pts_->empty()) return -1;
        const int cx = clampi(int((x + extent_) / cell_));
        const int cy = clampi(int((y + extent_) / cell_));
        int best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int ring = 0; ring < 2 * n_; ++ring) {
            // once a candidate exists, stop when the ring cannot improve on it
            if (best >= 0) {
                double ring_dist = (double(ring) - 1.0) * cell_;
                if (ring_dist > 0 && ring_dist * ring_dist > best_d2) break;
            }
            bool any_cell = false;
            for (int dx = -ring; dx <= ring; ++dx)
                for (int dy = -ring; dy <= ring; ++dy) {
                    if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                    int gx = cx + dx, gy = cy + dy;
                    if (gx < 0 || gx >= n_ || gy < 0 || gy >= n_) continue;
                    any_cell = true;
                    int c = gx * n_ + gy;
                    for (int k = offsets_[std::size_t(c)]; k < offsets_[std::size_t(c) + 1];
                         ++k) {
                        const Point2& q = (*pts_)[std::size_t(ids_[std::size_t(k)])];
                        double d2 = (q.x - x) * (q.x - x) + (q.y - y) * (q.y - y);
                        if (d2 < best_d2) {
                            best_d2 = d2;
                            best = ids_[std::size_t(k)];
                        }
                    }
                }
            if (!any_cell && best >= 0) break;
        }
        return best;
    }

    double distance2(int id, double x, double y) const {
        const Point2& q = (*pts_)[std::size_t(id)];
        return (q.x - x) * (q.x - x) + (q.y - y) * (q.y - y);
    }

private:
    int clampi(int v) const { return std::clamp(v, 0, n_ - 1); }
    int index(double x, double y) const {
        return clampi(int((x + extent_) / cell_)) * n_ + clampi(int((y + extent_) / cell_));
    }
    const std::vector<Point2>* pts_ = nullptr;
    double extent_ = 0, cell_ = 1;
    int n_ = 1;
    std::vector<int> offsets_, ids_;
};

// Platooned vehicles restricted to lines meeting b2(focus, keep_radius); only
// daughters inside that disk and inside the overall window are emitted. Lines
// farther from the focus cannot carry points into the disk, so the restriction
// is distribution-exact for any statistic of points within keep_radius.
template <class Emit>
void visit_vehicles_near(const NetworkParams& p, Scenario sc, Point2 focus,
                         double keep_radius, double window_radius, rng_stream& rng,
                         Emit&& emit) {
    const int n_lines = detail::poisson_draw(rng, p.lambda_L * pi * 2.0 * keep_radius);
    const double guard = mcp_guard(p);
    const double keep2 = keep_radius * keep_radius;
    const double win2 = window_radius * window_radius;
    for (int i = 0; i < n_lines; ++i) {
        double phi = rng.uniform(0.0, pi);
        double nx = std::cos(phi), ny = std::sin(phi);
        double base = focus.x * nx + focus.y * ny;
        double rho = rng.uniform(-keep_radius, keep_radius) + base;
        LineAtom l{rho, phi};
        double d = rho - base;
        double chord = std::sqrt(std::max(0.0, keep2 - d * d));
        double mid = focus.x * ny - focus.y * nx;  // scalar coord closest to focus
        auto emit_pt = [&](int pj, double u) {
            Point2 q = line_point(l, u);
            double fx = q.x - focus.x, fy = q.y - focus.y;
            if (fx * fx + fy * fy > keep2) return;
            if (q.x * q.x + q.y * q.y > win2) return;
            emit(i, pj, q);
        };
        if (sc == Scenario::PTS)
            sample_mcp_interval(p, mid - chord, mid + chord, guard, rng, emit_pt);
        else
            sample_ppp_interval(p.lambda_npts, mid - chord, mid + chord, rng, emit_pt);
    }
}

// Palm extras around the origin: tagged line through o plus the residual
// cluster of the typical vehicle (typical vehicle itself not emitted).
template <class Emit>
void visit_palm_extras(const NetworkParams& p, double keep_radius, rng_stream& rng,
                       Emit&& emit) {
    LineAtom tagged{0.0, rng.uniform(0.0, pi)};
    sample_mcp_interval(p, -keep_radius, keep_radius, mcp_guard(p), rng,
                        [&](int pj, double u) { emit(-1, pj, line_point(tagged, u)); });
    double xo = rng.uniform(-p.a, p.a);
    const int nd = detail::poisson_draw(rng, p.m);
    for (int k = 0; k < nd; ++k) {
        double u = xo + rng.uniform(-p.a, p.a);
        if (std::abs(u) <= keep_radius) emit(-1, -1, line_point(tagged, u));
    }
}

// N-PTS palm extras: the tagged line carries an independent 1D PPP (the
// reduced Palm law of a PPP is the process itself).
template <class Emit>
void visit_palm_extras_npts(const NetworkParams& p, double keep_radius, rng_stream& rng,
                            Emit&& emit) {
    LineAtom tagged{0.0, rng.uniform(0.0, pi)};
    sample_ppp_interval(p.lambda_npts, -keep_radius, keep_radius, rng,
                        [&](int pj, double u) { emit(-1, pj, line_point(tagged, u)); });
}

inline std::vector<Point2> sample_bs(const NetworkParams& p, double radius, rng_stream& rng) {
    return sample_ppp_2d(p.lambda_b, radius, rng);
}

// Parallel driver: each replication owns stream (seed, stream_id + rep), so
// results are independent of the thread count.
template <class Body>
void run_replications(const SimConfig& cfg, Body&& body) {
    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
    if (n_threads == 1 || cfg.replications < 64) {
        for (std::int64_t rep = 0; rep < cfg.replications; ++rep) body(rep, 0);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&, t] {
            constexpr std::int64_t chunk = 64;
            while (true) {
                std::int64_t lo = next.fetch_add(chunk);
                if (lo >= cfg.replications) break;
                std::int64_t hi = std::min(lo + chunk, cfg.replications);
                for (std::int64_t rep = lo; rep < hi; ++rep) body(rep, t);
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace mc_detail

// ---------------------------------------------------------------------------
// Load on the typical BS: pick one uniformly chosen interior BS per
// replication (or pool every interior BS) and count the vehicles it serves.
inline EmpiricalDistribution simulate_typical_load(const SimConfig& cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();
    const NetworkParams& p = cfg.params;
    const double R = cfg.effective_window();
    const double guard = cfg.effective_guard();
    const double cell_cut = 6.0 / std::sqrt(p.lambda_b);

    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
    std::vector<EmpiricalDistribution> parts(std::size_t(std::max(1, n_threads)));
    std::atomic<std::int64_t> resamples{0};

    mc_detail::run_replications(cfg, [&](std::int64_t rep, int tid) {
        thread_local std::vector<Point2> bs;
        thread_local std::vector<Point2> vehicles;
        thread_local mc_detail::NearestGrid grid;
        for (int attempt = 0;; ++attempt) {
            rng_stream rng(cfg.seed.seed,
                           cfg.seed.stream_id + std::uint64_t(rep) +
                               (std::uint64_t(attempt) << 40));
            bs = mc_detail::sample_bs(p, R, rng);
            std::vector<int> interior;
            for (int i = 0; i < int(bs.size()); ++i) {
                const auto& b = bs[std::size_t(i)];
                if (b.x * b.x + b.y * b.y <= (R - guard) * (R - guard))
                    interior.push_back(i);
            }
            if (interior.empty()) {
                if (attempt > 64) throw degenerate_window("no interior BS after 64 resamples");
                ++resamples;
                continue;
            }
            grid.build(bs, R, 0.7 / std::sqrt(p.lambda_b));

            if (cfg.pooled) {
                std::vector<std::int64_t> per_bs(bs.size(), 0);
                mc_detail::visit_vehicles_near(
                    p, cfg.scenario, {0.0, 0.0}, R, R, rng, [&](int, int, Point2 q) {
                        int owner = grid.nearest(q.x, q.y);
                        if (owner >= 0) ++per_bs[std::size_t(owner)];
                    });
                for (int i : interior) parts[std::size_t(tid)].add(std::size_t(per_bs[std::size_t(i)]));
            } else {
                int pick = interior[std::size_t(rng.uniform() * double(interior.size()))];
                Point2 b = bs[std::size_t(pick)];
                std::int64_t count = 0;
                mc_detail::visit_vehicles_near(
                    p, cfg.scenario, b, cell_cut, R, rng, [&](int, int, Point2 q) {
                        int owner = grid.nearest(q.x, q.y);
                        if (owner == pick) ++count;
                    });
                parts[std::size_t(tid)].add(std::size_t(count));
            }
            break;
        }
    });

    EmpiricalDistribution out;
    out.seed = cfg.seed;
    out.window_radius = R;
    out.pooled = cfg.pooled;
    for (auto& part : parts) out.merge(part);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Load on the BS serving the typical vehicle at the origin (excluding the
// typical vehicle itself). Vehicles are realized under the Palm law.
inline EmpiricalDistribution simulate_tagged_load(const SimConfig& cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();
    const NetworkParams& p = cfg.params;
    const double R = cfg.effective_window();
    const double cell_cut = 7.0 / std::sqrt(p.lambda_b);
    const double bs_cut = std::min(R, cell_cut + 8.0 / std::sqrt(p.lambda_b));

    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
    std::vector<EmpiricalDistribution> parts(std::size_t(std::max(1, n_threads)));

    mc_detail::run_replications(cfg, [&](std::int64_t rep, int tid) {
        thread_local std::vector<Point2> bs;
        thread_local mc_detail::NearestGrid grid;
        rng_stream rng(cfg.seed.seed, cfg.seed.stream_id + std::uint64_t(rep));
        bs = mc_detail::sample_bs(p, bs_cut, rng);
        if (bs.empty()) {
            parts[std::size_t(tid)].add(0);
            return;
        }
        grid.build(bs, bs_cut, 0.7 / std::sqrt(p.lambda_b));
        int tagged = grid.nearest(0.0, 0.0);
        std::int64_t count = 0;
        auto tally = [&](int, int, Point2 q) {
            if (grid.nearest(q.x, q.y) == tagged) ++count;
        };
        mc_detail::visit_vehicles_near(p, cfg.scenario, {0.0, 0.0}, cell_cut, R, rng, tally);
        if (cfg.scenario == Scenario::PTS)
            mc_detail::visit_palm_extras(p, cell_cut, rng,
                                         [&](int, int, Point2 q) { tally(0, 0, q); });
        else
            mc_detail::visit_palm_extras_npts(p, cell_cut, rng,
                                              [&](int, int, Point2 q) { tally(0, 0, q); });
        parts[std::size_t(tid)].add(std::size_t(count));
    });

    EmpiricalDistribution out;
    out.seed = cfg.seed;
    out.window_radius = R;
    for (auto& part : parts) out.merge(part);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Count of Palm-conditioned points inside b2(o, ball_radius), excluding the
// typical point.
inline EmpiricalDistribution simulate_palm_count(const SimConfig& cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();
    const NetworkParams& p = cfg.params;
    const double r = cfg.ball_radius;

    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
    std::vector<EmpiricalDistribution> parts(std::size_t(std::max(1, n_threads)));
    mc_detail::run_replications(cfg, [&](std::int64_t rep, int tid) {
        rng_stream rng(cfg.seed.seed, cfg.seed.stream_id + std::uint64_t(rep));
        std::int64_t count = 0;
        auto tally = [&](int, int, Point2 q) {
            if (q.x * q.x + q.y * q.y <= r * r) ++count;
        };
        mc_detail::visit_vehicles_near(p, Scenario::PTS, {0.0, 0.0}, r, cfg.effective_window(),
                                       rng, tally);
        mc_detail::visit_palm_extras(p, r, rng, [&](int, int, Point2 q) { tally(0, 0, q); });
        parts[std::size_t(tid)].add(std::size_t(count));
    });

    EmpiricalDistribution out;
    out.seed = cfg.seed;
    out.window_radius = cfg.effective_window();
    for (auto& part : parts) out.merge(part);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Unconditioned count in a ball (histogram; bin 0 gives the void probability).
inline EmpiricalDistribution simulate_ball_count(const SimConfig& cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();
    const NetworkParams& p = cfg.params;
    const double r = cfg.ball_radius;
    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
    std::vector<EmpiricalDistribution> parts(std::size_t(std::max(1, n_threads)));
    mc_detail::run_replications(cfg, [&](std::int64_t rep, int tid) {
        rng_stream rng(cfg.seed.seed, cfg.seed.stream_id + std::uint64_t(rep));
        std::int64_t count = 0;
        mc_detail::visit_vehicles_near(p, cfg.scenario, {0.0, 0.0}, r, cfg.effective_window(),
                                       rng, [&](int, int, Point2 q) {
                                           if (q.x * q.x + q.y * q.y <= r * r) ++count;
                                       });
        parts[std::size_t(tid)].add(std::size_t(count));
    });
    EmpiricalDistribution out;
    out.seed = cfg.seed;
    out.window_radius = cfg.effective_window();
    for (auto& part : parts) out.merge(part);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// ---------------------------------------------------------------------------
// SIR of the typical vehicle: nearest BS serves; the others interfere when
// active. Thinned silencing keeps interferers independently with probability
// p_on; load-coupled silencing activates exactly the BSs that serve at least
// one vehicle of a Palm realization.
inline std::vector<double> simulate_sir(const SimConfig& cfg) {
    cfg.validate();
    const NetworkParams& p = cfg.params;
    const double R = cfg.effective_window();
    std::vector<double> sir(std::size_t(cfg.replications));

    mc_detail::run_replications(cfg, [&](std::int64_t rep, int) {
        thread_local std::vector<Point2> bs;
        thread_local mc_detail::NearestGrid grid;
        rng_stream rng(cfg.seed.seed, cfg.seed.stream_id + std::uint64_t(rep));
        bs = mc_detail::sample_bs(p, R, rng);
        if (bs.empty()) {
            sir[std::size_t(rep)] = std::numeric_limits<double>::infinity();
            return;
        }
        grid.build(bs, R, 0.7 / std::sqrt(p.lambda_b));
        int serving = grid.nearest(0.0, 0.0);

        std::vector<char> active(bs.size(), 1);
        if (cfg.silencing == SimConfig::Silencing::thinned) {
            for (auto& a : active) a = rng.uniform() < cfg.p_on ? 1 : 0;
        } else {
            std::fill(active.begin(), active.end(), 0);
            auto mark = [&](int, int, Point2 q) {
                int owner = grid.nearest(q.x, q.y);
                if (owner >= 0) active[std::size_t(owner)] = 1;
            };
            mc_detail::visit_vehicles_near(p, cfg.scenario, {0.0, 0.0}, R, R, rng, mark);
            if (cfg.scenario == Scenario::PTS)
                mc_detail::visit_palm_extras(p, R, rng, [&](int, int, Point2 q) { mark(0, 0, q); });
            else
                mc_detail::visit_palm_extras_npts(p, R, rng,
                                                  [&](int, int, Point2 q) { mark(0, 0, q); });
        }

        const auto& s = bs[std::size_t(serving)];
        double rs = std::sqrt(s.x * s.x + s.y * s.y);
        double h0 = -std::log(1.0 - rng.uniform());
        double signal = h0 * std::pow(std::max(rs, 1e-9), -p.alpha);
        double interference = 0;
        for (int i = 0; i < int(bs.size()); ++i) {
            if (i == serving) continue;
            double h = -std::log(1.0 - rng.uniform());
            if (!active[std::size_t(i)]) continue;
            const auto& b = bs[std::size_t(i)];
            double d = std::sqrt(b.x * b.x + b.y * b.y);
            interference += h * std::pow(d, -p.alpha);
        }
        sir[std::size_t(rep)] = interference > 0
                                    ? signal / interference
                                    : std::numeric_limits<double>::infinity();
    });
    return sir;
}

// ---------------------------------------------------------------------------
// Poisson-Voronoi chord oracles (ray marching against the nearest-BS map).

namespace mc_detail {

// Distance from `from` along direction (ux, uy) to the boundary of the cell
// owning `from`; searches up to t_max, returns -1 if the owner never changes.
inline double ray_to_boundary(const NearestGrid& grid, Point2 from, double ux, double uy,
                              double t_max) {
    int owner = grid.nearest(from.x, from.y);
    double lo = 0, hi = t_max;
    if (grid.nearest(from.x + ux * t_max, from.y + uy * t_max) == owner) return -1;
    // shrink [lo, hi] to a bracket ending at the first owner change: march in
    // small steps so intervening cells are not skipped
    const double step = std::min(t_max, 0.05 * t_max);
    double t = step;
    while (t < t_max && grid.nearest(from.x + ux * t, from.y + uy * t) == owner) t += step;
    lo = t - step;
    hi = std::min(t, t_max);
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (grid.nearest(from.x + ux * mid, from.y + uy * mid) == owner)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace mc_detail

// One tagged chord sample: the full chord through the origin along a uniform
// direction, in the cell of the BS nearest to the origin.
inline double sample_tagged_chord(double lambda_b, rng_stream& rng) {
    NetworkParams p;
    p.lambda_b = lambda_b;
    const double R = 12.0 / std::sqrt(lambda_b);
    auto bs = sample_ppp_2d(lambda_b, R, rng);
    if (bs.empty()) return -1;
    mc_detail::NearestGrid grid;
    grid.build(bs, R, 0.7 / std::sqrt(lambda_b));
    double phi = rng.uniform(0.0, pi);
    double ux = std::sin(phi), uy = -std::cos(phi);
    double t_max = 0.45 * R;
    double fwd = mc_detail::ray_to_boundary(grid, {0, 0}, ux, uy, t_max);
    double bwd = mc_detail::ray_to_boundary(grid, {0, 0}, -ux, -uy, t_max);
    if (fwd < 0 || bwd < 0) return -1;  // cell leaks past the search range; resample
    return fwd + bwd;
}

// One residual-segment sample: distance from the origin to the first Voronoi
// boundary along +x.
inline double sample_ray_segment(double lambda_b, rng_stream& rng) {
    const double R = 12.0 / std::sqrt(lambda_b);
    auto bs = sample_ppp_2d(lambda_b, R, rng);
    if (bs.empty()) return -1;
    mc_detail::NearestGrid grid;
    grid.build(bs, R, 0.7 / std::sqrt(lambda_b));
    return mc_detail::ray_to_boundary(grid, {0, 0}, 1.0, 0.0, 0.45 * R);
}

// Typical chords: every full cell chord cut by a uniformly random line across
// one realization, border cells excluded.
inline void sample_typical_chords(double lambda_b, rng_stream& rng,
                                  std::vector<double>& out_chords) {
    const double R = 14.0 / std::sqrt(lambda_b);
    const double interior = R - 4.0 / std::sqrt(lambda_b);
    auto bs = sample_ppp_2d(lambda_b, R, rng);
    if (bs.empty()) return;
    mc_detail::NearestGrid grid;
    grid.build(bs, R, 0.7 / std::sqrt(lambda_b));
    double phi = rng.uniform(0.0, pi);
    double rho = rng.uniform(-0.3 * R, 0.3 * R);
    LineAtom l{rho, phi};
    double half = std::sqrt(std::max(0.0, interior * interior - rho * rho));
    double t = -half;
    Point2 q = line_point(l, t);
    int owner = grid.nearest(q.x, q.y);
    double seg_start = t;
    const double step = 0.02 / std::sqrt(lambda_b);
    bool first = true;
    while (t < half) {
        t = std::min(t + step, half);
        q = line_point(l, t);
        int now = grid.nearest(q.x, q.y);
        if (now != owner) {
            // refine the crossing
            double lo = t - step, hi = t;
            for (int it = 0; it < 50; ++it) {
                double mid = 0.5 * (lo + hi);
                Point2 m = line_point(l, mid);
                if (grid.nearest(m.x, m.y) == owner)
                    lo = mid;
                else
                    hi = mid;
            }
            double boundary = 0.5 * (lo + hi);
            if (!first) out_chords.push_back(boundary - seg_start);
            first = false;
            seg_start = boundary;
            owner = now;
        }
    }
}

}  // namespace pvn
