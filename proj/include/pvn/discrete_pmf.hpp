#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace pvn {

// Probability mass function on {0,...,n_max} with the mass beyond n_max kept
// explicit, so truncation never silently loses probability.
struct DiscretePmf {
    enum class Provenance { bell, pgf_inversion, empirical };

    std::vector<double> masses;   // p(0..n_max)
    double tail_mass = 0.0;
    Provenance provenance = Provenance::bell;
    double clamped_mass = 0.0;    // negative round-off removed by pgf inversion

    std::size_t n_max() const { return masses.empty() ? 0 : masses.size() - 1; }

    double p(std::size_t k) const { return k < masses.size() ? masses[k] : 0.0; }

    double total_mass() const {
        double s = tail_mass;
        for (double v : masses) s += v;
        return s;
    }

    // Moments of the truncated part; exact when tail_mass is negligible.
    double mean() const {
        double s = 0;
        for (std::size_t k = 1; k < masses.size(); ++k) s += double(k) * masses[k];
        return s;
    }
    double variance() const {
        double mu = mean(), s = 0;
        for (std::size_t k = 0; k < masses.size(); ++k) {
            double d = double(k) - mu;
            s += d * d * masses[k];
        }
        return s;
    }

    std::vector<double> cdf() const {
        std::vector<double> c(masses.size());
        double acc = 0;
        for (std::size_t k = 0; k < masses.size(); ++k) c[k] = (acc += masses[k]);
        return c;
    }

    static const char* provenance_name(Provenance p) {
        switch (p) {
            case Provenance::bell: return "bell";
            case Provenance::pgf_inversion: return "pgf_inversion";
            case Provenance::empirical: return "empirical";
        }
        return "unknown";
    }

    void write_csv(std::ostream& os, const std::string& meta = "") const {
        os << "# provenance=" << provenance_name(provenance)
           << " tail_mass=" << tail_mass << " clamped_mass=" << clamped_mass;
        if (!meta.empty()) os << ' ' << meta;
        os << "\nn,p\n";
        for (std::size_t k = 0; k < masses.size(); ++k)
            os << k << ',' << masses[k] << '\n';
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"masses", masses},
                              {"tail_mass", tail_mass},
                              {"provenance", provenance_name(provenance)},
                              {"clamped_mass", clamped_mass}};
    }
};

}  // namespace pvn
