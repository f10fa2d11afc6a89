#pragma once

// Monte Carlo estimate of the probability that a waveguide holds n_set
// emitters in distinct, independently tunable regions whose wavelengths can
// be tuned into mutual resonance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "instrument.hpp"
#include "parallel.hpp"

namespace wgqed::scalability {

enum class FeasibilityMode { consecutive, window_distinct };

inline const char* to_string(FeasibilityMode m) {
    return m == FeasibilityMode::consecutive ? "consecutive" : "window_distinct";
}

struct ScalabilityConfig {
    double mu_qd = 35.0;          // mean emitter count per waveguide
    double sigma_qd = 15.0;       // nm, inhomogeneous spread
    double delta_lambda = 0.15;   // nm, tuning range
    int n_reg = 3;                // independently tunable regions
    int n_set = 3;                // target set size
    int n_wg = 100;               // waveguides per chip
    std::int64_t runs = 200000;   // samples per emitter count
    std::uint64_t seed = 1;
    FeasibilityMode mode = FeasibilityMode::consecutive;
    double mass_target = 0.9995;

    void validate() const {
        if (!(mu_qd > 0.0)) throw InvalidArgument("mu_qd must be positive");
        if (!(sigma_qd > 0.0)) throw InvalidArgument("sigma_qd must be positive");
        if (!(delta_lambda >= 0.0)) throw InvalidArgument("delta_lambda must be >= 0");
        if (n_set < 1) throw InvalidArgument("n_set must be >= 1");
        if (n_reg < n_set) throw InvalidArgument("n_reg must be >= n_set");
        if (n_wg < 1) throw InvalidArgument("n_wg must be >= 1");
        if (runs < 1) throw InvalidArgument("runs must be >= 1");
        if (!(mass_target > 0.0 && mass_target < 1.0)) throw InvalidArgument("mass_target must lie in (0, 1)");
    }
};

struct PoissonTerm {
    int n = 0;
    double weight = 0.0;
};

/// Poisson probabilities from n = 0 until the cumulative mass reaches
/// mass_target. Weights are not renormalised.
inline std::vector<PoissonTerm> poisson_weights(double mu, double mass_target = 0.9995) {
    if (!(mu > 0.0)) throw InvalidArgument("Poisson mean must be positive");
    std::vector<PoissonTerm> out;
    double cumulative = 0.0;
    for (int n = 0;; ++n) {
        const double w = std::exp(n * std::log(mu) - mu - std::lgamma(n + 1.0));
        out.push_back({n, w});
        cumulative += w;
        if (cumulative >= mass_target) break;
        if (n > 100000) throw NumericalError("Poisson truncation did not converge");
    }
    return out;
}

struct WaveguideSample {
    std::vector<int> regions;         // 0 .. n_reg-1
    std::vector<double> wavelengths;  // nm, relative to the ensemble centre
};

template <class Rng>
WaveguideSample sample_waveguide(int n_qd, const ScalabilityConfig& config, Rng& rng) {
    std::uniform_int_distribution<int> region(0, config.n_reg - 1);
    std::normal_distribution<double> wavelength(0.0, config.sigma_qd);
    WaveguideSample s;
    s.regions.resize(static_cast<std::size_t>(n_qd));
    s.wavelengths.resize(static_cast<std::size_t>(n_qd));
    for (int i = 0; i < n_qd; ++i) {
        s.regions[static_cast<std::size_t>(i)] = region(rng);
        s.wavelengths[static_cast<std::size_t>(i)] = wavelength(rng);
    }
    return s;
}

namespace detail {

struct Emitter {
    double wavelength;
    int region;
};

inline std::optional<double> min_spread_sorted(const std::vector<Emitter>& e, int n_set, FeasibilityMode mode,
                                               std::vector<int>& counts) {
    const auto n = static_cast<int>(e.size());
    if (n < n_set) return std::nullopt;
    if (n_set == 1) return 0.0;
    std::optional<double> best;
    if (mode == FeasibilityMode::consecutive) {
        for (int i = 0; i + n_set <= n; ++i) {
            bool distinct = true;
            for (int a = i; a < i + n_set && distinct; ++a)
                for (int b = a + 1; b < i + n_set; ++b)
                    if (e[a].region == e[b].region) {
                        distinct = false;
                        break;
                    }
            if (distinct) {
                const double spread = e[i + n_set - 1].wavelength - e[i].wavelength;
                if (!best || spread < *best) best = spread;
            }
        }
        return best;
    }
    // Two pointers: shortest windows holding >= n_set distinct regions.
    std::fill(counts.begin(), counts.end(), 0);
    int distinct = 0, j = 0;
    for (int i = 0; i < n; ++i) {
        while (j < n && distinct < n_set) {
            if (counts[static_cast<std::size_t>(e[j].region)]++ == 0) ++distinct;
            ++j;
        }
        if (distinct < n_set) break;
        const double spread = e[j - 1].wavelength - e[i].wavelength;
        if (!best || spread < *best) best = spread;
        if (--counts[static_cast<std::size_t>(e[i].region)] == 0) --distinct;
    }
    return best;
}

} // namespace detail

/// Smallest wavelength spread of a feasible set, or nullopt if none exists.
/// consecutive: n_set adjacent sorted wavelengths with pairwise distinct regions.
/// window_distinct: any sorted-order window containing n_set distinct regions.
inline std::optional<double> min_feasible_spread(const std::vector<double>& wavelengths,
                                                 const std::vector<int>& regions, int n_set, FeasibilityMode mode) {
    if (wavelengths.size() != regions.size()) throw InvalidArgument("wavelength and region lists differ in length");
    if (n_set < 1) throw InvalidArgument("n_set must be >= 1");
    std::vector<detail::Emitter> e;
    int max_region = 0;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (regions[i] < 0) throw InvalidArgument("region indices must be >= 0");
        e.push_back({wavelengths[i], regions[i]});
        max_region = std::max(max_region, regions[i]);
    }
    std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.wavelength < b.wavelength; });
    std::vector<int> counts(static_cast<std::size_t>(max_region + 1));
    return detail::min_spread_sorted(e, n_set, mode, counts);
}

struct ConditionalEstimate {
    int n_qd = 0;
    std::int64_t successes = 0;
    std::int64_t runs = 0;

    double probability() const { return runs ? static_cast<double>(successes) / static_cast<double>(runs) : 0.0; }
    double standard_error() const {
        const double p = probability();
        return runs ? std::sqrt(p * (1.0 - p) / static_cast<double>(runs)) : 0.0;
    }
};

inline constexpr std::int64_t sample_block = 4096;

/// P(success | n_qd) from config.runs samples. Samples are grouped in blocks of
/// `sample_block`; block b draws from rng_stream(seed, n_qd, b), so the count
/// does not depend on the number of threads.
inline ConditionalEstimate conditional_success(int n_qd, const ScalabilityConfig& config, int threads = 1) {
    config.validate();
    ConditionalEstimate est{n_qd, 0, config.runs};
    if (n_qd < config.n_set) return est;
    const auto blocks = static_cast<std::size_t>((config.runs + sample_block - 1) / sample_block);
    std::vector<std::int64_t> hits(blocks, 0);
    parallel_for(blocks, threads, [&](std::size_t b) {
        auto rng = rng_stream(config.seed, static_cast<std::uint64_t>(n_qd), b);
        std::uniform_int_distribution<int> region(0, config.n_reg - 1);
        std::normal_distribution<double> wavelength(0.0, config.sigma_qd);
        std::vector<detail::Emitter> e(static_cast<std::size_t>(n_qd));
        std::vector<int> counts(static_cast<std::size_t>(config.n_reg));
        const auto begin = static_cast<std::int64_t>(b) * sample_block;
        const auto end = std::min(config.runs, begin + sample_block);
        std::int64_t h = 0;
        for (auto i = begin; i < end; ++i) {
            for (auto& q : e) {
                q.region = region(rng);
                q.wavelength = wavelength(rng);
            }
            std::sort(e.begin(), e.end(), [](const auto& x, const auto& y) { return x.wavelength < y.wavelength; });
            const auto spread = detail::min_spread_sorted(e, config.n_set, config.mode, counts);
            if (spread && *spread <= config.delta_lambda) ++h;
        }
        hits[b] = h;
    });
    for (auto h : hits) est.successes += h;
    return est;
}

/// 1 - (1 - p)^n_wg
inline double probability_per_chip(double p_per_waveguide, int n_wg) {
    if (!(p_per_waveguide >= 0.0 && p_per_waveguide <= 1.0)) throw InvalidArgument("probability must lie in [0, 1]");
    if (n_wg < 1) throw InvalidArgument("n_wg must be >= 1");
    if (p_per_waveguide == 1.0) return 1.0;
    return -std::expm1(n_wg * std::log1p(-p_per_waveguide));
}

struct YieldResult {
    double p_per_waveguide = 0.0;
    double standard_error = 0.0;
    double p_per_chip = 0.0;
    int truncation_n_max = 0;
    double poisson_mass = 0.0;
    std::vector<ConditionalEstimate> conditional;
};

inline YieldResult probability_per_waveguide(const ScalabilityConfig& config, int threads = 1) {
    config.validate();
    YieldResult r;
    double var = 0.0;
    for (const auto& term : poisson_weights(config.mu_qd, config.mass_target)) {
        r.poisson_mass += term.weight;
        r.truncation_n_max = term.n;
        if (term.n < config.n_set) continue;
        const auto est = conditional_success(term.n, config, threads);
        r.p_per_waveguide += term.weight * est.probability();
        var += term.weight * term.weight * est.standard_error() * est.standard_error();
        r.conditional.push_back(est);
    }
    r.standard_error = std::sqrt(var);
    r.p_per_chip = probability_per_chip(std::clamp(r.p_per_waveguide, 0.0, 1.0), config.n_wg);
    return r;
}

} // namespace wgqed::scalability
