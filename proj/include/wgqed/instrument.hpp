#pragma once

// Detector and inhomogeneity post-processing: spectral-diffusion averaging,
// timing-jitter convolution and coincidence normalisation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include "diagnostics.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace wgqed {

struct DetectorModel {
    double irf_sigma = 0.188;  // ns, Gaussian IRF standard deviation
    double bin_width = 0.01;   // ns

    void validate() const {
        if (!(irf_sigma >= 0.0)) throw InvalidArgument("irf_sigma must be >= 0");
        if (!(bin_width > 0.0)) throw InvalidArgument("bin_width must be > 0");
    }

    /// Jitter of a coincidence (two independent detectors).
    double coincidence_sigma() const { return std::numbers::sqrt2 * irf_sigma; }
};

/// Uniformly sampled signal: values[i] at t0 + i * dt.
struct TimeSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }

    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * dt;
    }

    /// Linear interpolation, zero outside the grid.
    double at(double t) const {
        const double x = (t - t0) / dt;
        if (x < 0.0 || values.empty() || x > static_cast<double>(values.size() - 1)) return 0.0;
        const auto i = static_cast<std::size_t>(x);
        if (i + 1 >= values.size()) return values.back();
        const double f = x - static_cast<double>(i);
        return (1.0 - f) * values[i] + f * values[i + 1];
    }

    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    }
};

namespace detail {

// Sampled Gaussian with unit sum, half-width ceil(5 sigma / dt) samples.
inline std::vector<double> gaussian_kernel(double sigma, double dt) {
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(5.0 * sigma / dt));
    std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (std::ptrdiff_t i = -half; i <= half; ++i) {
        const double x = static_cast<double>(i) * dt / sigma;
        sum += k[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * x * x);
    }
    for (double& v : k) v /= sum;
    return k;
}

inline std::vector<double> convolve_full(const std::vector<double>& a, const std::vector<double>& k) {
    std::vector<double> out(a.size() + k.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < k.size(); ++j) out[i + j] += a[i] * k[j];
    }
    return out;
}

inline void check_jitter_grid(double sigma, double dt, Diagnostics* diag) {
    if (diag && sigma > 0.0 && dt > sigma)
        diag->warn("time grid (" + std::to_string(dt) + " ns) coarser than IRF sigma (" + std::to_string(sigma) +
                   " ns)");
}

} // namespace detail

/// Gaussian convolution of a sampled signal. The output grid is extended by
/// the kernel half-width on both sides so no weight is lost; the discrete
/// integral is preserved.
inline TimeSeries jitter_convolve(const TimeSeries& signal, double sigma, Diagnostics* diag = nullptr) {
    if (!(sigma >= 0.0)) throw InvalidArgument("jitter sigma must be >= 0");
    if (!(signal.dt > 0.0)) throw InvalidArgument("time step must be positive");
    if (sigma == 0.0) return signal;
    detail::check_jitter_grid(sigma, signal.dt, diag);
    const auto kernel = detail::gaussian_kernel(sigma, signal.dt);
    const auto half = static_cast<double>(kernel.size() / 2);
    return TimeSeries{signal.t0 - half * signal.dt, signal.dt, detail::convolve_full(signal.values, kernel)};
}

inline TimeSeries jitter_convolve(const TimeSeries& signal, const DetectorModel& detector,
                                  Diagnostics* diag = nullptr) {
    detector.validate();
    return jitter_convolve(signal, detector.irf_sigma, diag);
}

/// Square map on a shared grid (t0, dt) convolved along both axes.
struct TimeMap {
    double t0 = 0.0;
    double dt = 1.0;
    Eigen::MatrixXd values;
};

inline TimeMap jitter_convolve_2d(const TimeMap& map, double sigma, Diagnostics* diag = nullptr) {
    if (!(sigma >= 0.0)) throw InvalidArgument("jitter sigma must be >= 0");
    if (sigma == 0.0) return map;
    detail::check_jitter_grid(sigma, map.dt, diag);
    const auto kernel = detail::gaussian_kernel(sigma, map.dt);
    const auto half = static_cast<Eigen::Index>(kernel.size() / 2);
    const Eigen::Index r = map.values.rows(), c = map.values.cols();
    Eigen::MatrixXd rows_done = Eigen::MatrixXd::Zero(r + 2 * half, c);
    for (Eigen::Index j = 0; j < c; ++j) {
        std::vector<double> col(map.values.col(j).data(), map.values.col(j).data() + r);
        const auto conv = detail::convolve_full(col, kernel);
        for (Eigen::Index i = 0; i < r + 2 * half; ++i) rows_done(i, j) = conv[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r + 2 * half, c + 2 * half);
    for (Eigen::Index i = 0; i < r + 2 * half; ++i) {
        std::vector<double> row(static_cast<std::size_t>(c));
        for (Eigen::Index j = 0; j < c; ++j) row[static_cast<std::size_t>(j)] = rows_done(i, j);
        const auto conv = detail::convolve_full(row, kernel);
        for (Eigen::Index j = 0; j < c + 2 * half; ++j) out(i, j) = conv[static_cast<std::size_t>(j)];
    }
    return TimeMap{map.t0 - static_cast<double>(half) * map.dt, map.dt, std::move(out)};
}

// ---------------------------------------------------------------------------
// Coincidence normalisation

struct NormalizedCoincidences {
    TimeSeries g2;              // raw / mean side-peak height
    double center_height = 0.0;  // raw maximum around tau = 0
    double side_height = 0.0;    // mean raw side-peak maximum
    int side_peaks_used = 0;
};

/// Divides a coincidence histogram over tau by the mean maximum of up to
/// n_side_peaks peaks on each side (windows of +-period/2 around k * period).
inline NormalizedCoincidences side_peak_normalize(const TimeSeries& raw, double repetition_period,
                                                  int n_side_peaks) {
    if (!(repetition_period > 0.0)) throw InvalidArgument("repetition period must be positive");
    if (n_side_peaks < 1) throw InvalidArgument("at least one side peak is required");
    auto window_max = [&](double centre) -> std::optional<double> {
        std::optional<double> best;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const double t = raw.time(i);
            if (std::abs(t - centre) <= 0.5 * repetition_period) best = std::max(best.value_or(0.0), raw.values[i]);
        }
        return best;
    };
    const double t_min = raw.time(0), t_max = raw.time(raw.size() ? raw.size() - 1 : 0);
    NormalizedCoincidences out;
    double sum = 0.0;
    for (int k = 1; k <= n_side_peaks; ++k) {
        for (int s : {-1, 1}) {
            const double centre = s * k * repetition_period;
            if (centre < t_min || centre > t_max) continue;
            if (auto m = window_max(centre)) {
                sum += *m;
                ++out.side_peaks_used;
            }
        }
    }
    if (out.side_peaks_used == 0) throw InvalidArgument("no side peak inside the histogram range");
    out.side_height = sum / out.side_peaks_used;
    if (!(out.side_height > 0.0)) throw UndefinedNormalization("side peaks are empty");
    out.center_height = window_max(0.0).value_or(0.0);
    out.g2 = raw;
    for (double& v : out.g2.values) v /= out.side_height;
    return out;
}

// ---------------------------------------------------------------------------
// Spectral-diffusion averaging

enum class NoiseScheme { gauss_hermite, monte_carlo };

struct NoiseAveragingPlan {
    NoiseScheme scheme = NoiseScheme::gauss_hermite;
    int count = 7;            // nodes per emitter (Gauss-Hermite) or samples (Monte Carlo)
    std::uint64_t seed = 0;   // Monte Carlo only

    void validate() const {
        if (count < 1) throw InvalidArgument("noise averaging needs at least one node or sample");
    }
};

struct QuadratureRule {
    std::vector<double> nodes;    // standard-normal abscissae
    std::vector<double> weights;  // sum to 1
};

/// Gauss-Hermite rule for the standard normal weight (Golub-Welsch).
inline QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw InvalidArgument("quadrature order must be >= 1");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jac(k - 1, k) = jac(k, k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    QuadratureRule rule;
    for (int i = 0; i < n; ++i) {
        rule.nodes.push_back(es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        rule.weights.push_back(v * v);
    }
    return rule;
}

template <class R>
struct Averaged {
    R mean{};
    double standard_error = 0.0;  // scalar Monte Carlo results only
    std::size_t evaluations = 0;
};

/// Counter-based stream: the generator for block `block` depends only on
/// (seed, tag, block), never on scheduling.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

/// Averages simulation(offsets) over independent static Gaussian detuning
/// offsets with standard deviations `sigmas` (one per emitter). R must support
/// R + R and double * R. Gauss-Hermite uses a tensor grid over the emitters
/// with nonzero sigma only.
template <class Simulation>
auto spectral_diffusion_average(Simulation&& simulation, const std::vector<double>& sigmas,
                                const NoiseAveragingPlan& plan, int threads = 1) {
    using R = std::decay_t<decltype(simulation(std::vector<double>{}))>;
    plan.validate();
    for (double s : sigmas)
        if (!(s >= 0.0)) throw InvalidArgument("spectral diffusion sigma must be >= 0");
    const std::size_t n_em = sigmas.size();

    std::vector<std::vector<double>> offsets;
    std::vector<double> weights;
    std::vector<std::size_t> active;
    for (std::size_t m = 0; m < n_em; ++m)
        if (sigmas[m] > 0.0) active.push_back(m);

    if (active.empty()) {
        offsets.emplace_back(n_em, 0.0);
        weights.push_back(1.0);
    } else if (plan.scheme == NoiseScheme::gauss_hermite) {
        const auto rule = gauss_hermite(plan.count);
        const auto q = rule.nodes.size();
        std::size_t total = 1;
        for (std::size_t a = 0; a < active.size(); ++a) total *= q;
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::vector<double> off(n_em, 0.0);
            double w = 1.0;
            std::size_t rem = idx;
            for (std::size_t a = 0; a < active.size(); ++a) {
                const auto k = rem % q;
                rem /= q;
                off[active[a]] = sigmas[active[a]] * rule.nodes[k];
                w *= rule.weights[k];
            }
            offsets.push_back(std::move(off));
            weights.push_back(w);
        }
    } else {
        constexpr std::size_t block = 256;
        const auto n = static_cast<std::size_t>(plan.count);
        offsets.resize(n);
        weights.assign(n, 1.0 / static_cast<double>(n));
        for (std::size_t b = 0; b * block < n; ++b) {
            auto rng = rng_stream(plan.seed, 0x5d, b);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
                offsets[i].assign(n_em, 0.0);
                for (auto m : active) offsets[i][m] = sigmas[m] * normal(rng);
            }
        }
    }

    std::vector<std::optional<R>> results(offsets.size());
    parallel_for(offsets.size(), threads, [&](std::size_t i) { results[i].emplace(simulation(offsets[i])); });

    Averaged<R> out;
    out.evaluations = results.size();
    out.mean = weights[0] * *results[0];
    for (std::size_t i = 1; i < results.size(); ++i) out.mean = out.mean + weights[i] * *results[i];
    if constexpr (std::is_arithmetic_v<R>) {
        if (plan.scheme == NoiseScheme::monte_carlo && !active.empty() && results.size() > 1) {
            double ss = 0.0;
            for (const auto& r : results) ss += (*r - out.mean) * (*r - out.mean);
            const double n = static_cast<double>(results.size());
            out.standard_error = std::sqrt(ss / (n - 1.0) / n);
        }
    }
    return out;
}

} // namespace wgqed
