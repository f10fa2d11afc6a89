#pragma once

// Observables: port intensities, directionality, collective populations,
// transmission, and detector-level g2 estimates built from correlation maps.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "analytics.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "hilbert.hpp"
#include "instrument.hpp"
#include "model.hpp"

namespace wgqed {

inline constexpr double intensity_clip_tolerance = 1e-12;

/// <E^dag E> in photons/ns.
inline double intensity(const DensityState& rho, const WaveguideSystem& system, Direction direction,
                        Diagnostics* diag = nullptr) {
    const Operator e = field_operator(system, direction);
    const double v = (e.adjoint() * e * rho.matrix()).trace().real();
    if (v < -intensity_clip_tolerance && diag) diag->warn("negative intensity below clip tolerance");
    return std::max(0.0, v);
}

struct IntensityRecord {
    std::vector<double> times;
    std::vector<double> left;
    std::vector<double> right;
};

inline IntensityRecord intensities(const Trajectory& traj, const WaveguideSystem& system) {
    const std::array<Operator, 2> e{field_operator(system, Direction::left), field_operator(system, Direction::right)};
    const std::array<Operator, 2> ee{e[0].adjoint() * e[0], e[1].adjoint() * e[1]};
    IntensityRecord rec;
    rec.times = traj.times;
    for (const auto& rho : traj.states) {
        rec.left.push_back(std::max(0.0, (ee[0] * rho.matrix()).trace().real()));
        rec.right.push_back(std::max(0.0, (ee[1] * rho.matrix()).trace().real()));
    }
    return rec;
}

/// (I_L, I_R) / (I_L + I_R).
inline analytics::PortPair directionality(double left, double right) {
    const double total = left + right;
    if (!(total > 0.0)) throw UndefinedNormalization("zero total flux: directionality undefined");
    return {left / total, right / total};
}

inline double population_projection(const DensityState& rho, const CollectiveStateSpec& spec) {
    if (rho.emitters() != 2) throw InvalidArgument("collective populations are defined for two emitters");
    return rho.population(collective_state(spec));
}

// ---------------------------------------------------------------------------
// Transmission

struct TransmissionPoint {
    std::vector<double> detunings;  // emitter minus laser, rad/ns
    Complex amplitude;              // without spectral-diffusion averaging
    double transmission = 1.0;      // |t|^2, averaged if requested
};

namespace detail {

inline Complex coherent_amplitude(const WaveguideSystem& system, const std::vector<double>& detunings) {
    // 1 + i v^dag H^-1 v = det(H + i v v^dag) / det(H); the diagonal of v v^dag is
    // gamma_wg / 2 exactly, so a lossless resonant mirror gives t = 0 without round-off.
    const int n = system.size();
    Operator h = effective_hamiltonian(system, detunings);
    for (int m = 0; m < n; ++m) h(m, m) -= I * system.emitter(m).dephasing;
    Operator k(n, n);
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j)
            k(m, j) = m == j ? Complex{0.5 * system.emitter(m).gamma_wg(), 0.0}
                             : 0.5 * std::sqrt(system.emitter(m).gamma_wg() * system.emitter(j).gamma_wg()) *
                                   std::exp(I * (system.propagation_phase(m) - system.propagation_phase(j)));
    const Complex den = h.partialPivLu().determinant();
    if (den == 0.0 || !std::isfinite(std::abs(den))) throw NumericalError("singular resolvent in transmission");
    const Operator num = h + I * k;
    return Complex(num.partialPivLu().determinant()) / den;
}

} // namespace detail

/// Linear-response transmission t = 1 + i v^dag (H_eff - i gamma_d)^{-1} v,
/// v_m = sqrt(gamma_wg_m / 2) e^{i theta_m}. With `spectral_diffusion_nodes`
/// > 0 the intensity |t|^2 is averaged over static Gaussian detuning offsets.
inline TransmissionPoint transmission_coherent(const WaveguideSystem& system, const std::vector<double>& detunings,
                                               int spectral_diffusion_nodes = 0) {
    if (static_cast<int>(detunings.size()) != system.size())
        throw InvalidArgument("one detuning per emitter is required");
    TransmissionPoint p;
    p.detunings = detunings;
    p.amplitude = detail::coherent_amplitude(system, detunings);
    p.transmission = std::norm(p.amplitude);
    if (spectral_diffusion_nodes > 0) {
        std::vector<double> sigmas;
        for (const auto& e : system.emitters()) sigmas.push_back(e.spectral_diffusion_sigma);
        const auto avg = spectral_diffusion_average(
            [&](const std::vector<double>& off) {
                auto d = detunings;
                for (std::size_t m = 0; m < d.size(); ++m) d[m] += off[m];
                return std::norm(detail::coherent_amplitude(system, d));
            },
            sigmas, NoiseAveragingPlan{NoiseScheme::gauss_hermite, spectral_diffusion_nodes, 0});
        p.transmission = avg.mean;
    }
    return p;
}

struct SaturationPoint {
    double drive_ratio = 0.0;       // Omega_0 / Gamma_0
    double input_flux = 0.0;        // photons/ns
    double coherent = 1.0;          // |1 - <E_R>/a|^2
    double total = 1.0;             // <out^dag out> / a^2
};

/// Steady-state transmission with the drive supplied through the waveguide
/// from the left: Omega_m = sqrt(2 gamma_wg_m P), phase theta_m, amplitude a = sqrt(P).
/// Powers are given as Omega_0 / Gamma_0.
inline std::vector<SaturationPoint> transmission_saturated(const WaveguideSystem& system,
                                                           const std::vector<double>& drive_ratios,
                                                           int threads = 1) {
    const int n = system.size();
    const auto& e0 = system.emitter(0);
    if (!(e0.gamma_wg() > 0.0)) throw InvalidArgument("emitter 0 must couple to the waveguide");
    const Operator er = field_operator(system, Direction::right);
    const Operator erer = er.adjoint() * er;
    std::vector<SaturationPoint> out(drive_ratios.size());
    parallel_for(drive_ratios.size(), threads, [&](std::size_t i) {
        const double ratio = drive_ratios[i];
        if (!(ratio > 0.0)) throw InvalidArgument("saturation powers must be positive");
        const double omega0 = ratio * e0.gamma_total;
        const double flux = omega0 * omega0 / (2.0 * e0.gamma_wg());
        std::vector<double> rabi, phase;
        for (int m = 0; m < n; ++m) {
            rabi.push_back(std::sqrt(2.0 * system.emitter(m).gamma_wg() * flux));
            phase.push_back(system.propagation_phase(m));
        }
        const auto rho = steady_state(system, DriveConfig::cw(rabi, phase));
        const double a = std::sqrt(flux);
        const Complex er_mean = rho.expectation(er);
        SaturationPoint p;
        p.drive_ratio = ratio;
        p.input_flux = flux;
        p.coherent = std::norm(1.0 - er_mean / a);
        p.total = (flux - 2.0 * a * er_mean.real() + rho.expectation(erer).real()) / flux;
        out[i] = p;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Detector-level g2

/// Two-sided CW g2(tau) of ports (alpha, beta), optionally convolved with the
/// coincidence jitter (sqrt 2 times the single-detector IRF).
inline TimeSeries cw_g2_series(const CwCorrelations& c, Direction alpha, Direction beta, double irf_sigma = 0.0,
                               Diagnostics* diag = nullptr) {
    const auto ab = c.g2(alpha, beta);
    const auto ba = c.g2(beta, alpha);
    const auto n = c.taus.size();
    if (n < 2) throw InvalidArgument("need at least two delays");
    TimeSeries s{-c.taus.back(), c.taus[1] - c.taus[0], {}};
    for (std::size_t i = n - 1; i > 0; --i) s.values.push_back(ba[i]);
    for (std::size_t i = 0; i < n; ++i) s.values.push_back(ab[i]);
    if (irf_sigma <= 0.0) return s;
    // Keep the grid: pad with the long-delay value so the edges stay flat.
    const double sigma = std::numbers::sqrt2 * irf_sigma;
    const auto pad = static_cast<std::size_t>(std::ceil(5.0 * sigma / s.dt));
    TimeSeries padded{s.t0 - static_cast<double>(pad) * s.dt, s.dt, {}};
    padded.values.assign(pad, s.values.front());
    padded.values.insert(padded.values.end(), s.values.begin(), s.values.end());
    padded.values.insert(padded.values.end(), pad, s.values.back());
    const auto conv = jitter_convolve(padded, sigma, diag);
    const auto half = detail::gaussian_kernel(sigma, s.dt).size() / 2;
    TimeSeries out{s.t0, s.dt, {}};
    for (std::size_t i = 0; i < s.size(); ++i) out.values.push_back(conv.values[i + pad + half]);
    return out;
}

/// Pulsed coincidence histogram over tau in [-(T + w), T + w] (central peak
/// and the two neighbouring peaks) from a correlation map; jitter is applied
/// along both time axes of the maps before integrating along the diagonals.
struct PulsedG2 {
    TimeSeries histogram;                 // normalised by (sum I_alpha dt)(sum I_beta dt)
    NormalizedCoincidences side_peak;     // heights relative to the side peak
    double center_area = 0.0;
    double side_area = 0.0;

    double center_height_ratio() const { return side_peak.center_height / side_peak.side_height; }
    double area_ratio() const { return center_area / side_area; }
};

namespace detail {

// S(m) = sum_k M(k, k + m) dt for m = -(n-1) .. n-1.
inline std::vector<double> diagonal_sums(const Eigen::MatrixXd& m, double dt) {
    const auto n = m.rows();
    std::vector<double> out;
    for (Eigen::Index d = -(n - 1); d <= n - 1; ++d) {
        double s = 0.0;
        for (Eigen::Index k = std::max<Eigen::Index>(0, -d); k < std::min(n, n - d); ++k) s += m(k, k + d);
        out.push_back(s * dt);
    }
    return out;
}

} // namespace detail

inline PulsedG2 pulsed_g2(const PulsedCorrelations& pc, Direction alpha, Direction beta, double irf_sigma = 0.0,
                          Diagnostics* diag = nullptr) {
    const auto a = static_cast<std::size_t>(alpha), b = static_cast<std::size_t>(beta);
    const double dt = pc.times.at(1) - pc.times.at(0);
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < pc.times.size(); ++i) {
        na += pc.intensity[a][i] * dt;
        nb += pc.intensity[b][i] * dt;
    }
    if (!(na > 0.0) || !(nb > 0.0)) throw UndefinedNormalization("zero total intensity: g2 normalisation undefined");

    auto smear = [&](const CorrelationMap& m) {
        return jitter_convolve_2d(TimeMap{pc.times.front(), dt, m.values}, irf_sigma, diag).values;
    };
    const auto center = detail::diagonal_sums(smear(pc.same_pulse[a][b]), dt);
    const auto right = detail::diagonal_sums(smear(pc.different_pulse[a][b]), dt);
    // beta photon one period earlier: tau = -T + s with G_{beta alpha}(t2, t1 + T)
    const auto left_rev = detail::diagonal_sums(smear(pc.different_pulse[b][a]), dt);

    const auto half = static_cast<long>(center.size() / 2);  // index of tau = 0 within a peak
    const long period_steps = std::lround(pc.period / dt);
    const long total_half = period_steps + half;
    PulsedG2 out;
    out.histogram = TimeSeries{-static_cast<double>(total_half) * dt, dt,
                               std::vector<double>(static_cast<std::size_t>(2 * total_half + 1), 0.0)};
    auto add = [&](long centre_index, const std::vector<double>& peak, bool reversed) {
        for (long i = 0; i < static_cast<long>(peak.size()); ++i) {
            const long offset = reversed ? half - i : i - half;
            const long idx = centre_index + offset + total_half;
            if (idx >= 0 && idx < static_cast<long>(out.histogram.size()))
                out.histogram.values[static_cast<std::size_t>(idx)] += peak[static_cast<std::size_t>(i)] / (na * nb);
        }
    };
    add(0, center, false);
    add(period_steps, right, false);
    add(-period_steps, left_rev, true);
    for (double v : center) out.center_area += v * dt / (na * nb);
    for (double v : right) out.side_area += v * dt / (na * nb);
    out.side_peak = side_peak_normalize(out.histogram, pc.period, 1);
    return out;
}

} // namespace wgqed
