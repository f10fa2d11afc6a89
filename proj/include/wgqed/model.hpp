#pragma once

// Physical model of N two-level emitters coupled through a bidirectional
// waveguide: coupling rates, collective field operators, effective
// Hamiltonian, drive and the Lindblad generator.
//
// Rates are angular (rad/ns), times in ns. Detunings are emitter minus laser,
// in the frame rotating at the laser frequency.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "hilbert.hpp"
#include "superop.hpp"
#include "units.hpp"

namespace wgqed {

struct EmitterParams {
    double gamma_total = 1.0;               // Gamma, total decay rate
    double beta = 1.0;                      // guided fraction gamma_wg / Gamma
    double detuning = 0.0;                  // Delta
    double dephasing = 0.0;                 // gamma_d, pure dephasing
    double spectral_diffusion_sigma = 0.0;  // sigma_sd, static Gaussian detuning spread
    double permanent_dipole = 0.0;          // GHz/mV, voltage -> detuning map (config level only)
    double fano_xi = 0.0;                   // stored, not used by the model

    double gamma_wg() const { return beta * gamma_total; }
    double gamma_loss() const { return (1.0 - beta) * gamma_total; }

    void validate() const {
        if (!(gamma_total > 0.0)) throw InvalidArgument("gamma_total must be positive");
        if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in [0, 1]");
        if (!(dephasing >= 0.0)) throw InvalidArgument("dephasing rate must be non-negative");
        if (!(spectral_diffusion_sigma >= 0.0)) throw InvalidArgument("spectral diffusion must be non-negative");
        if (!std::isfinite(detuning)) throw InvalidArgument("detuning must be finite");
    }
};

enum class Direction { left, right };

inline const char* to_string(Direction d) { return d == Direction::left ? "L" : "R"; }

/// Emitters placed along the waveguide. Each emitter carries a propagation
/// phase theta_m = k x_m (emitter 0 is the reference); the pairwise coupling
/// phase is phi_mn = |theta_n - theta_m|.
class WaveguideSystem {
public:
    WaveguideSystem(std::vector<EmitterParams> emitters, std::vector<double> propagation_phases)
        : emitters_(std::move(emitters)), theta_(std::move(propagation_phases)) {
        if (emitters_.empty()) throw InvalidArgument("a waveguide system needs at least one emitter");
        if (theta_.size() != emitters_.size())
            throw InvalidArgument("one propagation phase per emitter is required");
        hilbert_dim(size());
        for (const auto& e : emitters_) e.validate();
        for (double t : theta_)
            if (!std::isfinite(t)) throw InvalidArgument("propagation phases must be finite");
    }

    static WaveguideSystem single(const EmitterParams& e) { return WaveguideSystem({e}, {0.0}); }

    /// Two emitters; phi is the propagation phase of emitter 1 relative to
    /// emitter 0. A negative phi describes the mirrored geometry.
    static WaveguideSystem pair(const EmitterParams& e1, const EmitterParams& e2, double phi) {
        return WaveguideSystem({e1, e2}, {0.0, phi});
    }

    int size() const noexcept { return static_cast<int>(emitters_.size()); }
    const EmitterParams& emitter(int m) const { return emitters_.at(static_cast<std::size_t>(m)); }
    const std::vector<EmitterParams>& emitters() const noexcept { return emitters_; }

    /// theta_m - theta_0, the phase entering the collective field operators.
    double propagation_phase(int m) const { return theta_.at(static_cast<std::size_t>(m)) - theta_.front(); }

    double coupling_phase(int m, int n) const {
        return std::abs(theta_.at(static_cast<std::size_t>(n)) - theta_.at(static_cast<std::size_t>(m)));
    }

    Eigen::MatrixXd coupling_phase_matrix() const {
        Eigen::MatrixXd phi(size(), size());
        for (int m = 0; m < size(); ++m)
            for (int n = 0; n < size(); ++n) phi(m, n) = coupling_phase(m, n);
        return phi;
    }

    WaveguideSystem with_emitter(int m, const EmitterParams& e) const {
        auto copy = *this;
        copy.emitters_.at(static_cast<std::size_t>(m)) = e;
        e.validate();
        return copy;
    }

    WaveguideSystem with_detunings(const std::vector<double>& detunings) const {
        if (detunings.size() != emitters_.size()) throw InvalidArgument("one detuning per emitter is required");
        auto copy = *this;
        for (std::size_t m = 0; m < detunings.size(); ++m) copy.emitters_[m].detuning = detunings[m];
        return copy;
    }

    /// Adds static offsets to every detuning (one spectral-diffusion realisation).
    WaveguideSystem with_detuning_offsets(const std::vector<double>& offsets) const {
        if (offsets.size() != emitters_.size()) throw InvalidArgument("one offset per emitter is required");
        auto copy = *this;
        for (std::size_t m = 0; m < offsets.size(); ++m) copy.emitters_[m].detuning += offsets[m];
        return copy;
    }

    WaveguideSystem with_propagation_phases(std::vector<double> phases) const {
        return WaveguideSystem(emitters_, std::move(phases));
    }

private:
    std::vector<EmitterParams> emitters_;
    std::vector<double> theta_;
};

// ---------------------------------------------------------------------------
// Drive

enum class DriveMode { cw, pulsed };

/// Gaussian pulse train with unit peak. Each pulse is truncated at
/// +-truncation*sigma_t and centred at truncation*sigma_t after the start of
/// its period, so the envelope is exactly zero between pulses.
struct PulseShape {
    double sigma_t = 0.03;             // ns
    double repetition_period = 13.6;   // ns
    double truncation = 6.0;           // half-width in units of sigma_t

    double center() const { return truncation * sigma_t; }
    double end() const { return 2.0 * truncation * sigma_t; }

    double envelope(double t) const {
        double local = std::fmod(t, repetition_period);
        if (local < 0.0) local += repetition_period;
        const double x = local - center();
        if (std::abs(x) > truncation * sigma_t) return 0.0;
        return std::exp(-0.5 * x * x / (sigma_t * sigma_t));
    }

    /// Time integral of the unit-peak envelope over one pulse.
    double unit_area() const {
        return sigma_t * std::sqrt(2.0 * std::numbers::pi) * std::erf(truncation / std::numbers::sqrt2);
    }
};

/// Per-emitter drive. In cw mode Omega_m(t) = rabi_amplitude[m]; in pulsed mode
/// Omega_m(t) = rabi_amplitude[m] * envelope(t) (rabi_amplitude is the peak).
struct DriveConfig {
    DriveMode mode = DriveMode::cw;
    std::vector<double> rabi_amplitude;  // rad/ns
    std::vector<double> drive_phase;     // rad
    PulseShape pulse;

    static DriveConfig none(int n_emitters) {
        return DriveConfig{DriveMode::cw, std::vector<double>(static_cast<std::size_t>(n_emitters), 0.0),
                           std::vector<double>(static_cast<std::size_t>(n_emitters), 0.0), {}};
    }

    static DriveConfig cw(std::vector<double> rabi, std::vector<double> phases) {
        return DriveConfig{DriveMode::cw, std::move(rabi), std::move(phases), {}};
    }

    /// Pulsed drive parameterised by pulse area (pi = full inversion of an isolated emitter).
    static DriveConfig pulsed(const std::vector<double>& areas, std::vector<double> phases, PulseShape shape = {}) {
        DriveConfig d{DriveMode::pulsed, {}, std::move(phases), shape};
        for (double a : areas) d.rabi_amplitude.push_back(a / shape.unit_area());
        return d;
    }

    int size() const { return static_cast<int>(rabi_amplitude.size()); }

    double envelope(double t) const { return mode == DriveMode::cw ? 1.0 : pulse.envelope(t); }

    double area(int m) const { return rabi_amplitude.at(static_cast<std::size_t>(m)) * pulse.unit_area(); }

    bool is_zero() const {
        return std::all_of(rabi_amplitude.begin(), rabi_amplitude.end(), [](double o) { return o == 0.0; });
    }

    void validate(const WaveguideSystem& system) const {
        if (size() != system.size() || drive_phase.size() != rabi_amplitude.size())
            throw InvalidArgument("drive needs one amplitude and one phase per emitter");
        for (double o : rabi_amplitude)
            if (!(o >= 0.0) || !std::isfinite(o)) throw InvalidArgument("Rabi amplitudes must be finite and >= 0");
        for (double p : drive_phase)
            if (!std::isfinite(p)) throw InvalidArgument("drive phases must be finite");
        if (mode == DriveMode::pulsed) {
            if (!(pulse.sigma_t > 0.0)) throw InvalidArgument("pulse sigma_t must be positive");
            if (!(pulse.truncation >= 3.0)) throw InvalidArgument("pulse truncation must be at least 3 sigma");
            double max_lifetime = 0.0;
            for (const auto& e : system.emitters()) max_lifetime = std::max(max_lifetime, 1.0 / e.gamma_total);
            if (!(pulse.repetition_period > 10.0 * max_lifetime))
                throw InvalidArgument("repetition period must exceed 10 emitter lifetimes");
            if (!(pulse.repetition_period > pulse.end()))
                throw InvalidArgument("repetition period shorter than one pulse");
        }
    }
};

// ---------------------------------------------------------------------------
// Couplings and operators

struct CouplingRates {
    double dissipative;  // Gamma_12 = sqrt(g1 g2) cos phi
    double dispersive;   // J_12 = sqrt(g1 g2) sin(phi) / 2
};

inline CouplingRates coupling_rates(double gamma_wg_1, double gamma_wg_2, double phi) {
    const double g = std::sqrt(gamma_wg_1 * gamma_wg_2);
    return {g * std::cos(phi), 0.5 * g * std::sin(phi)};
}

/// E_{L/R} = i sum_m sqrt(gamma_wg_m / 2) e^{+-i theta_m} sigma^-_m.
inline Operator field_operator(const WaveguideSystem& system, Direction direction) {
    const int n = system.size();
    const double sign = direction == Direction::left ? 1.0 : -1.0;
    const int dim = hilbert_dim(n);
    Operator e = Operator::Zero(dim, dim);
    for (int m = 0; m < n; ++m) {
        const double amp = std::sqrt(0.5 * system.emitter(m).gamma_wg());
        e += I * amp * std::exp(sign * I * system.propagation_phase(m)) * lowering_operator(n, m);
    }
    return e;
}

/// Non-Hermitian Hamiltonian of the single-excitation subspace, basis
/// {|e_0>, |e_1>, ...}: diagonal Delta_m - i Gamma_m / 2, off-diagonal
/// -i e^{i phi_mn} sqrt(beta_m beta_n Gamma_m Gamma_n) / 2.
inline Operator effective_hamiltonian(const WaveguideSystem& system, const std::vector<double>& detunings) {
    const int n = system.size();
    if (static_cast<int>(detunings.size()) != n) throw InvalidArgument("one detuning per emitter is required");
    Operator h(n, n);
    for (int m = 0; m < n; ++m) {
        const auto& em = system.emitter(m);
        for (int k = 0; k < n; ++k) {
            if (m == k) {
                h(m, m) = Complex{detunings[static_cast<std::size_t>(m)], -0.5 * em.gamma_total};
            } else {
                const double g = std::sqrt(em.gamma_wg() * system.emitter(k).gamma_wg());
                h(m, k) = -0.5 * I * std::exp(I * system.coupling_phase(m, k)) * g;
            }
        }
    }
    return h;
}

inline Operator effective_hamiltonian(const WaveguideSystem& system) {
    std::vector<double> d;
    for (const auto& e : system.emitters()) d.push_back(e.detuning);
    return effective_hamiltonian(system, d);
}

/// Coherent part without drive: sum Delta_m s+_m s-_m + sum_{m<n} J_mn (s+_m s-_n + h.c.).
inline Operator system_hamiltonian(const WaveguideSystem& system) {
    const int n = system.size();
    const int dim = hilbert_dim(n);
    Operator h = Operator::Zero(dim, dim);
    for (int m = 0; m < n; ++m) h += system.emitter(m).detuning * excitation_number(n, m);
    for (int m = 0; m < n; ++m) {
        for (int k = m + 1; k < n; ++k) {
            const double j =
                coupling_rates(system.emitter(m).gamma_wg(), system.emitter(k).gamma_wg(), system.coupling_phase(m, k))
                    .dispersive;
            const Operator hop = raising_operator(n, m) * lowering_operator(n, k);
            h += j * (hop + hop.adjoint());
        }
    }
    return h;
}

/// (1/2) sum_m Omega_m (e^{i theta_m} s+_m + h.c.) at unit envelope.
inline Operator drive_hamiltonian(const WaveguideSystem& system, const DriveConfig& drive) {
    const int n = system.size();
    const int dim = hilbert_dim(n);
    Operator h = Operator::Zero(dim, dim);
    for (int m = 0; m < n; ++m) {
        const auto mi = static_cast<std::size_t>(m);
        const Operator up = 0.5 * drive.rabi_amplitude[mi] * std::exp(I * drive.drive_phase[mi]) * raising_operator(n, m);
        h += up + up.adjoint();
    }
    return h;
}

/// Collapse operators: E_L, E_R, residual loss sqrt((1-beta)Gamma) s-_m and
/// pure dephasing sqrt(gamma_d / 2) sz_m. Zero-rate channels are omitted.
inline std::vector<Operator> jump_operators(const WaveguideSystem& system) {
    const int n = system.size();
    std::vector<Operator> jumps{field_operator(system, Direction::left), field_operator(system, Direction::right)};
    for (int m = 0; m < n; ++m) {
        const auto& e = system.emitter(m);
        if (e.gamma_loss() > 0.0) jumps.push_back(std::sqrt(e.gamma_loss()) * lowering_operator(n, m));
        if (e.dephasing > 0.0) jumps.push_back(std::sqrt(0.5 * e.dephasing) * sigma_z(n, m));
    }
    return jumps;
}

/// L(t) = constant + envelope(t) * drive.
struct LindbladGenerator {
    SuperOperator constant;
    SuperOperator drive;
    DriveConfig drive_config;

    bool time_dependent() const { return drive_config.mode == DriveMode::pulsed && !drive_config.is_zero(); }

    SuperOperator at(double t) const { return constant + drive_config.envelope(t) * drive; }
};

inline LindbladGenerator build_generator(const WaveguideSystem& system, const DriveConfig& drive) {
    check_superoperator_size(system.size());
    drive.validate(system);
    LindbladGenerator gen;
    gen.constant = hamiltonian_superop(system_hamiltonian(system));
    for (const auto& c : jump_operators(system)) gen.constant += dissipator(c);
    gen.drive = hamiltonian_superop(drive_hamiltonian(system, drive));
    gen.drive_config = drive;
    return gen;
}

/// Full Liouvillian at time t (dimension 4^N).
inline SuperOperator lindblad_generator(const WaveguideSystem& system, const DriveConfig& drive, double t) {
    return build_generator(system, drive).at(t);
}

// ---------------------------------------------------------------------------

namespace presets {

/// Two quantum dots with the measured parameters of the reference device.
inline WaveguideSystem table_one(double phi = 0.8 * std::numbers::pi) {
    EmitterParams qd1;
    qd1.gamma_total = units::from_ghz(0.388);
    qd1.beta = 0.95;
    qd1.dephasing = units::from_ghz(0.01);
    qd1.spectral_diffusion_sigma = units::from_ghz(0.30);
    qd1.permanent_dipole = 0.50;
    qd1.fano_xi = 0.0;
    EmitterParams qd2;
    qd2.gamma_total = units::from_ghz(0.349);
    qd2.beta = 0.85;
    qd2.dephasing = units::from_ghz(0.09);
    qd2.spectral_diffusion_sigma = units::from_ghz(0.22);
    qd2.permanent_dipole = 0.54;
    qd2.fano_xi = 0.1;
    return WaveguideSystem::pair(qd1, qd2, phi);
}

} // namespace presets

} // namespace wgqed
