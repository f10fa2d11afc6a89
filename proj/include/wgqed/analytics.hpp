#pragma once

// Closed-form results: two-path interference, the weak-drive steady state of
// two emitters, population formulas for g2(0) and calibration curves.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "hilbert.hpp"
#include "model.hpp"

namespace wgqed::analytics {

struct PortPair {
    double left = 0.0;
    double right = 0.0;
};

/// |1 + e^{i(theta_d + phi)}|^2 and |1 + e^{i(theta_d - phi)}|^2: field
/// intensities (up to a common factor) for equal excitation of both emitters
/// with relative phase theta_d.
inline PortPair interference_intensities(double theta_d, double phi) {
    return {std::norm(1.0 + std::exp(I * (theta_d + phi))), std::norm(1.0 + std::exp(I * (theta_d - phi)))};
}

/// 1 - beta^2 e^{2 i phi}
inline Complex b_phi(double beta, double phi) { return 1.0 - beta * beta * std::exp(2.0 * I * phi); }

/// Leading-order pure-state amplitudes |psi> ~ |gg> + c_eg|eg> + c_ge|ge> + c_ee|ee>.
struct PerturbativeSteadyState {
    Complex c_eg;
    Complex c_ge;
    Complex c_ee;
    double drive_ratio = 0.0;  // max Omega_m / Gamma_m, the expansion parameter

    StateVector vector() const {
        StateVector v(4);
        v << c_ee, c_eg, c_ge, 1.0;
        return v / v.norm();
    }
};

/// Two emitters, drive amplitudes rabi = (Omega_1, Omega_2), phases = (theta_1,
/// theta_2), detunings = (Delta_1, Delta_2):
///   (c_eg, c_ge) = -1/2 H_eff^{-1} (Omega_1 e^{i theta_1}, Omega_2 e^{i theta_2})
///   c_ee = -i (e^{i theta_2} Omega_2 c_eg + e^{i theta_1} Omega_1 c_ge) / (Gamma_1 + Gamma_2 + 2i(Delta_1 + Delta_2))
inline PerturbativeSteadyState perturbative_steady_state(const WaveguideSystem& system,
                                                         const std::vector<double>& rabi,
                                                         const std::vector<double>& phases,
                                                         const std::vector<double>& detunings) {
    if (system.size() != 2) throw InvalidArgument("perturbative steady state is defined for two emitters");
    if (rabi.size() != 2 || phases.size() != 2 || detunings.size() != 2)
        throw InvalidArgument("two drive amplitudes, phases and detunings are required");
    const Operator h = effective_hamiltonian(system, detunings);
    Eigen::Vector2cd drive(rabi[0] * std::exp(I * phases[0]), rabi[1] * std::exp(I * phases[1]));
    if (std::abs(h.determinant()) < 1e-14 * h.squaredNorm())
        throw NumericalError("effective Hamiltonian is singular (lossless dark state)");
    const Eigen::Vector2cd c = -0.5 * h.partialPivLu().solve(drive);
    const double g1 = system.emitter(0).gamma_total, g2 = system.emitter(1).gamma_total;
    PerturbativeSteadyState s;
    s.c_eg = c(0);
    s.c_ge = c(1);
    s.c_ee = -I * (drive(1) * s.c_eg + drive(0) * s.c_ge) / (g1 + g2 + 2.0 * I * (detunings[0] + detunings[1]));
    s.drive_ratio = std::max(rabi[0] / g1, rabi[1] / g2);
    return s;
}

/// Left-only resonant drive of two identical emitters (rate gamma, guided
/// fraction beta), weak-drive intensities:
///   I_L = beta Omega^2 (2(1+beta^2) Gamma^2 + beta^2 Omega^2 - 4 beta Gamma^2 cos 2phi) / (4 Gamma^3 |B|^2)
///   I_R = beta Omega^2 (2(1-beta)^2 Gamma^2 + beta^2 Omega^2) / (4 Gamma^3 |B|^2)
inline PortPair analytic_intensities_single_drive(double omega, double gamma, double beta, double phi) {
    const double b2 = std::norm(b_phi(beta, phi));
    if (!(b2 > 0.0)) throw UndefinedNormalization("|B_phi| = 0: lossless resonant pole");
    const double g2 = gamma * gamma, o2 = omega * omega, den = 4.0 * g2 * gamma * b2;
    const double left = beta * o2 * (2.0 * (1.0 + beta * beta) * g2 + beta * beta * o2 - 4.0 * beta * g2 * std::cos(2.0 * phi));
    const double right = beta * o2 * (2.0 * (1.0 - beta) * (1.0 - beta) * g2 + beta * beta * o2);
    return {left / den, right / den};
}

struct ZeroDelayCorrelations {
    double ll = 0.0;
    double lr = 0.0;  // equals rl
    double rr = 0.0;
};

/// Unnormalised G2(0) for the same configuration:
///   G_LL = G_RR = beta^4 Omega^4 / (4 Gamma^2 |B|^2),  G_LR = G_LL cos^2 phi.
inline ZeroDelayCorrelations analytic_G2_zero(double omega, double gamma, double beta, double phi) {
    const double b2 = std::norm(b_phi(beta, phi));
    if (!(b2 > 0.0)) throw UndefinedNormalization("|B_phi| = 0: lossless resonant pole");
    const double g = std::pow(beta, 4) * std::pow(omega, 4) / (4.0 * gamma * gamma * b2);
    const double c = std::cos(phi);
    return {g, g * c * c, g};
}

/// g2(0) from collective populations (identical guided rates):
///   g_LL = p_ee/(p_ee+p_-)^2, g_RR = p_ee/(p_ee+p_+)^2,
///   g_LR = p_ee cos^2 phi / ((p_ee+p_+)(p_ee+p_-)).
inline ZeroDelayCorrelations g2_zero_from_populations(double p_ee, double p_plus_phi, double p_minus_phi, double phi) {
    const double left = p_ee + p_minus_phi, right = p_ee + p_plus_phi;
    if (!(left > 0.0) || !(right > 0.0)) throw UndefinedNormalization("zero emission into one port");
    const double c = std::cos(phi);
    return {p_ee / (left * left), p_ee * c * c / (left * right), p_ee / (right * right)};
}

// ---------------------------------------------------------------------------
// Calibration curves

/// Excited population after a resonant pulse whose area is pi sqrt(P / P_pi).
inline double rabi_power_curve(double power, double p_pi) {
    if (!(p_pi > 0.0) || !(power >= 0.0)) throw InvalidArgument("powers must be non-negative, P_pi positive");
    const double area = std::numbers::pi * std::sqrt(power / p_pi);
    const double s = std::sin(0.5 * area);
    return s * s;
}

/// e^{-Gamma t} Theta(t) convolved with a unit-area Gaussian of width sigma
/// (exponentially modified Gaussian).
inline double lifetime_irf(double t, double gamma, double sigma) {
    if (!(gamma > 0.0) || !(sigma >= 0.0)) throw InvalidArgument("gamma must be positive, sigma non-negative");
    if (sigma == 0.0) return t < 0.0 ? 0.0 : (t == 0.0 ? 0.5 : std::exp(-gamma * t));
    const double arg = (gamma * sigma * sigma - t) / (std::numbers::sqrt2 * sigma);
    // erfc underflows where the exponential overflows; use the asymptotic form there.
    if (arg > 25.0) {
        const double x = t / sigma;
        return std::exp(-0.5 * x * x) / (std::sqrt(2.0 * std::numbers::pi) * arg * std::numbers::sqrt2) *
               (1.0 - 0.5 / (arg * arg));
    }
    return 0.5 * std::exp(0.5 * gamma * gamma * sigma * sigma - gamma * t) * std::erfc(arg);
}

} // namespace wgqed::analytics
