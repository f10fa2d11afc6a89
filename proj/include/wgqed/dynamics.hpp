#pragma once

// Time propagation of the master equation, steady states and one-/two-time
// correlation functions (quantum regression).

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "error.hpp"
#include "hilbert.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "superop.hpp"

namespace wgqed {

struct PropagationOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    // Segments where the generator is constant are propagated with exp(L h)
    // instead of the adaptive integrator.
    bool exact_free_evolution = true;
    int threads = 1;
};

/// Propagates vectorised operators under a (possibly pulsed) Lindblad generator.
/// Thread-safe: concurrent advance() calls share the propagator cache.
class Evolution {
public:
    Evolution(const WaveguideSystem& system, const DriveConfig& drive, PropagationOptions options = {})
        : Evolution(build_generator(system, drive), options) {}

    Evolution(LindbladGenerator generator, PropagationOptions options)
        : gen_(std::move(generator)), options_(options) {
        free_ = gen_.drive_config.mode == DriveMode::cw ? SuperOperator(gen_.constant + gen_.drive) : gen_.constant;
    }

    const LindbladGenerator& generator() const noexcept { return gen_; }
    const PropagationOptions& options() const noexcept { return options_; }

    /// x(t1) from x(t0), t1 >= t0.
    void advance(StateVector& x, double t0, double t1) const {
        if (t1 < t0) throw InvalidArgument("cannot propagate backwards in time");
        if (t1 == t0) return;
        if (!gen_.time_dependent()) {
            free_step(x, t0, t1);
            return;
        }
        const auto& pulse = gen_.drive_config.pulse;
        const double period = pulse.repetition_period;
        double t = t0;
        while (t < t1) {
            const double k = std::floor(t / period);
            const double start = k * period;
            const double pulse_end = start + pulse.end();
            double seg_end;
            if (t < pulse_end) {
                seg_end = std::min(t1, pulse_end);
                driven_step(x, t, seg_end);
            } else {
                seg_end = std::min(t1, start + period);
                free_step(x, t, seg_end);
            }
            if (seg_end <= t) seg_end = std::nextafter(t, t1);  // guard against rounding stalls
            t = seg_end;
        }
    }

private:
    using OdeState = std::vector<Complex>;

    void free_step(StateVector& x, double t0, double t1) const {
        if (!options_.exact_free_evolution) {
            integrate(x, t0, t1, 0.0);
            return;
        }
        x = propagator(t1 - t0) * x;
        if (!x.allFinite()) throw IntegratorError("non-finite state during free evolution", t1);
    }

    void driven_step(StateVector& x, double t0, double t1) const {
        integrate(x, t0, t1, 0.25 * gen_.drive_config.pulse.sigma_t);
    }

    void integrate(StateVector& x, double t0, double t1, double max_dt) const {
        namespace ode = boost::numeric::odeint;
        OdeState state(x.data(), x.data() + x.size());
        const auto dim = x.size();
        const bool pulsed = gen_.time_dependent();
        auto rhs = [&](const OdeState& in, OdeState& out, double t) {
            Eigen::Map<const StateVector> xi(in.data(), dim);
            Eigen::Map<StateVector> xo(out.data(), dim);
            if (pulsed) {
                xo.noalias() = gen_.constant * xi;
                const double env = gen_.drive_config.envelope(t);
                if (env != 0.0) xo.noalias() += env * (gen_.drive * xi);
            } else {
                xo.noalias() = free_ * xi;
            }
        };
        const double h = t1 - t0;
        const double dt0 = std::min(h, max_dt > 0.0 ? max_dt : h) * 0.1;
        try {
            if (max_dt > 0.0) {
                auto stepper = ode::make_controlled(options_.abs_tol, options_.rel_tol, max_dt,
                                                    ode::runge_kutta_dopri5<OdeState>());
                ode::integrate_adaptive(stepper, rhs, state, t0, t1, dt0);
            } else {
                auto stepper = ode::make_controlled(options_.abs_tol, options_.rel_tol,
                                                    ode::runge_kutta_dopri5<OdeState>());
                ode::integrate_adaptive(stepper, rhs, state, t0, t1, dt0);
            }
        } catch (const std::exception& e) {
            throw IntegratorError(std::string("integrator failure: ") + e.what(), t0);
        }
        x = Eigen::Map<StateVector>(state.data(), dim);
        if (!x.allFinite()) throw IntegratorError("non-finite state from integrator", t1);
    }

    const SuperOperator& propagator(double h) const {
        const auto key = std::llround(h * 1e12);
        std::lock_guard lock(cache_mutex_);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const SuperOperator lh = free_ * h;
            it = cache_.emplace(key, SuperOperator(lh.exp())).first;
        }
        return it->second;
    }

    LindbladGenerator gen_;
    SuperOperator free_;
    PropagationOptions options_;
    mutable std::mutex cache_mutex_;
    mutable std::map<long long, SuperOperator> cache_;
};

// ---------------------------------------------------------------------------
// Trajectories

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityState> states;
    DriveConfig drive;
    double max_trace_drift = 0.0;
};

namespace detail {

inline void check_grid(std::span<const double> grid, const char* what) {
    if (grid.empty()) throw InvalidArgument(std::string(what) + " grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] >= grid[i - 1])) throw InvalidArgument(std::string(what) + " grid must be non-decreasing");
    if (!(grid.front() >= 0.0)) throw InvalidArgument(std::string(what) + " grid must start at t >= 0");
}

} // namespace detail

/// Propagates `initial` (given at t_grid[0]) through the grid. Every output
/// state is checked: trace drift < 1e-8, Hermiticity 1e-10, eigenvalues >= -1e-8.
inline Trajectory propagate(const DensityState& initial, const Evolution& evolution, std::span<const double> t_grid) {
    detail::check_grid(t_grid, "time");
    Trajectory traj;
    traj.drive = evolution.generator().drive_config;
    traj.times.assign(t_grid.begin(), t_grid.end());
    const double trace0 = initial.trace();
    StateVector x = vec(initial.matrix());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (i > 0) evolution.advance(x, t_grid[i - 1], t_grid[i]);
        DensityState rho(unvec(x));
        const auto check = rho.check();
        const double drift = std::abs(rho.trace() - trace0);
        traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
        if (drift > 1e-8) throw IntegratorError("trace drift " + std::to_string(drift) + " exceeds 1e-8", t_grid[i]);
        if (check.hermiticity_error > 1e-10)
            throw IntegratorError("state lost Hermiticity", t_grid[i]);
        if (check.min_eigenvalue < -1e-8)
            throw IntegratorError("state lost positivity (eigenvalue " + std::to_string(check.min_eigenvalue) + ")",
                                  t_grid[i]);
        traj.states.push_back(std::move(rho));
    }
    return traj;
}

inline Trajectory propagate(const DensityState& initial, const WaveguideSystem& system, const DriveConfig& drive,
                            std::span<const double> t_grid, PropagationOptions options = {}) {
    if (initial.emitters() != system.size()) throw InvalidArgument("state and system sizes differ");
    return propagate(initial, Evolution(system, drive, options), t_grid);
}

/// Uniform grid 0, step, 2 step, ... up to and including `end` (within rounding).
inline std::vector<double> uniform_grid(double end, double step, double start = 0.0) {
    if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
    const auto n = static_cast<std::size_t>(std::llround((end - start) / step)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = start + static_cast<double>(i) * step;
    return g;
}

// ---------------------------------------------------------------------------
// Steady state

struct SteadyStateInfo {
    double residual = 0.0;               // ||L vec(rho)||
    double second_singular_value = 0.0;  // gap above the null space
};

inline DensityState steady_state(const WaveguideSystem& system, const DriveConfig& drive_cw,
                                 SteadyStateInfo* info = nullptr) {
    if (drive_cw.mode != DriveMode::cw) throw InvalidArgument("steady state requires a cw drive");
    const auto gen = build_generator(system, drive_cw);
    const SuperOperator l = gen.constant + gen.drive;
    Eigen::BDCSVD<SuperOperator> svd(l, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const auto n = s.size();
    if (s(n - 2) <= 1e-10)
        throw DegenerateSteadyState("steady state is not unique (second smallest singular value " +
                                    std::to_string(s(n - 2)) + ")");
    Operator rho = unvec(svd.matrixV().col(n - 1));
    rho /= rho.trace();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    if (info) {
        info->residual = (l * vec(rho)).norm();
        info->second_singular_value = s(n - 2);
    }
    return DensityState(std::move(rho));
}

// ---------------------------------------------------------------------------
// Correlations

inline constexpr double correlation_clip_tolerance = 1e-10;

/// G(tau) = Tr[B^dag B  Lambda_{t+tau <- t}(A rho A^dag)] for tau on `tau_grid`
/// (measured from `t_start`, the time at which rho_t is given).
inline std::vector<double> two_time_correlation(const Evolution& evolution, const Operator& a, const Operator& b,
                                                const DensityState& rho_t, std::span<const double> tau_grid,
                                                double t_start = 0.0, Diagnostics* diag = nullptr) {
    detail::check_grid(tau_grid, "tau");
    const Operator bb = b.adjoint() * b;
    StateVector x = vec(a * rho_t.matrix() * a.adjoint());
    std::vector<double> out(tau_grid.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        evolution.advance(x, t_start + prev, t_start + tau_grid[i]);
        prev = tau_grid[i];
        const double g = (bb * unvec(x)).trace().real();
        out[i] = clip_nonnegative(g, correlation_clip_tolerance, diag);
    }
    return out;
}

inline std::vector<double> two_time_correlation(const WaveguideSystem& system, const DriveConfig& drive,
                                                const Operator& a, const Operator& b, const DensityState& rho_t,
                                                std::span<const double> tau_grid, PropagationOptions options = {},
                                                Diagnostics* diag = nullptr) {
    return two_time_correlation(Evolution(system, drive, options), a, b, rho_t, tau_grid, 0.0, diag);
}

inline double intensity_of(const DensityState& rho, const Operator& e) {
    return (e.adjoint() * e * rho.matrix()).trace().real();
}

/// Steady-state intensity correlations for all four port combinations.
struct CwCorrelations {
    std::vector<double> taus;
    std::array<double, 2> intensity{};                        // [L, R]
    std::array<std::array<std::vector<double>, 2>, 2> G{};    // G[alpha][beta](tau), unnormalised

    std::vector<double> g2(Direction alpha, Direction beta) const {
        const auto a = static_cast<std::size_t>(alpha), b = static_cast<std::size_t>(beta);
        const double norm = intensity[a] * intensity[b];
        if (!(norm > 0.0)) throw UndefinedNormalization("zero intensity: g2 normalisation undefined");
        std::vector<double> out(G[a][b].size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = G[a][b][i] / norm;
        return out;
    }

    CwCorrelations& operator+=(const CwCorrelations& o) {
        for (std::size_t a = 0; a < 2; ++a) {
            intensity[a] += o.intensity[a];
            for (std::size_t b = 0; b < 2; ++b)
                for (std::size_t i = 0; i < G[a][b].size(); ++i) G[a][b][i] += o.G[a][b][i];
        }
        return *this;
    }

    CwCorrelations& operator*=(double w) {
        for (std::size_t a = 0; a < 2; ++a) {
            intensity[a] *= w;
            for (auto& row : G[a])
                for (double& v : row) v *= w;
        }
        return *this;
    }
};

inline CwCorrelations operator*(double w, CwCorrelations c) { return c *= w; }
inline CwCorrelations operator+(CwCorrelations a, const CwCorrelations& b) { return a += b; }

inline CwCorrelations cw_correlations(const WaveguideSystem& system, const DriveConfig& drive_cw,
                                      std::span<const double> tau_grid, PropagationOptions options = {},
                                      Diagnostics* diag = nullptr) {
    const auto rho = steady_state(system, drive_cw);
    const Evolution evo(system, drive_cw, options);
    const std::array<Operator, 2> e{field_operator(system, Direction::left), field_operator(system, Direction::right)};
    CwCorrelations out;
    out.taus.assign(tau_grid.begin(), tau_grid.end());
    for (std::size_t a = 0; a < 2; ++a) out.intensity[a] = std::max(0.0, intensity_of(rho, e[a]));
    for (std::size_t a = 0; a < 2; ++a) {
        const Operator bb_l = e[0].adjoint() * e[0];
        const Operator bb_r = e[1].adjoint() * e[1];
        StateVector x = vec(e[a] * rho.matrix() * e[a].adjoint());
        double prev = 0.0;
        for (double tau : tau_grid) {
            evo.advance(x, prev, tau);
            prev = tau;
            const Operator y = unvec(x);
            out.G[a][0].push_back(clip_nonnegative((bb_l * y).trace().real(), correlation_clip_tolerance, diag));
            out.G[a][1].push_back(clip_nonnegative((bb_r * y).trace().real(), correlation_clip_tolerance, diag));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pulsed correlations

struct CorrelationMap {
    std::vector<double> t1;  // detection time of the first (alpha) photon, ns
    std::vector<double> t2;  // detection time of the second (beta) photon, ns
    Eigen::MatrixXd values;  // values(i, j) at (t1[i], t2[j])
    std::string normalization = "unnormalized";
    double t2_offset = 0.0;  // t2 is measured from this many ns (k periods for different-pulse maps)
};

struct MapGrid {
    double window = 4.0;  // ns after the start of the period
    double step = 0.01;   // ns
};

/// Same-pulse and different-pulse correlation maps for all port pairs,
/// plus the per-port intensities on the same grid.
struct PulsedCorrelations {
    std::vector<double> times;
    std::array<std::vector<double>, 2> intensity;  // [L, R]
    std::array<std::array<CorrelationMap, 2>, 2> same_pulse;
    std::array<std::array<CorrelationMap, 2>, 2> different_pulse;
    double period = 0.0;

    PulsedCorrelations& operator+=(const PulsedCorrelations& o) {
        for (std::size_t a = 0; a < 2; ++a) {
            for (std::size_t i = 0; i < intensity[a].size(); ++i) intensity[a][i] += o.intensity[a][i];
            for (std::size_t b = 0; b < 2; ++b) {
                same_pulse[a][b].values += o.same_pulse[a][b].values;
                different_pulse[a][b].values += o.different_pulse[a][b].values;
            }
        }
        return *this;
    }

    PulsedCorrelations& operator*=(double w) {
        for (std::size_t a = 0; a < 2; ++a) {
            for (double& v : intensity[a]) v *= w;
            for (std::size_t b = 0; b < 2; ++b) {
                same_pulse[a][b].values *= w;
                different_pulse[a][b].values *= w;
            }
        }
        return *this;
    }
};

inline PulsedCorrelations operator*(double w, PulsedCorrelations p) { return p *= w; }
inline PulsedCorrelations operator+(PulsedCorrelations a, const PulsedCorrelations& b) { return a += b; }

/// G^(2)_{alpha beta}(t1, t2) within one pulse (same_pulse) and with t2 shifted
/// by one repetition period (different_pulse). The system starts in |g...g>
/// at t = 0; the first pulse is centred at pulse.center().
inline PulsedCorrelations pulsed_g2_map(const WaveguideSystem& system, const DriveConfig& drive_pulsed,
                                        MapGrid grid = {}, PropagationOptions options = {},
                                        Diagnostics* diag = nullptr) {
    if (drive_pulsed.mode != DriveMode::pulsed) throw InvalidArgument("pulsed_g2_map requires a pulsed drive");
    const double period = drive_pulsed.pulse.repetition_period;
    if (!(grid.window < period)) throw InvalidArgument("map window must be shorter than the repetition period");
    const Evolution evo(system, drive_pulsed, options);
    const auto times = uniform_grid(grid.window, grid.step);
    const auto n = times.size();
    const std::array<Operator, 2> e{field_operator(system, Direction::left), field_operator(system, Direction::right)};
    const std::array<Operator, 2> ee{e[0].adjoint() * e[0], e[1].adjoint() * e[1]};

    std::vector<Operator> rho(n);
    {
        StateVector x = vec(DensityState::ground(system.size()).matrix());
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0) evo.advance(x, times[k - 1], times[k]);
            rho[k] = unvec(x);
        }
    }

    PulsedCorrelations out;
    out.times = times;
    out.period = period;
    for (std::size_t a = 0; a < 2; ++a) {
        out.intensity[a].resize(n);
        for (std::size_t k = 0; k < n; ++k) out.intensity[a][k] = std::max(0.0, (ee[a] * rho[k]).trace().real());
        for (std::size_t b = 0; b < 2; ++b) {
            for (auto* m : {&out.same_pulse[a][b], &out.different_pulse[a][b]}) {
                m->t1 = times;
                m->t2 = times;
                m->values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            }
            out.different_pulse[a][b].t2_offset = period;
        }
    }

    std::vector<Diagnostics> local(n);
    parallel_for(n, options.threads, [&](std::size_t k) {
        const auto ki = static_cast<Eigen::Index>(k);
        for (std::size_t a = 0; a < 2; ++a) {
            StateVector x = vec(e[a] * rho[k] * e[a].adjoint());
            double t = times[k];
            for (std::size_t l = k; l < n; ++l) {
                evo.advance(x, t, times[l]);
                t = times[l];
                const Operator y = unvec(x);
                for (std::size_t b = 0; b < 2; ++b)
                    out.same_pulse[a][b].values(ki, static_cast<Eigen::Index>(l)) =
                        clip_nonnegative((ee[b] * y).trace().real(), correlation_clip_tolerance, &local[k]);
            }
            for (std::size_t l = 0; l < n; ++l) {
                evo.advance(x, t, period + times[l]);
                t = period + times[l];
                const Operator y = unvec(x);
                for (std::size_t b = 0; b < 2; ++b)
                    out.different_pulse[a][b].values(ki, static_cast<Eigen::Index>(l)) =
                        clip_nonnegative((ee[b] * y).trace().real(), correlation_clip_tolerance, &local[k]);
            }
        }
    });
    if (diag)
        for (const auto& d : local) diag->merge(d);

    // Same pulse, t2 < t1: the beta photon came first.
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < k; ++l)
                    out.same_pulse[a][b].values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
                        out.same_pulse[b][a].values(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
    return out;
}

/// g2(tau) density: sum_t G(t, t + tau) dt / (sum I_alpha dt * sum I_beta dt) on
/// tau = m * dt, m = -(n-1) .. n-1. Peak areas are dimensionless; an
/// uncorrelated (different-pulse) peak has unit area.
struct TauCorrelation {
    std::vector<double> taus;
    std::vector<double> values;

    double area() const {
        if (taus.size() < 2) return 0.0;
        double s = 0.0;
        for (double v : values) s += v;
        return s * (taus[1] - taus[0]);
    }

    double at_zero() const { return values[values.size() / 2]; }

    double max() const { return *std::max_element(values.begin(), values.end()); }
};

inline TauCorrelation integrated_pulsed_g2(const CorrelationMap& map, std::span<const double> i_alpha,
                                           std::span<const double> i_beta) {
    const auto n = static_cast<std::size_t>(map.values.rows());
    if (map.t1.size() != n || map.t2.size() != n || i_alpha.size() != n || i_beta.size() != n ||
        static_cast<std::size_t>(map.values.cols()) != n)
        throw InvalidArgument("map and intensity grids are inconsistent");
    if (n < 2) throw InvalidArgument("map grid needs at least two points");
    const double dt = map.t1[1] - map.t1[0];
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        na += i_alpha[i] * dt;
        nb += i_beta[i] * dt;
    }
    if (!(na > 0.0) || !(nb > 0.0)) throw UndefinedNormalization("zero total intensity: g2 normalisation undefined");
    TauCorrelation out;
    const auto ni = static_cast<long>(n);
    for (long m = -(ni - 1); m <= ni - 1; ++m) {
        double s = 0.0;
        for (long k = std::max(0L, -m); k < std::min(ni, ni - m); ++k) s += map.values(k, k + m);
        out.taus.push_back(static_cast<double>(m) * dt);
        out.values.push_back(s * dt / (na * nb));
    }
    return out;
}

} // namespace wgqed
