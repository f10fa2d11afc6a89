#pragma once

// Operator algebra for N two-level emitters.
//
// Basis convention (used by every module): tensor product with emitter 0 as the
// most significant factor and |e> before |g> within each factor. For two
// emitters the basis is {|ee>, |eg>, |ge>, |gg>}. Emitter indices are 0-based.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"

namespace wgqed {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr int max_emitters = 12;
inline constexpr Complex I{0.0, 1.0};

inline int hilbert_dim(int n_emitters) {
    if (n_emitters < 1) throw InvalidArgument("emitter count must be at least 1");
    if (n_emitters > max_emitters)
        throw SizeError("emitter count " + std::to_string(n_emitters) + " exceeds dense-matrix guard of " +
                        std::to_string(max_emitters));
    return 1 << n_emitters;
}

inline int emitter_count(const Operator& op) {
    const auto dim = op.rows();
    if (dim != op.cols() || dim < 2 || (dim & (dim - 1)) != 0)
        throw InvalidArgument("operator dimension is not a power of two");
    int n = 0;
    while ((Eigen::Index{1} << n) < dim) ++n;
    return n;
}

namespace detail {

// Bit of emitter m inside a basis index; a set bit means |g>.
inline int ground_bit(int n_emitters, int m) { return 1 << (n_emitters - 1 - m); }

inline void check_index(int n_emitters, int m) {
    if (m < 0 || m >= n_emitters)
        throw InvalidArgument("emitter index " + std::to_string(m) + " out of range for " +
                              std::to_string(n_emitters) + " emitters");
}

} // namespace detail

inline Operator identity(int n_emitters) {
    const int dim = hilbert_dim(n_emitters);
    return Operator::Identity(dim, dim);
}

/// sigma^-_m = |g><e| on emitter m, identity elsewhere.
inline Operator lowering_operator(int n_emitters, int m) {
    const int dim = hilbert_dim(n_emitters);
    detail::check_index(n_emitters, m);
    const int bit = detail::ground_bit(n_emitters, m);
    Operator op = Operator::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
        if ((i & bit) == 0) op(i | bit, i) = 1.0;
    return op;
}

inline Operator raising_operator(int n_emitters, int m) { return lowering_operator(n_emitters, m).adjoint(); }

inline Operator sigma_z(int n_emitters, int m) {
    const int dim = hilbert_dim(n_emitters);
    detail::check_index(n_emitters, m);
    const int bit = detail::ground_bit(n_emitters, m);
    Operator op = Operator::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) op(i, i) = (i & bit) ? -1.0 : 1.0;
    return op;
}

/// sigma^+_m sigma^-_m.
inline Operator excitation_number(int n_emitters, int m) {
    const int dim = hilbert_dim(n_emitters);
    detail::check_index(n_emitters, m);
    const int bit = detail::ground_bit(n_emitters, m);
    Operator op = Operator::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
        if ((i & bit) == 0) op(i, i) = 1.0;
    return op;
}

/// Product state, one flag per emitter (true = excited).
inline StateVector product_state(const std::vector<bool>& excited) {
    const int n = static_cast<int>(excited.size());
    const int dim = hilbert_dim(n);
    int index = 0;
    for (int m = 0; m < n; ++m)
        if (!excited[m]) index |= detail::ground_bit(n, m);
    StateVector v = StateVector::Zero(dim);
    v(index) = 1.0;
    return v;
}

// ---------------------------------------------------------------------------
// Two-emitter collective states.
//
//   |+-phi>    = (|eg> + e^{+-i phi}|ge>)/sqrt2
//   |pi+-phi>  = (|eg> - e^{+-i phi}|ge>)/sqrt2
//
// <+-phi|pi+-phi> = 0. Decay from |pi+phi> goes only to the left port and
// decay from |pi-phi> only to the right port (see field_operator).

enum class CollectiveKind { plus_phi, minus_phi, pi_plus_phi, pi_minus_phi, plus, minus, eg, ge, ee, gg };

struct CollectiveStateSpec {
    CollectiveKind kind = CollectiveKind::plus;
    double phi = 0.0;
};

inline StateVector collective_state(const CollectiveStateSpec& spec) {
    const double s = 1.0 / std::numbers::sqrt2;
    const Complex ep = std::exp(I * spec.phi);
    const Complex em = std::exp(-I * spec.phi);
    StateVector v = StateVector::Zero(4);
    switch (spec.kind) {
    case CollectiveKind::plus_phi: v << 0.0, s, s * ep, 0.0; break;
    case CollectiveKind::minus_phi: v << 0.0, s, s * em, 0.0; break;
    case CollectiveKind::pi_plus_phi: v << 0.0, s, -s * ep, 0.0; break;
    case CollectiveKind::pi_minus_phi: v << 0.0, s, -s * em, 0.0; break;
    case CollectiveKind::plus: v << 0.0, s, s, 0.0; break;
    case CollectiveKind::minus: v << 0.0, s, -s, 0.0; break;
    case CollectiveKind::eg: v << 0.0, 1.0, 0.0, 0.0; break;
    case CollectiveKind::ge: v << 0.0, 0.0, 1.0, 0.0; break;
    case CollectiveKind::ee: v << 1.0, 0.0, 0.0, 0.0; break;
    case CollectiveKind::gg: v << 0.0, 0.0, 0.0, 1.0; break;
    }
    return v;
}

// ---------------------------------------------------------------------------

struct StateCheck {
    double trace_error = 0.0;        // |Tr rho - 1|
    double hermiticity_error = 0.0;  // max |rho - rho^dagger|
    double min_eigenvalue = 0.0;

    bool ok(double trace_tol = 1e-9, double herm_tol = 1e-10, double positivity_floor = -1e-8) const {
        return trace_error <= trace_tol && hermiticity_error <= herm_tol && min_eigenvalue >= positivity_floor;
    }
};

/// Density operator over 2^N levels. Construction checks shape only; call
/// check() for the physical invariants (they are tolerance based).
class DensityState {
public:
    DensityState() = default;

    explicit DensityState(Operator rho) : rho_(std::move(rho)) { n_ = emitter_count(rho_); }

    static DensityState pure(const StateVector& psi) {
        const double norm = psi.norm();
        if (norm == 0.0) throw InvalidArgument("cannot build a state from the zero vector");
        const StateVector u = psi / norm;
        return DensityState(u * u.adjoint());
    }

    static DensityState ground(int n_emitters) {
        return pure(product_state(std::vector<bool>(static_cast<std::size_t>(n_emitters), false)));
    }

    const Operator& matrix() const noexcept { return rho_; }
    int emitters() const noexcept { return n_; }
    int dim() const noexcept { return static_cast<int>(rho_.rows()); }

    double trace() const { return rho_.trace().real(); }

    Complex expectation(const Operator& op) const { return (op * rho_).trace(); }

    double population(const StateVector& psi) const { return (psi.adjoint() * rho_ * psi)(0, 0).real(); }

    StateCheck check() const {
        StateCheck c;
        c.trace_error = std::abs(rho_.trace() - Complex{1.0, 0.0});
        c.hermiticity_error = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
        const Operator herm = 0.5 * (rho_ + rho_.adjoint());
        Eigen::SelfAdjointEigenSolver<Operator> es(herm, Eigen::EigenvaluesOnly);
        c.min_eigenvalue = es.eigenvalues().minCoeff();
        return c;
    }

private:
    Operator rho_;
    int n_ = 0;
};

} // namespace wgqed
