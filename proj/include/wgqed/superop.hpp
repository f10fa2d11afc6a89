#pragma once

// Superoperators acting on column-major vectorised density matrices:
// vec(A X B) = (B^T kron A) vec(X).

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <string>

#include "hilbert.hpp"

namespace wgqed {

using SuperOperator = Eigen::MatrixXcd;

/// Liouville-space guard: 4^N x 4^N dense superoperators.
inline constexpr int max_superoperator_emitters = 5;

inline void check_superoperator_size(int n_emitters) {
    if (n_emitters > max_superoperator_emitters)
        throw SizeError("superoperator for " + std::to_string(n_emitters) + " emitters exceeds guard of " +
                        std::to_string(max_superoperator_emitters));
}

inline StateVector vec(const Operator& rho) { return rho.reshaped(); }

inline Operator unvec(const StateVector& v) {
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    return v.reshaped(n, n);
}

/// X -> A X
inline SuperOperator spre(const Operator& a) {
    return Eigen::kroneckerProduct(Operator::Identity(a.rows(), a.cols()), a).eval();
}

/// X -> X B
inline SuperOperator spost(const Operator& b) {
    return Eigen::kroneckerProduct(b.transpose(), Operator::Identity(b.rows(), b.cols())).eval();
}

/// X -> -i [H, X]
inline SuperOperator hamiltonian_superop(const Operator& h) { return -I * (spre(h) - spost(h)); }

/// X -> c X c^dagger - {c^dagger c, X}/2
inline SuperOperator dissipator(const Operator& c) {
    const Operator cd = c.adjoint();
    const Operator cdc = cd * c;
    return spre(c) * spost(cd) - 0.5 * spre(cdc) - 0.5 * spost(cdc);
}

/// Direct (non-superoperator) evaluation of the dissipator, used as a check.
inline Operator apply_dissipator(const Operator& c, const Operator& x) {
    const Operator cd = c.adjoint();
    const Operator cdc = cd * c;
    return c * x * cd - 0.5 * (cdc * x + x * cdc);
}

} // namespace wgqed
