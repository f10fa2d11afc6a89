#pragma once

#include <numbers>

namespace wgqed::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Rates are quoted as value/2pi in GHz at the boundary and stored as rad/ns.
constexpr double from_ghz(double rate_over_two_pi_ghz) { return two_pi * rate_over_two_pi_ghz; }
constexpr double to_ghz(double angular_rate) { return angular_rate / two_pi; }

} // namespace wgqed::units
