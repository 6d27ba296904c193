#pragma once

namespace spinline {

/// Bohr magneton over Planck constant, mu_B/h, in Hz/T (CODATA, rounded to
/// the 5 digits used throughout: 13.996 GHz/T). Larmor frequency of a spin
/// with g-factor g in field B0 is g * MU_B_OVER_H * B0.
inline constexpr double kMuBOverH_HzPerT = 13.996e9;

inline constexpr double kPi = 3.14159265358979323846;

} // namespace spinline
