#pragma once

namespace herald {

// 2018 CODATA values, fixed so that tabulated outputs are bit-stable.
inline constexpr double hbar = 1.054571817e-34;               // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

} // namespace herald
