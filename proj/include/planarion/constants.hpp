#pragma once

namespace planarion::constants {

// CODATA-2018. All crystal arithmetic goes through this one table so that
// results are reproducible bit-for-bit across modules.
inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double elementary_charge = 1.602176634e-19;    // C (exact)
inline constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
inline constexpr double boltzmann = 1.380649e-23;               // J/K (exact)
inline constexpr double atomic_mass_unit = 1.66053906660e-27;   // kg
inline constexpr double hbar = 1.054571817e-34;                 // J s

inline constexpr double coulomb_constant =
    1.0 / (4.0 * pi * vacuum_permittivity); // k_e, N m^2 / C^2

// Default ion species.
inline constexpr double ca40_mass_amu = 39.962591;

} // namespace planarion::constants
