#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "planarion/constants.hpp"

namespace planarion {

/// Static harmonic trap: three secular frequencies plus ion mass and charge.
/// omega_z is the reference axis of the dimensionless unit system; by the
/// conventions used throughout, x is the strong (out-of-plane) axis and the
/// crystal extends in the y-z plane.
struct PotentialSpec {
    double omega_x = 0; // rad/s
    double omega_y = 0; // rad/s
    double omega_z = 0; // rad/s
    double mass = 0;    // kg
    double charge = 0;  // C

    /// Ca-40 spec from ordinary frequencies in Hz.
    static PotentialSpec ca40(double fx_hz, double fy_hz, double fz_hz);

    void validate() const; // throws std::invalid_argument

    /// Trap anisotropy xi = omega_y / omega_z.
    double xi() const { return omega_y / omega_z; }

    /// Same trap with omega_y = xi * omega_z (omega_x, omega_z fixed).
    PotentialSpec with_xi(double xi) const;

    /// Dimensionless curvatures ((omega_x/omega_z)^2, (omega_y/omega_z)^2, 1).
    Eigen::Vector3d curvatures() const;

    std::string to_json() const;
    static PotentialSpec from_json(const std::string& text);
};

/// rf drive parameters of a linear trap. q and a are per-axis; a linear trap
/// has q = (q, -q, 0) and a_x + a_y + a_z = 0.
struct MathieuSpec {
    double drive_freq = 0;            // Omega, rad/s
    std::array<double, 3> q{0, 0, 0}; // dimensionless
    std::array<double, 3> a{0, 0, 0}; // dimensionless

    static MathieuSpec linear(double drive_freq, double q_radial,
                              const std::array<double, 3>& a);

    /// Drive parameters that reproduce the given secular frequencies at the
    /// given radial q (drive frequency follows from the sum rule).
    static MathieuSpec for_targets(const PotentialSpec& targets, double q_radial);

    void validate() const;

    /// |q| of the radial axes (largest per-axis magnitude).
    double q_radial() const;

    std::string to_json() const;
    static MathieuSpec from_json(const std::string& text);
};

/// Dimensionless unit system: lengths in l0, energies in E0, times in 1/omega_z,
/// with l0^3 = k_e q^2 / (m omega_z^2) and E0 = m omega_z^2 l0^2.
struct UnitSystem {
    double length_scale = 0; // m
    double energy_scale = 0; // J
    double time_scale = 0;   // s

    static UnitSystem from(const PotentialSpec& spec);

    double to_kelvin(double energy_e0) const {
        return energy_e0 * energy_scale / constants::boltzmann;
    }
};

/// In-plane trap anisotropy omega_y / omega_z, >= 1 by convention.
struct Anisotropy {
    double xi = 1.0;
    explicit Anisotropy(double value);
};

struct PlanarityReport {
    double ratio = 0;       // omega_s / sqrt(omega_w1 * omega_w2)
    double ratio_weak1 = 0; // against the larger weak frequency
    double ratio_weak2 = 0; // against the smaller weak frequency
    double threshold = 0;   // 1.23 N^{1/4}
    double margin = 0;      // ratio - threshold
    bool satisfied = false;
};

struct SensitivityResult {
    double value = 0;
    bool hierarchy_warning = false; // set when omega_1 >> omega_2 is violated
};

struct ModulationIndex {
    double beta = 0;
    bool outside_small_beta = false; // beta too large for the sideband-ratio reading
};

/// Pseudopotential secular frequencies (rad/s) per axis,
/// omega_d = (Omega/2) sqrt(q_d^2/2 + a_d). Throws on a negative radicand,
/// naming the unstable axis.
Eigen::Vector3d secular_frequencies(const MathieuSpec& mathieu);

/// Smallest drive frequency (rad/s) able to produce the target secular
/// frequencies with the radial q bounded by q_max.
double min_drive_frequency(const PotentialSpec& targets, double q_max);

/// d omega_d / dq per axis at fixed a; exactly zero for axes with q_d = 0.
Eigen::Vector3d freq_sensitivity(const MathieuSpec& mathieu);

/// Relative anisotropy change caused by a relative rf-voltage change,
/// d xi / xi = -(dV/V) * sum(omega_n^2) / (2 omega_2^2) with omega_2 the
/// middle frequency.
SensitivityResult anisotropy_sensitivity(const PotentialSpec& spec,
                                         double rel_voltage_change);

/// Planar-crystal criterion omega_s/omega_w > 1.23 N^{1/4}. omega_w is the
/// geometric mean of the two weak frequencies; per-axis ratios are reported
/// alongside for anisotropic in-plane confinement.
PlanarityReport planarity_criterion(const PotentialSpec& spec, int n_ions);

/// Micromotion modulation index from measured Rabi frequencies,
/// beta = 2 Omega_sb / Omega_carr (small-modulation limit).
double modulation_index_from_rabi(double sideband_rabi, double carrier_rabi);

/// First-order micromotion modulation index of an ion displaced from the rf
/// null along a q-axis, beta = k q x / 2.
ModulationIndex predicted_modulation_index(double displacement_m, double q,
                                           double wavenumber);

/// Configuration energy gap (E0 units) as a temperature in kelvin.
double gap_to_temperature(double gap_e0, const UnitSystem& units);

} // namespace planarion
