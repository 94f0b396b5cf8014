#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "planarion/equilibrium.hpp"

namespace planarion {

enum class ModePolarization { InPlane, OutOfPlane };

/// Pseudopotential normal modes of a relaxed crystal: 3N frequencies sorted
/// ascending with orthonormal eigenvectors (column m belongs to frequency m;
/// rows ordered ion-major, (3i + axis)).
struct ModeSpectrum {
    Eigen::VectorXd frequencies; // rad/s
    Eigen::MatrixXd eigenvectors;
    std::vector<ModePolarization> labels;

    int n_modes() const { return static_cast<int>(frequencies.size()); }
    /// Ion i's 3-vector amplitude in mode m.
    Eigen::Vector3d ion_amplitude(int ion, int mode) const {
        return eigenvectors.block<3, 1>(3 * ion, mode);
    }
};

/// Per-ion, per-mode Lamb-Dicke parameters for a probe wavevector.
struct CouplingTable {
    Eigen::MatrixXd eta;             // n_ions x n_modes, dimensionless
    std::vector<bool> excluded;      // modes skipped (zero frequency)
};

struct SidebandLine {
    double detuning_hz = 0; // red sideband position, negative
    int multiplicity = 1;   // modes grouped within the degeneracy tolerance
};

/// Dimensionless Hessian (units m omega_z^2) of the crystal energy at the
/// given positions; symmetric by construction.
Eigen::MatrixXd hessian_matrix(const PositionMatrix& positions, const Eigen::Vector3d& curvatures);

/// Hessian of a configuration; warns on stderr when the input is not relaxed.
Eigen::MatrixXd hessian(const IonConfiguration& config, const PotentialSpec& spec);

/// Full eigen-decomposition of the mass-weighted Hessian. Throws when a
/// negative eigenvalue indicates a structurally unstable input.
ModeSpectrum mode_spectrum(const IonConfiguration& config, const PotentialSpec& spec);

/// N x N out-of-plane (x) block of the Hessian for a planar crystal, plus its
/// N mode frequencies (rad/s, ascending). Throws for non-planar input.
struct OutOfPlaneBlock {
    Eigen::MatrixXd matrix;      // N x N, units m omega_z^2
    Eigen::VectorXd frequencies; // rad/s
    Eigen::MatrixXd eigenvectors;
};
OutOfPlaneBlock out_of_plane_block(const IonConfiguration& config, const PotentialSpec& spec);

/// eta_{i,m} = (k . b_{i,m}) sqrt(hbar / (2 m omega_m)); zero-frequency modes
/// are flagged in `excluded` and carry eta = 0.
CouplingTable lamb_dicke(const ModeSpectrum& spectrum, const Eigen::Vector3d& probe_wavevector,
                         const PotentialSpec& spec);

/// Red-sideband detunings -omega_m / 2pi, grouped within a degeneracy
/// tolerance (display aid; the raw spectrum keeps full precision).
std::vector<SidebandLine> sideband_positions(const ModeSpectrum& spectrum,
                                             double group_tol_hz = 10.0);

} // namespace planarion
