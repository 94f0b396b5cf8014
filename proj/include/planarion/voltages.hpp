#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "planarion/constants.hpp"

namespace planarion {

/// Real solid-harmonic expansion of a potential near the trap center,
/// degree <= 2 with the constant discarded. Basis convention (position in m):
///   dipole terms   x, y, z                       -> coefficients in V/m
///   U1 = z^2 - (x^2 + y^2)/2                     -> V/m^2
///   U2 = x^2 - y^2,  U3 = x y,  U4 = y z,  U5 = z x
struct MultipoleCoefficients {
    Eigen::Vector3d dipole = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 5, 1> quadrupole = Eigen::Matrix<double, 5, 1>::Zero();

    Eigen::Matrix<double, 8, 1> stacked() const;
    static MultipoleCoefficients from_stacked(const Eigen::Matrix<double, 8, 1>& v);
};

/// Basis function value, term index 0..7 = Ex, Ey, Ez, U1..U5.
double multipole_term(int term, const Eigen::Vector3d& r);
extern const std::array<const char*, 8> kMultipoleTermNames;

/// Per-electrode multipole response for unit voltage: 8 x n_electrodes.
struct ElectrodeBasisMatrix {
    Eigen::Matrix<double, 8, Eigen::Dynamic> response;
    double ion_electrode_distance = 400e-6; // m
    double central_segment_length = 1.5e-3; // m

    int n_electrodes() const { return static_cast<int>(response.cols()); }
};

/// Desired multipole change: shifts via dipole terms, rotations/confinement
/// changes via quadrupole terms. At least one component must be nonzero.
struct TargetAction {
    MultipoleCoefficients change;
    void validate() const;
};

struct VoltageSet {
    Eigen::VectorXd voltages;        // V
    double residual = 0;             // |B v - t|
    Eigen::VectorXd singular_values; // of the basis matrix
};

struct MultipoleFit {
    MultipoleCoefficients coefficients;
    double rms_residual = 0;
};

using PotentialSample = std::pair<Eigen::Vector3d, double>; // position (m), value (V)

/// Least-squares degree-<=2 solid-harmonic fit of sampled potential values
/// within `radius` of `center` (constant term fitted and discarded). Requires
/// at least 20 well-spread points; throws on degenerate sampling.
MultipoleFit fit_multipoles(const std::vector<PotentialSample>& samples,
                            const Eigen::Vector3d& center, double radius);

/// Synthetic 12-electrode model: four dc rails (top/bottom x sides, front/back
/// y sides) of three segments each, every electrode a rectangle of uniformly
/// weighted point charges. Stands in for the finite-element electrode data and
/// exercises the identical solve path.
struct SyntheticTrapGeometry {
    double ion_electrode_distance = 400e-6; // m, rail plane offset |x|
    double central_segment_length = 1.5e-3; // m
    double rail_inner_edge = 100e-6;        // m, rail span in |y|
    double rail_outer_edge = 500e-6;        // m
    int patch_rows = 6;                     // charge grid across y
    int patch_cols = 12;                    // charge grid across z
    double fit_radius = 100e-6;             // m
    int fit_samples = 1000;                 // per sphere shell (two shells used)
};

/// Unit-voltage potential of one electrode at r (dimensionless kernel
/// d / |r - p| averaged over the patch points).
double electrode_potential(const SyntheticTrapGeometry& geom, int electrode,
                           const Eigen::Vector3d& r);

ElectrodeBasisMatrix build_basis(const SyntheticTrapGeometry& geom);

/// Electrode index permutation under the y -> -y mirror of the layout.
std::array<int, 12> y_mirror_permutation();

/// Tikhonov solution v = sum_i sigma_i/(sigma_i^2 + lambda^2) (u_i^T t) w_i of
/// B v = t; minimizes |B v - t|^2 + lambda^2 |v|^2. Throws when any voltage
/// exceeds the compliance limit, listing the offending electrodes.
VoltageSet solve_tikhonov(const ElectrodeBasisMatrix& basis, const TargetAction& target,
                          double lambda, double compliance_limit = 10.0);

struct AchievedAction {
    MultipoleCoefficients achieved;
    double residual = 0; // vs target when one is supplied, else 0
};

AchievedAction achieved_action(const ElectrodeBasisMatrix& basis, const Eigen::VectorXd& voltages,
                               const MultipoleCoefficients* target = nullptr);

} // namespace planarion
