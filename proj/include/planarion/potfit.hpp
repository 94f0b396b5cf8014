#pragma once

#include <Eigen/Core>

#include "planarion/trapmath.hpp"

namespace planarion {

/// Planar point/force sets are N x 2 with columns (y, z), matching the
/// in-plane columns of IonConfiguration.
using PlanarMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Quadratic trap characterization: force model F = A (r - r0) fitted to the
/// per-ion Coulomb forces, A = [[alpha, gamma], [gamma, beta]] over (z, y).
struct QuadraticFit {
    double alpha = 0; // zz curvature (force per length)
    double beta = 0;  // yy curvature
    double gamma = 0; // cross term
    double y0 = 0, z0 = 0;
    double phi = 0;                 // principal-frame rotation, |phi| <= pi/4
    double curvature_major = 0;     // larger eigencurvature
    double curvature_minor = 0;     // smaller eigencurvature
    double xi_inv = 0;              // sqrt(minor / major)
    double curvature_z_prime = 0;   // eigencurvature along the axis nearest z
};

struct ResidualField {
    PlanarMatrix delta; // (Delta F_y', Delta F_z') per ion, principal frame
    double rms = 0;
};

/// Pairwise inverse-square in-plane forces (dimensionless, 1/d^2 per pair).
/// Newton's third law holds exactly: the components sum to zero.
PlanarMatrix coulomb_force_field(const PlanarMatrix& positions);

/// Unweighted least-squares fit of F = A (r - r0) to the given forces
/// (five parameters: alpha, beta, gamma and a constant force vector that is
/// folded into the center). Throws on a rank-deficient design matrix.
QuadraticFit fit_quadratic(const PlanarMatrix& positions, const PlanarMatrix& forces);

/// Force residuals after the linear fit, rotated into the principal frame.
ResidualField residuals(const PlanarMatrix& positions, const PlanarMatrix& forces,
                        const QuadraticFit& fit);

/// Imaging-system scale (meters per pixel) from pixel-space ion positions:
/// matches the fitted curvature along z' to mass * omega_z^2; the curvature in
/// physical units scales as scale^-3 through the Coulomb term.
double calibrate_scale(const PlanarMatrix& pixel_positions, double known_omega_z,
                       const PotentialSpec& spec);

} // namespace planarion
