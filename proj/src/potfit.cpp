#include "planarion/potfit.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/QR>

namespace planarion {

PlanarMatrix coulomb_force_field(const PlanarMatrix& positions) {
    const int n = static_cast<int>(positions.rows());
    if (n < 2) throw std::invalid_argument("coulomb_force_field: need at least 2 ions");
    PlanarMatrix f = PlanarMatrix::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            Eigen::RowVector2d dr = positions.row(i) - positions.row(j);
            const double r = dr.norm();
            if (r < 1e-12)
                throw std::invalid_argument("coulomb_force_field: coincident ions");
            Eigen::RowVector2d fij = dr / (r * r * r);
            f.row(i) += fij;
            f.row(j) -= fij;
        }
    }
    return f;
}

QuadraticFit fit_quadratic(const PlanarMatrix& positions, const PlanarMatrix& forces) {
    const int n = static_cast<int>(positions.rows());
    if (n < 4)
        throw std::invalid_argument("fit_quadratic: need at least 4 ions for the six-parameter fit");
    if (forces.rows() != n)
        throw std::invalid_argument("fit_quadratic: positions/forces shape mismatch");

    // center coordinates for conditioning
    const Eigen::RowVector2d mean = positions.colwise().mean();
    // unknowns: alpha, beta, gamma, c_z, c_y with
    //   F_z = alpha z + gamma y + c_z,  F_y = gamma z + beta y + c_y
    Eigen::MatrixXd design(2 * n, 5);
    Eigen::VectorXd rhs(2 * n);
    for (int i = 0; i < n; ++i) {
        const double y = positions(i, 0) - mean[0];
        const double z = positions(i, 1) - mean[1];
        design.row(2 * i) << z, 0, y, 1, 0;
        rhs[2 * i] = forces(i, 1);
        design.row(2 * i + 1) << 0, y, z, 0, 1;
        rhs[2 * i + 1] = forces(i, 0);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 5)
        throw std::invalid_argument("fit_quadratic: rank-deficient design matrix");
    const Eigen::VectorXd u = qr.solve(rhs);

    QuadraticFit fit;
    fit.alpha = u[0];
    fit.beta = u[1];
    fit.gamma = u[2];

    // F = A (r - r0): recover the center from the constant force
    Eigen::Matrix2d a;
    a << fit.alpha, fit.gamma, fit.gamma, fit.beta; // acts on (z, y)
    const Eigen::Vector2d c(u[3], u[4]);
    const Eigen::Vector2d r0_centered = -a.fullPivLu().solve(c); // (z, y)
    fit.z0 = r0_centered[0] + mean[1];
    fit.y0 = r0_centered[1] + mean[0];

    const double tr = fit.alpha + fit.beta;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - (fit.alpha * fit.beta -
                                                                 fit.gamma * fit.gamma)));
    fit.curvature_major = tr / 2.0 + disc;
    fit.curvature_minor = tr / 2.0 - disc;
    fit.xi_inv = fit.curvature_major > 0
                     ? std::sqrt(std::max(0.0, fit.curvature_minor) / fit.curvature_major)
                     : 0.0;

    // rotation of the principal frame nearest the image axes, |phi| <= pi/4
    double phi = 0.5 * std::atan2(2.0 * fit.gamma, fit.alpha - fit.beta);
    if (phi > constants::pi / 4.0) phi -= constants::pi / 2.0;
    if (phi < -constants::pi / 4.0) phi += constants::pi / 2.0;
    fit.phi = phi;

    const double c2 = std::cos(phi), s2 = std::sin(phi);
    fit.curvature_z_prime =
        c2 * c2 * fit.alpha + 2.0 * s2 * c2 * fit.gamma + s2 * s2 * fit.beta;
    return fit;
}

ResidualField residuals(const PlanarMatrix& positions, const PlanarMatrix& forces,
                        const QuadraticFit& fit) {
    const int n = static_cast<int>(positions.rows());
    if (forces.rows() != n)
        throw std::invalid_argument("residuals: positions/forces shape mismatch");
    ResidualField out;
    out.delta.resize(n, 2);
    const double c = std::cos(fit.phi), s = std::sin(fit.phi);
    for (int i = 0; i < n; ++i) {
        const double z = positions(i, 1) - fit.z0;
        const double y = positions(i, 0) - fit.y0;
        const double fz_hat = fit.alpha * z + fit.gamma * y;
        const double fy_hat = fit.gamma * z + fit.beta * y;
        const double dz = forces(i, 1) - fz_hat;
        const double dy = forces(i, 0) - fy_hat;
        // principal frame: z' = z cos phi + y sin phi, y' = -z sin phi + y cos phi
        out.delta(i, 1) = dz * c + dy * s;
        out.delta(i, 0) = -dz * s + dy * c;
    }
    out.rms = std::sqrt(out.delta.squaredNorm() / (2.0 * n));
    return out;
}

double calibrate_scale(const PlanarMatrix& pixel_positions, double known_omega_z,
                       const PotentialSpec& spec) {
    if (!(known_omega_z > 0))
        throw std::invalid_argument("calibrate_scale: omega_z must be > 0");
    const PlanarMatrix f_px = coulomb_force_field(pixel_positions);
    const QuadraticFit fit = fit_quadratic(pixel_positions, f_px);
    if (!(fit.curvature_minor > 0))
        throw std::invalid_argument("calibrate_scale: fit is not confining");
    // m omega_z^2 = k_e q^2 * lambda_px / s^3
    const double ke_q2 = constants::coulomb_constant * spec.charge * spec.charge;
    return std::cbrt(ke_q2 * fit.curvature_z_prime /
                     (spec.mass * known_omega_z * known_omega_z));
}

} // namespace planarion
