#include "planarion/modes.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace planarion {

namespace {

// Canonical eigenvector sign: largest-magnitude component positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
}

} // namespace

Eigen::MatrixXd hessian_matrix(const PositionMatrix& x, const Eigen::Vector3d& curv) {
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < 3; ++d) h(3 * i + d, 3 * i + d) = curv[d];
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Eigen::RowVector3d dr = x.row(i) - x.row(j);
            const double r2 = dr.squaredNorm();
            const double r = std::sqrt(r2);
            if (r < 1e-9)
                throw std::invalid_argument("hessian: coincident ions");
            const double inv_r3 = 1.0 / (r2 * r);
            const double inv_r5 = inv_r3 / r2;
            // d^2 (1/r) / dri drj = delta/r^3 - 3 dr dr^T / r^5 for i != j
            Eigen::Matrix3d kernel = -3.0 * inv_r5 * dr.transpose() * dr;
            kernel.diagonal().array() += inv_r3;
            h.block<3, 3>(3 * i, 3 * j) = kernel;
            h.block<3, 3>(3 * j, 3 * i) = kernel;
            h.block<3, 3>(3 * i, 3 * i) -= kernel;
            h.block<3, 3>(3 * j, 3 * j) -= kernel;
        }
    }
    return h;
}

Eigen::MatrixXd hessian(const IonConfiguration& config, const PotentialSpec& spec) {
    config.validate();
    const PositionMatrix f = forces(config, spec);
    if (f.cwiseAbs().maxCoeff() > 1e-6)
        std::cerr << "planarion: warning: hessian evaluated away from a relaxed minimum "
                     "(max |F| = "
                  << f.cwiseAbs().maxCoeff() << " E0/l0)\n";
    return hessian_matrix(config.positions, spec.curvatures());
}

ModeSpectrum mode_spectrum(const IonConfiguration& config, const PotentialSpec& spec) {
    config.validate();
    const int n = config.n_ions();
    const Eigen::MatrixXd h = hessian_matrix(config.positions, spec.curvatures());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("mode_spectrum: eigen-decomposition failed");

    const Eigen::VectorXd evals = solver.eigenvalues(); // ascending
    const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
    if (evals[0] < -1e-10 * scale)
        throw std::runtime_error(
            "mode_spectrum: negative eigenvalue; the input configuration is structurally "
            "unstable (not a local minimum)");

    ModeSpectrum s;
    s.frequencies.resize(3 * n);
    s.eigenvectors = solver.eigenvectors();
    s.labels.resize(3 * n);
    for (int m = 0; m < 3 * n; ++m) {
        s.frequencies[m] = spec.omega_z * std::sqrt(std::max(0.0, evals[m]));
        fix_sign(s.eigenvectors.col(m));
        double wx = 0;
        for (int i = 0; i < n; ++i) wx += s.eigenvectors(3 * i, m) * s.eigenvectors(3 * i, m);
        s.labels[m] = wx > 0.5 ? ModePolarization::OutOfPlane : ModePolarization::InPlane;
    }
    return s;
}

OutOfPlaneBlock out_of_plane_block(const IonConfiguration& config, const PotentialSpec& spec) {
    config.validate();
    const PlanarCheck pc = is_planar(config);
    if (!pc.planar)
        throw std::invalid_argument("out_of_plane_block: configuration is not planar (max |x| = " +
                                    std::to_string(pc.max_excursion) + " l0)");
    const int n = config.n_ions();
    const Eigen::Vector3d curv = spec.curvatures();
    OutOfPlaneBlock b;
    b.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) b.matrix(i, i) = curv[0];
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r = (config.positions.row(i) - config.positions.row(j)).norm();
            const double inv_r3 = 1.0 / (r * r * r);
            // in-plane separation: the xx kernel is +1/r^3 off-diagonal
            b.matrix(i, j) = inv_r3;
            b.matrix(j, i) = inv_r3;
            b.matrix(i, i) -= inv_r3;
            b.matrix(j, j) -= inv_r3;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b.matrix);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("out_of_plane_block: eigen-decomposition failed");
    b.frequencies.resize(n);
    b.eigenvectors = solver.eigenvectors();
    for (int m = 0; m < n; ++m) {
        b.frequencies[m] = spec.omega_z * std::sqrt(std::max(0.0, solver.eigenvalues()[m]));
        fix_sign(b.eigenvectors.col(m));
    }
    return b;
}

CouplingTable lamb_dicke(const ModeSpectrum& spectrum, const Eigen::Vector3d& k,
                         const PotentialSpec& spec) {
    const int n_modes = spectrum.n_modes();
    const int n_ions = n_modes / 3;
    CouplingTable t;
    t.eta = Eigen::MatrixXd::Zero(n_ions, n_modes);
    t.excluded.assign(n_modes, false);
    for (int m = 0; m < n_modes; ++m) {
        const double w = spectrum.frequencies[m];
        if (!(w > 0)) {
            t.excluded[m] = true;
            continue;
        }
        const double zpf = std::sqrt(constants::hbar / (2.0 * spec.mass * w));
        for (int i = 0; i < n_ions; ++i)
            t.eta(i, m) = k.dot(spectrum.ion_amplitude(i, m)) * zpf;
    }
    return t;
}

std::vector<SidebandLine> sideband_positions(const ModeSpectrum& spectrum, double group_tol_hz) {
    std::vector<double> detunings;
    detunings.reserve(spectrum.n_modes());
    for (int m = 0; m < spectrum.n_modes(); ++m)
        detunings.push_back(-spectrum.frequencies[m] / (2.0 * constants::pi));
    std::sort(detunings.begin(), detunings.end());
    std::vector<SidebandLine> lines;
    for (double d : detunings) {
        if (!lines.empty() && std::abs(d - lines.back().detuning_hz) < group_tol_hz)
            ++lines.back().multiplicity;
        else
            lines.push_back({d, 1});
    }
    return lines;
}

} // namespace planarion
