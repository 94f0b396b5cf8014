#pragma once

#include <vector>

#include <Eigen/Core>

#include "planarion/equilibrium.hpp"
#include "planarion/trapmath.hpp"

namespace planarion {

/// Options for the velocity-Verlet rf integrator. dt = 0 picks the default
/// drive period / 100. The static acceleration models a uniform dc force
/// (used e.g. to hold an ion off the rf null).
struct RfIntegrationOptions {
    double dt = 0;         // s
    double duration = 0;   // s
    int record_stride = 1; // store every k-th step
    PositionMatrix initial_velocities; // l0/s; empty = start at rest
    Eigen::Vector3d static_accel = Eigen::Vector3d::Zero(); // l0/s^2
};

/// Sampled rf trajectory on a uniform time grid commensurate with the drive.
struct RfTrajectory {
    std::vector<double> times;      // s
    std::vector<double> positions;  // flattened samples x ions x 3, l0
    std::vector<double> velocities; // same layout, l0/s
    int n_ions = 0;
    double dt = 0; // sample spacing, s
    MathieuSpec mathieu;

    std::size_t n_samples() const { return times.size(); }
    double position(std::size_t t, int ion, int axis) const {
        return positions[(t * n_ions + ion) * 3 + axis];
    }
    double velocity(std::size_t t, int ion, int axis) const {
        return velocities[(t * n_ions + ion) * 3 + axis];
    }
    /// Position time series of one ion along one axis.
    Eigen::VectorXd series(int ion, int axis) const;
};

struct SpectralPeak {
    int ion = 0;
    double freq_hz = 0;
    double amplitude = 0; // l0, window-corrected
};

/// Integrate the full time-dependent equations of motion
/// (Omega^2/4)(a_d + 2 q_d cos Omega t) quadrupole plus Coulomb forces, with
/// velocity Verlet. Deterministic; throws on oversized steps, on sampling
/// incommensurate with the drive period, and on ion collisions.
RfTrajectory integrate(const IonConfiguration& config, const MathieuSpec& mathieu,
                       const UnitSystem& units, const RfIntegrationOptions& opts);

/// Hann-windowed FFT of every ion's displacement along `axis`; local maxima
/// above threshold_factor x median magnitude, with parabolic sub-bin
/// interpolation. Requires at least 2^14 samples.
std::vector<SpectralPeak> extract_frequencies_fft(const RfTrajectory& traj, int axis,
                                                  double threshold_factor = 10.0);

/// Amplitude of the drive-frequency component of each ion's motion (l0),
/// demodulated over an integer number of rf periods. N x 3.
Eigen::MatrixXd micromotion_amplitude(const RfTrajectory& traj, double drive_freq);

} // namespace planarion
