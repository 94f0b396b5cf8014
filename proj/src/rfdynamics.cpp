#include "planarion/rfdynamics.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace planarion {

namespace {

constexpr double kCollisionDistance = 1e-6; // l0

// Coulomb acceleration in l0/s^2 = omega_ref^2 * dimensionless force.
void coulomb_accel(const PositionMatrix& x, double omega_ref2, PositionMatrix& acc) {
    const int n = static_cast<int>(x.rows());
    acc.setZero(n, 3);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            Eigen::RowVector3d dr = x.row(i) - x.row(j);
            const double r = dr.norm();
            if (r < kCollisionDistance)
                throw std::runtime_error("integrate: ion collision (distance < 1e-6 l0)");
            Eigen::RowVector3d f = dr * (omega_ref2 / (r * r * r));
            acc.row(i) += f;
            acc.row(j) -= f;
        }
    }
}

std::mutex fftw_plan_mutex;

} // namespace

Eigen::VectorXd RfTrajectory::series(int ion, int axis) const {
    Eigen::VectorXd s(static_cast<Eigen::Index>(n_samples()));
    for (std::size_t t = 0; t < n_samples(); ++t) s[static_cast<Eigen::Index>(t)] = position(t, ion, axis);
    return s;
}

RfTrajectory integrate(const IonConfiguration& config, const MathieuSpec& mathieu,
                       const UnitSystem& units, const RfIntegrationOptions& opts) {
    config.validate();
    mathieu.validate();
    secular_frequencies(mathieu); // rejects unstable parameter sets

    const double omega = mathieu.drive_freq;
    const double rf_period = 2.0 * constants::pi / omega;
    double dt = opts.dt > 0 ? opts.dt : rf_period / 100.0;
    if (dt > rf_period / 50.0)
        throw std::invalid_argument("integrate: dt exceeds rf period / 50");
    const double steps_per_period = rf_period / dt;
    if (std::abs(steps_per_period - std::round(steps_per_period)) > 1e-6)
        throw std::invalid_argument("integrate: dt must divide the rf period");
    if (!(opts.duration > 0))
        throw std::invalid_argument("integrate: duration must be > 0");
    if (opts.record_stride < 1)
        throw std::invalid_argument("integrate: record_stride must be >= 1");

    const int n = config.n_ions();
    const long steps = std::lround(opts.duration / dt);
    const double omega_ref2 = 1.0 / (units.time_scale * units.time_scale);

    PositionMatrix x = config.positions;
    PositionMatrix v;
    if (opts.initial_velocities.rows() == 0)
        v = PositionMatrix::Zero(n, 3);
    else if (opts.initial_velocities.rows() == n)
        v = opts.initial_velocities;
    else
        throw std::invalid_argument("integrate: initial velocity shape mismatch");

    const double pref = omega * omega / 4.0;
    auto trap_accel = [&](const PositionMatrix& pos, double t, PositionMatrix& acc) {
        const double c = std::cos(omega * t);
        for (int d = 0; d < 3; ++d) {
            const double k = pref * (mathieu.a[d] + 2.0 * mathieu.q[d] * c);
            acc.col(d) -= k * pos.col(d);
            acc.col(d).array() += opts.static_accel[d];
        }
    };

    RfTrajectory traj;
    traj.n_ions = n;
    traj.dt = dt * opts.record_stride;
    traj.mathieu = mathieu;
    const std::size_t n_rec = static_cast<std::size_t>(steps / opts.record_stride) + 1;
    traj.times.reserve(n_rec);
    traj.positions.reserve(n_rec * n * 3);
    traj.velocities.reserve(n_rec * n * 3);

    auto record = [&](double t) {
        traj.times.push_back(t);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 3; ++d) traj.positions.push_back(x(i, d));
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 3; ++d) traj.velocities.push_back(v(i, d));
    };

    PositionMatrix acc(n, 3), acc_next(n, 3);
    coulomb_accel(x, omega_ref2, acc);
    trap_accel(x, 0.0, acc);
    record(0.0);

    double t = 0.0;
    for (long s = 1; s <= steps; ++s) {
        x += dt * v + (0.5 * dt * dt) * acc;
        t = s * dt;
        coulomb_accel(x, omega_ref2, acc_next);
        trap_accel(x, t, acc_next);
        v += (0.5 * dt) * (acc + acc_next);
        acc.swap(acc_next);
        if (s % opts.record_stride == 0) record(t);
    }
    return traj;
}

std::vector<SpectralPeak> extract_frequencies_fft(const RfTrajectory& traj, int axis,
                                                  double threshold_factor) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("extract_frequencies_fft: bad axis");
    const std::size_t n = traj.n_samples();
    if (n < (1u << 14))
        throw std::invalid_argument("extract_frequencies_fft: need at least 2^14 samples");

    const std::size_t nbins = n / 2 + 1;
    std::vector<double> window(n), in(n);
    double wsum = 0;
    for (std::size_t t = 0; t < n; ++t) {
        window[t] = 0.5 * (1.0 - std::cos(2.0 * constants::pi * t / (n - 1)));
        wsum += window[t];
    }
    std::vector<std::complex<double>> out(nbins);

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }

    const double df = 1.0 / (traj.dt * static_cast<double>(n));
    std::vector<SpectralPeak> peaks;
    std::vector<double> mag(nbins);
    for (int ion = 0; ion < traj.n_ions; ++ion) {
        double mean = 0;
        for (std::size_t t = 0; t < n; ++t) mean += traj.position(t, ion, axis);
        mean /= static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t)
            in[t] = (traj.position(t, ion, axis) - mean) * window[t];
        fftw_execute(plan);
        for (std::size_t b = 0; b < nbins; ++b) mag[b] = std::abs(out[b]);

        std::vector<double> sorted(mag.begin() + 1, mag.end());
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        const double threshold = threshold_factor * median;
        if (!(threshold > 0)) continue; // silent trace

        for (std::size_t b = 2; b + 1 < nbins; ++b) {
            if (mag[b] <= threshold) continue;
            if (!(mag[b] > mag[b - 1] && mag[b] >= mag[b + 1])) continue;
            // parabolic interpolation on log magnitude
            const double l = std::log(std::max(mag[b - 1], 1e-300));
            const double c = std::log(mag[b]);
            const double r = std::log(std::max(mag[b + 1], 1e-300));
            const double denom = l - 2.0 * c + r;
            const double delta = denom != 0 ? 0.5 * (l - r) / denom : 0.0;
            const double peak_log = c - 0.25 * (l - r) * delta;
            SpectralPeak p;
            p.ion = ion;
            p.freq_hz = (static_cast<double>(b) + delta) * df;
            p.amplitude = 2.0 * std::exp(peak_log) / wsum;
            peaks.push_back(p);
        }
    }

    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }
    return peaks;
}

Eigen::MatrixXd micromotion_amplitude(const RfTrajectory& traj, double drive_freq) {
    if (!(drive_freq > 0))
        throw std::invalid_argument("micromotion_amplitude: drive frequency must be > 0");
    const double rf_period = 2.0 * constants::pi / drive_freq;
    const double per = rf_period / traj.dt;
    const long n_per = std::lround(per);
    std::size_t usable = traj.n_samples();
    if (n_per >= 1 && std::abs(per - n_per) < 1e-6) {
        usable = (traj.n_samples() / static_cast<std::size_t>(n_per)) *
                 static_cast<std::size_t>(n_per);
    }
    if (usable == 0) throw std::invalid_argument("micromotion_amplitude: empty trajectory");

    Eigen::MatrixXd amp = Eigen::MatrixXd::Zero(traj.n_ions, 3);
    for (int ion = 0; ion < traj.n_ions; ++ion) {
        for (int d = 0; d < 3; ++d) {
            std::complex<double> acc(0, 0);
            for (std::size_t t = 0; t < usable; ++t) {
                const double ph = drive_freq * traj.times[t];
                acc += traj.position(t, ion, d) *
                       std::complex<double>(std::cos(ph), -std::sin(ph));
            }
            amp(ion, d) = 2.0 * std::abs(acc) / static_cast<double>(usable);
        }
    }
    return amp;
}

} // namespace planarion
