#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "planarion/equilibrium.hpp"

namespace planarion::test {

// Scratch directory cleaned up on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("planarion_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Independent finite-difference gradient of the crystal energy.
inline PositionMatrix fd_forces(const IonConfiguration& config, const PotentialSpec& spec,
                                double h = 1e-6) {
    PositionMatrix g(config.n_ions(), 3);
    for (int i = 0; i < config.n_ions(); ++i) {
        for (int d = 0; d < 3; ++d) {
            IonConfiguration plus = config, minus = config;
            plus.positions(i, d) += h;
            minus.positions(i, d) -= h;
            g(i, d) = -(total_energy(plus, spec) - total_energy(minus, spec)) / (2 * h);
        }
    }
    return g;
}

// Random well-separated cloud for gradient checks.
inline IonConfiguration random_cloud(int n, std::uint64_t seed, double spread = 3.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-spread, spread);
    IonConfiguration c = IonConfiguration::zeros(n);
    for (int i = 0; i < n; ++i) {
        for (;;) {
            Eigen::RowVector3d p(u(rng), u(rng), u(rng));
            bool clear = true;
            for (int j = 0; j < i; ++j)
                if ((p - c.positions.row(j)).norm() < 0.5) clear = false;
            if (clear) {
                c.positions.row(i) = p;
                break;
            }
        }
    }
    return c;
}

// Frequency of a clean oscillation from interpolated upward zero crossings.
inline double zero_crossing_frequency(const Eigen::VectorXd& x, double dt) {
    double first = -1, last = -1;
    long count = 0;
    for (Eigen::Index k = 1; k < x.size(); ++k) {
        if (x[k - 1] < 0 && x[k] >= 0) {
            const double frac = -x[k - 1] / (x[k] - x[k - 1]);
            const double t = (static_cast<double>(k - 1) + frac) * dt;
            if (first < 0)
                first = t;
            else
                ++count;
            last = t;
        }
    }
    if (count < 1) throw std::runtime_error("zero_crossing_frequency: too few periods");
    return static_cast<double>(count) / (last - first);
}

} // namespace planarion::test
