#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "planarion/trapmath.hpp"

namespace planarion {

using PositionMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// N ion positions in l0 units. The central state object shared by the
/// equilibrium, mode, imaging and fitting code.
struct IonConfiguration {
    PositionMatrix positions;

    int n_ions() const { return static_cast<int>(positions.rows()); }
    void validate() const; // finite coordinates, pairwise distance > 1e-9 l0

    static IonConfiguration zeros(int n);
};

/// Metropolis annealing schedule. Temperatures in E0; exponential cooling
/// start -> end over `sweeps` sweeps of N single-ion moves each; trial step
/// scale shrinks with sqrt(T / start_temp).
struct AnnealSchedule {
    double start_temp = 0.1;
    double end_temp = 1e-6;
    int sweeps = 2000;
    double step_scale = 0.3; // l0
    std::uint64_t seed = 0;

    void validate() const;
};

/// One structural configuration class of relaxed local minima.
struct ConfigurationClass {
    IonConfiguration representative;
    double energy = 0;    // E0
    int multiplicity = 1; // symmetry-related in-plane variants: 1, 2 or 4
    int occurrences = 0;  // annealing runs that landed in this class
};

/// Gap-vs-anisotropy data: per anisotropy, the configuration classes sorted
/// by energy with their gaps above the ground configuration.
struct GapCurve {
    struct Entry {
        int class_id = 0;
        double energy_e0 = 0;
        double gap_e0 = 0;
        double gap_mK = 0;
        int occurrences = 0;
        int multiplicity = 1;
    };
    std::vector<double> anisotropies;
    std::vector<std::vector<Entry>> classes; // same length as anisotropies

    /// Gap of the first configuration above the ground state, mK.
    double first_excited_gap_mK(std::size_t i) const;
};

struct PlanarCheck {
    bool planar = false;
    double max_excursion = 0; // max_i |x_i|, l0
};

/// Total potential energy in E0 units:
/// E = 1/2 sum_i sum_d (omega_d/omega_z)^2 r_id^2 + sum_{i<j} 1/r_ij.
double total_energy(const IonConfiguration& config, const PotentialSpec& spec);

/// Forces -grad E in E0/l0 units. Coulomb parts obey Newton's third law.
PositionMatrix forces(const IonConfiguration& config, const PotentialSpec& spec);

/// Local minimization: adaptive gradient descent plus a Newton polish on the
/// 3N Hessian. Returns a configuration whose largest per-ion force component
/// is below tol. Throws on non-convergence, reporting the last gradient norm.
IonConfiguration relax(const IonConfiguration& start, const PotentialSpec& spec,
                       double tol = 1e-10, int max_iters = 20000);

/// Metropolis annealing from a random distribution inside the fluid-model
/// ellipse, followed by relax. Deterministic for a fixed schedule seed.
IonConfiguration anneal(int n_ions, const PotentialSpec& spec,
                        const AnnealSchedule& schedule);

/// Annealing restarted from an existing configuration (used for warm starts
/// when continuing across anisotropy values).
IonConfiguration anneal_from(const IonConfiguration& start, const PotentialSpec& spec,
                             const AnnealSchedule& schedule);

/// Repeated annealing runs (run k uses seed = schedule.seed + k), classified
/// into configuration classes and sorted by energy. threads = 0 picks the
/// hardware concurrency; results are independent of the thread count.
std::vector<ConfigurationClass> enumerate_configurations(int n_ions,
                                                         const PotentialSpec& spec,
                                                         int runs,
                                                         const AnnealSchedule& schedule,
                                                         int threads = 0);

/// Configuration census versus trap anisotropy at fixed omega_z: fresh
/// annealing per xi plus warm starts carried over from neighboring xi values
/// with a slower schedule (forward and backward passes).
GapCurve anisotropy_sweep(int n_ions, const PotentialSpec& base,
                          const std::vector<double>& xi_values, int runs,
                          const AnnealSchedule& schedule, int threads = 0);

/// Crystal aspect ratio zeta = sqrt(lambda_2/lambda_1) from the in-plane
/// position covariance. Throws for collinear/degenerate configurations.
double aspect_ratio_measured(const IonConfiguration& config);

/// Charged-fluid aspect ratio: root of
/// zeta^2 (K - E) / (E - zeta^2 K) = xi^{-2}, K/E complete elliptic integrals
/// of modulus sqrt(1 - zeta^2). Root bracketed and solved to 1e-10.
double aspect_ratio_theory(double xi_inverse);

/// Empirical planarity: true iff max_i |x_i| < tol.
PlanarCheck is_planar(const IonConfiguration& config, double tol = 1e-6);

// --- configuration identity -------------------------------------------------
// Two relaxed configurations belong to the same class iff their energies agree
// to 1e-6 E0 and the sorted multisets of pairwise distances agree element-wise
// to 1e-3 relative (a permutation- and mirror-invariant test).

std::vector<double> pairwise_distances_sorted(const IonConfiguration& config);

bool same_configuration_class(const IonConfiguration& a, double energy_a,
                              const IonConfiguration& b, double energy_b,
                              double energy_tol = 1e-6, double dist_tol = 1e-3);

/// True when the two point sets coincide up to relabeling (nearest-neighbor
/// matching within tol).
bool point_sets_match(const PositionMatrix& a, const PositionMatrix& b, double tol);

/// Apply in-plane sign flips: flip_y / flip_z negate the respective column.
IonConfiguration flipped(const IonConfiguration& config, bool flip_y, bool flip_z);

/// 4 / |stabilizer| of the configuration under the in-plane flip group
/// {id, flip_y, flip_z, flip_yz}: 1 for a doubly symmetric crystal, 2 or 4
/// otherwise.
int symmetry_multiplicity(const IonConfiguration& config, double tol = 1e-3);

/// Seed ellipse for annealing: semi-axes (along the weaker and stronger
/// in-plane axes) from the fluid model, scaled so an isotropic crystal has
/// radius (3 pi N / (8 kappa))^{1/3}.
struct SeedEllipse {
    double semi_major = 0; // l0, along the weaker in-plane axis
    double semi_minor = 0; // l0
    int major_axis = 2;    // column index: 1 = y, 2 = z
};
SeedEllipse seed_ellipse(int n_ions, const PotentialSpec& spec);

} // namespace planarion
