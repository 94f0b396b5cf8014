#include "planarion/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "planarion/modes.hpp"
#include "planarion/parallel.hpp"

namespace planarion {

namespace {

constexpr double kMinSeparation = 1e-9; // l0

double pair_energy(const PositionMatrix& x, bool* coincident) {
    const int n = static_cast<int>(x.rows());
    double e = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r = (x.row(i) - x.row(j)).norm();
            if (r < kMinSeparation) {
                if (coincident) {
                    *coincident = true;
                    return std::numeric_limits<double>::infinity();
                }
                throw std::invalid_argument("coincident ions (pairwise distance below 1e-9 l0)");
            }
            e += 1.0 / r;
        }
    }
    return e;
}

double energy_of(const PositionMatrix& x, const Eigen::Vector3d& curv, bool* coincident = nullptr) {
    if (coincident) *coincident = false;
    double e = pair_energy(x, coincident);
    if (coincident && *coincident) return e;
    for (int d = 0; d < 3; ++d) e += 0.5 * curv[d] * x.col(d).squaredNorm();
    return e;
}

void forces_of(const PositionMatrix& x, const Eigen::Vector3d& curv, PositionMatrix& f) {
    const int n = static_cast<int>(x.rows());
    f.resize(n, 3);
    for (int d = 0; d < 3; ++d) f.col(d) = -curv[d] * x.col(d);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            Eigen::RowVector3d dr = x.row(i) - x.row(j);
            const double r = dr.norm();
            if (r < kMinSeparation)
                throw std::invalid_argument("coincident ions (pairwise distance below 1e-9 l0)");
            Eigen::RowVector3d fij = dr / (r * r * r);
            f.row(i) += fij;
            f.row(j) -= fij;
        }
    }
}

// Energy change when ion j moves to p, against the rest of the configuration.
// Returns +inf when the move would bring two ions within kMinSeparation.
double move_delta(const PositionMatrix& x, const Eigen::Vector3d& curv, int j,
                  const Eigen::RowVector3d& p) {
    const int n = static_cast<int>(x.rows());
    const Eigen::RowVector3d old = x.row(j);
    double de = 0;
    for (int d = 0; d < 3; ++d)
        de += 0.5 * curv[d] * (p[d] * p[d] - old[d] * old[d]);
    for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        const double rn = (p - x.row(i)).norm();
        if (rn < 1e-7) return std::numeric_limits<double>::infinity();
        de += 1.0 / rn - 1.0 / (old - x.row(i)).norm();
    }
    return de;
}

// Metropolis stage shared by anneal() and anneal_from(). Mutates x in place.
void run_metropolis(PositionMatrix& x, const Eigen::Vector3d& curv,
                    const AnnealSchedule& sched, std::mt19937_64& rng) {
    const int n = static_cast<int>(x.rows());
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    const Eigen::Vector3d inv_sqrt_curv = curv.cwiseSqrt().cwiseInverse();
    const double cool =
        sched.sweeps > 1 ? std::pow(sched.end_temp / sched.start_temp, 1.0 / (sched.sweeps - 1))
                         : 1.0;
    double temp = sched.start_temp;
    for (int s = 0; s < sched.sweeps; ++s, temp *= cool) {
        const double step = sched.step_scale * std::sqrt(temp / sched.start_temp);
        for (int m = 0; m < n; ++m) {
            const int j = pick(rng);
            Eigen::RowVector3d trial = x.row(j);
            for (int d = 0; d < 3; ++d) trial[d] += step * inv_sqrt_curv[d] * gauss(rng);
            const double de = move_delta(x, curv, j, trial);
            if (de <= 0 || (std::isfinite(de) && unif(rng) < std::exp(-de / temp)))
                x.row(j) = trial;
        }
    }
}

PositionMatrix sample_seed_positions(int n, const PotentialSpec& spec, std::mt19937_64& rng) {
    const SeedEllipse ell = seed_ellipse(n, spec);
    const Eigen::Vector3d curv = PotentialSpec(spec).curvatures();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int minor_axis = ell.major_axis == 2 ? 1 : 2;
    const double mean_spacing =
        std::sqrt(constants::pi * ell.semi_major * ell.semi_minor / std::max(1, n));
    PositionMatrix x = PositionMatrix::Zero(n, 3);
    for (int i = 0; i < n; ++i) {
        Eigen::RowVector3d p;
        for (int attempt = 0; attempt < 200; ++attempt) {
            const double r = std::sqrt(unif(rng));
            const double th = 2.0 * constants::pi * unif(rng);
            p.setZero();
            p[ell.major_axis] = ell.semi_major * r * std::cos(th);
            p[minor_axis] = ell.semi_minor * r * std::sin(th);
            p[0] = 0.05 * gauss(rng) / std::sqrt(curv[0]); // break planar symmetry
            bool clear = true;
            for (int k = 0; k < i; ++k)
                if ((p - x.row(k)).norm() < 0.5 * mean_spacing) {
                    clear = false;
                    break;
                }
            if (clear) break;
        }
        x.row(i) = p;
    }
    return x;
}

struct ClassAccum {
    IonConfiguration rep;
    double energy = 0;
    int occurrences = 0;
};

// Insert a relaxed result into the class list (first match wins; the lowest
// energy seen becomes the class energy/representative).
void classify_into(std::vector<ClassAccum>& classes, const IonConfiguration& cfg,
                   double energy, int occurrence_weight) {
    for (auto& c : classes) {
        if (same_configuration_class(c.rep, c.energy, cfg, energy)) {
            c.occurrences += occurrence_weight;
            if (energy < c.energy) {
                c.energy = energy;
                c.rep = cfg;
            }
            return;
        }
    }
    classes.push_back({cfg, energy, occurrence_weight});
}

std::vector<ConfigurationClass> finalize_classes(std::vector<ClassAccum> classes) {
    std::sort(classes.begin(), classes.end(),
              [](const ClassAccum& a, const ClassAccum& b) { return a.energy < b.energy; });
    std::vector<ConfigurationClass> out;
    out.reserve(classes.size());
    for (auto& c : classes) {
        ConfigurationClass cc;
        cc.representative = std::move(c.rep);
        cc.energy = c.energy;
        cc.occurrences = c.occurrences;
        cc.multiplicity = symmetry_multiplicity(cc.representative);
        out.push_back(std::move(cc));
    }
    return out;
}

std::vector<ClassAccum> enumerate_accum(int n_ions, const PotentialSpec& spec, int runs,
                                        const AnnealSchedule& schedule, int threads) {
    std::vector<IonConfiguration> results(runs);
    parallel_runs(runs, threads, [&](int k) {
        AnnealSchedule s = schedule;
        s.seed = schedule.seed + static_cast<std::uint64_t>(k);
        results[k] = anneal(n_ions, spec, s);
    });
    std::vector<ClassAccum> classes;
    for (const auto& cfg : results)
        classify_into(classes, cfg, total_energy(cfg, spec), 1);
    return classes;
}

} // namespace

void IonConfiguration::validate() const {
    if (positions.rows() < 1)
        throw std::invalid_argument("IonConfiguration: at least one ion required");
    if (!positions.allFinite())
        throw std::invalid_argument("IonConfiguration: non-finite coordinates");
    const int n = n_ions();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((positions.row(i) - positions.row(j)).norm() < kMinSeparation)
                throw std::invalid_argument("IonConfiguration: coincident ions");
}

IonConfiguration IonConfiguration::zeros(int n) {
    IonConfiguration c;
    c.positions = PositionMatrix::Zero(n, 3);
    return c;
}

void AnnealSchedule::validate() const {
    if (!(start_temp > end_temp) || !(end_temp > 0))
        throw std::invalid_argument("AnnealSchedule: need start_temp > end_temp > 0");
    if (sweeps < 1) throw std::invalid_argument("AnnealSchedule: sweeps must be >= 1");
    if (!(step_scale > 0)) throw std::invalid_argument("AnnealSchedule: step_scale must be > 0");
}

double GapCurve::first_excited_gap_mK(std::size_t i) const {
    if (i >= classes.size() || classes[i].size() < 2)
        throw std::out_of_range("GapCurve: no excited configuration recorded at this anisotropy");
    return classes[i][1].gap_mK;
}

double total_energy(const IonConfiguration& config, const PotentialSpec& spec) {
    config.validate();
    return energy_of(config.positions, spec.curvatures());
}

PositionMatrix forces(const IonConfiguration& config, const PotentialSpec& spec) {
    config.validate();
    PositionMatrix f;
    forces_of(config.positions, spec.curvatures(), f);
    return f;
}

IonConfiguration relax(const IonConfiguration& start, const PotentialSpec& spec,
                       double tol, int max_iters) {
    start.validate();
    const Eigen::Vector3d curv = spec.curvatures();
    PositionMatrix x = start.positions;
    const int n = static_cast<int>(x.rows());

    double energy = energy_of(x, curv);
    double alpha = 1e-2;
    PositionMatrix f;
    forces_of(x, curv, f);
    double fmax = f.cwiseAbs().maxCoeff();
    // Newton is entered once gradient descent gets this close; the transient
    // force increase of a full Newton step is tolerated inside the burst.
    double newton_threshold = 1e-4;

    // One Newton step with a tiny diagonal shift (keeps soft modes such as the
    // in-plane rotation of an isotropic crystal from derailing the solve).
    auto newton_step = [&](PositionMatrix& pos, PositionMatrix& force, double& force_max) {
        Eigen::MatrixXd h = hessian_matrix(pos, curv);
        h.diagonal().array() += 1e-9 * h.trace() / (3 * n);
        Eigen::VectorXd g(3 * n);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 3; ++d) g[3 * i + d] = force(i, d);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success) return false;
        const Eigen::VectorXd step = ldlt.solve(g);
        if (!step.allFinite() || step.cwiseAbs().maxCoeff() > 0.5) return false;
        PositionMatrix trial = pos;
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 3; ++d) trial(i, d) += step[3 * i + d];
        try {
            PositionMatrix f_trial;
            forces_of(trial, curv, f_trial);
            pos = std::move(trial);
            force = std::move(f_trial);
            force_max = force.cwiseAbs().maxCoeff();
            return true;
        } catch (const std::invalid_argument&) {
            return false; // collision on the trial step
        }
    };

    for (int iter = 0; iter < max_iters; ++iter) {
        if (fmax < tol) {
            IonConfiguration out;
            out.positions = std::move(x);
            return out;
        }

        if (fmax < newton_threshold) {
            const PositionMatrix x_entry = x;
            const PositionMatrix f_entry = f;
            const double fmax_entry = fmax;
            bool diverged = false;
            for (int k = 0; k < 60 && fmax >= tol; ++k) {
                if (!newton_step(x, f, fmax) || fmax > 100 * newton_threshold) {
                    diverged = true;
                    break;
                }
            }
            if (fmax < tol) {
                IonConfiguration out;
                out.positions = std::move(x);
                return out;
            }
            if (diverged) {
                x = x_entry;
                f = f_entry;
                fmax = fmax_entry;
            }
            // converge further by descent before retrying Newton
            newton_threshold /= 10.0;
            if (newton_threshold < 1e3 * tol)
                throw std::runtime_error(
                    "relax: Newton polish failed to converge, gradient max |F| = " +
                    std::to_string(fmax));
        }

        // adaptive gradient descent with backtracking
        bool moved = false;
        while (alpha > 1e-18) {
            PositionMatrix trial = x + alpha * f;
            bool bad = false;
            const double et = energy_of(trial, curv, &bad);
            if (!bad && et <= energy - 1e-4 * alpha * f.squaredNorm()) {
                x = std::move(trial);
                energy = et;
                alpha = std::min(alpha * 1.25, 1.0);
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved)
            throw std::runtime_error("relax: line search stalled at gradient max |F| = " +
                                     std::to_string(fmax));
        forces_of(x, curv, f);
        fmax = f.cwiseAbs().maxCoeff();
    }
    throw std::runtime_error("relax: no convergence within max_iters, gradient max |F| = " +
                             std::to_string(fmax));
}

SeedEllipse seed_ellipse(int n_ions, const PotentialSpec& spec) {
    spec.validate();
    if (n_ions < 1) throw std::invalid_argument("seed_ellipse: n_ions must be >= 1");
    SeedEllipse e;
    const double wy = spec.omega_y, wz = spec.omega_z;
    const double xi_eff = std::max(wy, wz) / std::min(wy, wz);
    const double zeta = aspect_ratio_theory(1.0 / xi_eff);
    const double kappa_gm = wy * wz / (spec.omega_z * spec.omega_z); // geometric-mean curvature
    const double r_iso = std::cbrt(3.0 * constants::pi * n_ions / (8.0 * kappa_gm));
    e.semi_major = r_iso / std::sqrt(zeta);
    e.semi_minor = r_iso * std::sqrt(zeta);
    e.major_axis = wy >= wz ? 2 : 1; // crystal extends along the weaker axis
    return e;
}

IonConfiguration anneal(int n_ions, const PotentialSpec& spec, const AnnealSchedule& schedule) {
    spec.validate();
    schedule.validate();
    if (n_ions < 1) throw std::invalid_argument("anneal: n_ions must be >= 1");
    std::mt19937_64 rng(schedule.seed);
    PositionMatrix x = sample_seed_positions(n_ions, spec, rng);
    run_metropolis(x, spec.curvatures(), schedule, rng);
    IonConfiguration c;
    c.positions = std::move(x);
    return relax(c, spec);
}

IonConfiguration anneal_from(const IonConfiguration& start, const PotentialSpec& spec,
                             const AnnealSchedule& schedule) {
    start.validate();
    schedule.validate();
    std::mt19937_64 rng(schedule.seed);
    PositionMatrix x = start.positions;
    run_metropolis(x, spec.curvatures(), schedule, rng);
    IonConfiguration c;
    c.positions = std::move(x);
    return relax(c, spec);
}

std::vector<ConfigurationClass> enumerate_configurations(int n_ions, const PotentialSpec& spec,
                                                         int runs, const AnnealSchedule& schedule,
                                                         int threads) {
    if (runs < 1) throw std::invalid_argument("enumerate_configurations: runs must be >= 1");
    return finalize_classes(enumerate_accum(n_ions, spec, runs, schedule, threads));
}

GapCurve anisotropy_sweep(int n_ions, const PotentialSpec& base,
                          const std::vector<double>& xi_values, int runs,
                          const AnnealSchedule& schedule, int threads) {
    if (xi_values.empty())
        throw std::invalid_argument("anisotropy_sweep: xi_values must be nonempty");
    std::vector<double> xis = xi_values;
    std::sort(xis.begin(), xis.end());
    const std::size_t m = xis.size();

    std::vector<PotentialSpec> specs;
    specs.reserve(m);
    for (double xi : xis) specs.push_back(base.with_xi(xi));

    std::vector<std::vector<ClassAccum>> accum(m);
    for (std::size_t i = 0; i < m; ++i)
        accum[i] = enumerate_accum(n_ions, specs[i], runs, schedule, threads);

    // Continuation: carry every class found at one anisotropy into its
    // neighbors, once by direct relaxation and once through a slower, colder
    // annealing stage. Forward then backward.
    auto warm_start = [&](std::size_t from, std::size_t to) {
        AnnealSchedule slow = schedule;
        slow.start_temp = schedule.start_temp / 5.0;
        slow.sweeps = schedule.sweeps * 2;
        std::vector<IonConfiguration> seeds;
        seeds.reserve(accum[from].size());
        for (const auto& c : accum[from]) seeds.push_back(c.rep);
        std::vector<IonConfiguration> quenched(seeds.size()), annealed(seeds.size());
        parallel_runs(static_cast<int>(seeds.size()), threads, [&](int k) {
            quenched[k] = relax(seeds[k], specs[to]);
            AnnealSchedule s = slow;
            s.seed = schedule.seed + 7919 * (to + 1) + 104729 * static_cast<std::uint64_t>(k);
            annealed[k] = anneal_from(seeds[k], specs[to], s);
        });
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            classify_into(accum[to], quenched[k], total_energy(quenched[k], specs[to]), 0);
            classify_into(accum[to], annealed[k], total_energy(annealed[k], specs[to]), 0);
        }
    };
    for (std::size_t i = 1; i < m; ++i) warm_start(i - 1, i);
    for (std::size_t i = m - 1; i-- > 0;) warm_start(i + 1, i);

    GapCurve curve;
    curve.anisotropies = xis;
    curve.classes.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const UnitSystem units = UnitSystem::from(specs[i]);
        auto sorted = finalize_classes(std::move(accum[i]));
        const double ground = sorted.empty() ? 0.0 : sorted.front().energy;
        for (std::size_t c = 0; c < sorted.size(); ++c) {
            GapCurve::Entry e;
            e.class_id = static_cast<int>(c);
            e.energy_e0 = sorted[c].energy;
            e.gap_e0 = sorted[c].energy - ground;
            e.gap_mK = units.to_kelvin(e.gap_e0) * 1e3;
            e.occurrences = sorted[c].occurrences;
            e.multiplicity = sorted[c].multiplicity;
            curve.classes[i].push_back(e);
        }
    }
    return curve;
}

double aspect_ratio_measured(const IonConfiguration& config) {
    config.validate();
    const int n = config.n_ions();
    if (n < 3) throw std::invalid_argument("aspect_ratio_measured: need at least 3 ions");
    const Eigen::VectorXd y = config.positions.col(1);
    const Eigen::VectorXd z = config.positions.col(2);
    const double my = y.mean(), mz = z.mean();
    const Eigen::VectorXd dy = y.array() - my, dz = z.array() - mz;
    Eigen::Matrix2d c;
    c << dy.dot(dy), dy.dot(dz), dy.dot(dz), dz.dot(dz);
    c /= n;
    const double tr = c.trace(), det = c.determinant();
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double l1 = tr / 2.0 + disc, l2 = tr / 2.0 - disc;
    if (!(l1 > 0) || l2 < 1e-12 * l1)
        throw std::invalid_argument("aspect_ratio_measured: degenerate (collinear) configuration");
    return std::sqrt(l2 / l1);
}

double aspect_ratio_theory(double xi_inverse) {
    if (!(xi_inverse > 0) || !(xi_inverse <= 1.0))
        throw std::invalid_argument("aspect_ratio_theory: xi_inverse must lie in (0, 1]");
    if (xi_inverse == 1.0) return 1.0;
    const double target = xi_inverse * xi_inverse;
    auto fluid_ratio = [](double zeta) {
        const double k = std::sqrt(std::max(0.0, 1.0 - zeta * zeta));
        const double kk = std::comp_ellint_1(k);
        const double ee = std::comp_ellint_2(k);
        return zeta * zeta * (kk - ee) / (ee - zeta * zeta * kk);
    };
    double lo = 1e-12, hi = 1.0 - 1e-15;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (fluid_ratio(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

PlanarCheck is_planar(const IonConfiguration& config, double tol) {
    config.validate();
    PlanarCheck r;
    r.max_excursion = config.positions.col(0).cwiseAbs().maxCoeff();
    r.planar = r.max_excursion < tol;
    return r;
}

std::vector<double> pairwise_distances_sorted(const IonConfiguration& config) {
    const int n = config.n_ions();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            d.push_back((config.positions.row(i) - config.positions.row(j)).norm());
    std::sort(d.begin(), d.end());
    return d;
}

bool same_configuration_class(const IonConfiguration& a, double energy_a,
                              const IonConfiguration& b, double energy_b,
                              double energy_tol, double dist_tol) {
    if (a.n_ions() != b.n_ions()) return false;
    if (std::abs(energy_a - energy_b) >= energy_tol) return false;
    const auto da = pairwise_distances_sorted(a);
    const auto db = pairwise_distances_sorted(b);
    for (std::size_t k = 0; k < da.size(); ++k) {
        const double scale = std::max({std::abs(da[k]), std::abs(db[k]), 1e-12});
        if (std::abs(da[k] - db[k]) > dist_tol * scale) return false;
    }
    return true;
}

bool point_sets_match(const PositionMatrix& a, const PositionMatrix& b, double tol) {
    if (a.rows() != b.rows()) return false;
    const int n = static_cast<int>(a.rows());
    std::vector<bool> used(n, false);
    for (int i = 0; i < n; ++i) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (used[j]) continue;
            const double d = (a.row(i) - b.row(j)).norm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best < 0 || best_d > tol) return false;
        used[best] = true;
    }
    return true;
}

IonConfiguration flipped(const IonConfiguration& config, bool flip_y, bool flip_z) {
    IonConfiguration out = config;
    if (flip_y) out.positions.col(1) = -out.positions.col(1).eval();
    if (flip_z) out.positions.col(2) = -out.positions.col(2).eval();
    return out;
}

int symmetry_multiplicity(const IonConfiguration& config, double tol) {
    IonConfiguration centered = config;
    centered.positions.rowwise() -= centered.positions.colwise().mean();
    int stabilizer = 1;
    for (int g = 1; g < 4; ++g) {
        const IonConfiguration v = flipped(centered, g & 1, g & 2);
        if (point_sets_match(centered.positions, v.positions, tol)) ++stabilizer;
    }
    if (stabilizer == 3) stabilizer = 4; // group closure under matching tolerance
    return 4 / stabilizer;
}

} // namespace planarion
