#include "doctest.h"

#include <cmath>
#include <cstring>

#include "planarion/equilibrium.hpp"
#include "helpers.hpp"

using namespace planarion;
using namespace planarion::test;

namespace {

// isotropic in-plane trap (xi = 1), strong x confinement
PotentialSpec iso_spec() { return PotentialSpec::ca40(3.43e6, 0.343e6, 0.343e6); }

// two ions on the z axis at the analytic minimum: separation 2^(1/3) l0
IonConfiguration two_ion_minimum() {
    IonConfiguration c = IonConfiguration::zeros(2);
    const double half = std::cbrt(2.0) / 2.0;
    c.positions(0, 2) = half;
    c.positions(1, 2) = -half;
    return c;
}

const double kTwoIonEnergy = 1.5 * std::pow(2.0, -1.0 / 3.0); // = 1.19055...

} // namespace

TEST_SUITE("equilibrium") {

TEST_CASE("total energy of canonical configurations") {
    const PotentialSpec spec = iso_spec();
    CHECK(total_energy(IonConfiguration::zeros(1), spec) == 0.0);

    // analytic two-ion minimum: E = d^2/4 + 1/d at d = 2^(1/3)
    CHECK(total_energy(two_ion_minimum(), spec) ==
          doctest::Approx(kTwoIonEnergy).epsilon(1e-12));

    SUBCASE("translating a centered config along z adds N dz^2 / 2") {
        const IonConfiguration c = two_ion_minimum();
        IonConfiguration shifted = c;
        const double dz = 0.37;
        shifted.positions.col(2).array() += dz;
        CHECK(total_energy(shifted, spec) - total_energy(c, spec) ==
              doctest::Approx(2 * dz * dz / 2.0).epsilon(1e-10));
    }

    SUBCASE("coincident ions are rejected") {
        IonConfiguration c = IonConfiguration::zeros(2);
        CHECK_THROWS_AS(total_energy(c, spec), std::invalid_argument);
    }

    SUBCASE("energy is invariant under coordinate sign flips") {
        const PotentialSpec aniso = PotentialSpec::ca40(2.196e6, 0.68e6, 0.343e6);
        const IonConfiguration c = random_cloud(12, 7);
        const double e = total_energy(c, aniso);
        for (int g = 1; g < 4; ++g) {
            IonConfiguration f = flipped(c, g & 1, g & 2);
            CHECK(total_energy(f, aniso) == doctest::Approx(e).epsilon(1e-14));
        }
        IonConfiguration fx = c;
        fx.positions.col(0) = -fx.positions.col(0).eval();
        CHECK(total_energy(fx, aniso) == doctest::Approx(e).epsilon(1e-14));
    }
}

TEST_CASE("forces match the finite-difference gradient") {
    const PotentialSpec spec = PotentialSpec::ca40(2.196e6, 0.68e6, 0.343e6);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const IonConfiguration c = random_cloud(10, seed);
        const PositionMatrix f = forces(c, spec);
        const PositionMatrix fd = fd_forces(c, spec);
        const double scale = fd.cwiseAbs().maxCoeff();
        CHECK((f - fd).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
}

TEST_CASE("force properties") {
    const PotentialSpec spec = iso_spec();

    SUBCASE("both forces vanish at the two-ion minimum") {
        const PositionMatrix f = forces(two_ion_minimum(), spec);
        CHECK(f.cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("single displaced ion feels the bare trap force") {
        IonConfiguration c = IonConfiguration::zeros(1);
        c.positions(0, 0) = 1.0;
        const PositionMatrix f = forces(c, spec);
        const double kx = spec.curvatures()[0];
        CHECK(f(0, 0) == doctest::Approx(-kx).epsilon(1e-14));
        CHECK(f(0, 1) == 0.0);
        CHECK(f(0, 2) == 0.0);
    }
    SUBCASE("Coulomb forces obey Newton's third law") {
        const PotentialSpec free_ish = PotentialSpec::ca40(1e3, 1e3, 1e3); // negligible trap
        const IonConfiguration c = random_cloud(8, 11);
        // subtract the trap part analytically: remaining Coulomb forces sum to ~0
        PositionMatrix f = forces(c, iso_spec());
        const Eigen::Vector3d curv = iso_spec().curvatures();
        for (int d = 0; d < 3; ++d) f.col(d) += curv[d] * c.positions.col(d);
        CHECK(f.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
        (void)free_ish;
    }
}

TEST_CASE("relax reaches the analytic two-ion minimum") {
    const PotentialSpec spec = iso_spec();
    IonConfiguration start = two_ion_minimum();
    start.positions(0, 1) += 0.21; // perturb
    start.positions(1, 0) -= 0.13;
    const IonConfiguration relaxed = relax(start, spec);
    const double sep = (relaxed.positions.row(0) - relaxed.positions.row(1)).norm();
    CHECK(sep == doctest::Approx(std::cbrt(2.0)).epsilon(1e-8));
    CHECK(forces(relaxed, spec).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(total_energy(relaxed, spec) == doctest::Approx(kTwoIonEnergy).epsilon(1e-10));

    SUBCASE("a configuration at the minimum is a fixed point") {
        const IonConfiguration again = relax(relaxed, spec);
        CHECK((again.positions - relaxed.positions).cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("relax never increases the energy") {
        for (std::uint64_t seed : {21u, 22u, 23u}) {
            const IonConfiguration c = random_cloud(9, seed);
            const double e0 = total_energy(c, spec);
            const IonConfiguration r = relax(c, spec);
            CHECK(total_energy(r, spec) <= e0 + 1e-12 * std::abs(e0));
            CHECK(forces(r, spec).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("annealing finds the two-ion ground state from every seed") {
    const PotentialSpec spec = iso_spec();
    AnnealSchedule sched;
    sched.sweeps = 400;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        sched.seed = seed;
        const IonConfiguration c = anneal(2, spec, sched);
        CHECK(total_energy(c, spec) == doctest::Approx(kTwoIonEnergy).epsilon(1e-9));
        const double sep = (c.positions.row(0) - c.positions.row(1)).norm();
        CHECK(sep == doctest::Approx(std::cbrt(2.0)).epsilon(1e-7));
    }
}

TEST_CASE("annealing is deterministic for a fixed seed") {
    const PotentialSpec spec = PotentialSpec::ca40(2.196e6, 0.68e6, 0.343e6);
    AnnealSchedule sched;
    sched.sweeps = 300;
    sched.seed = 42;
    const IonConfiguration a = anneal(7, spec, sched);
    const IonConfiguration b = anneal(7, spec, sched);
    REQUIRE(a.n_ions() == b.n_ions());
    CHECK(std::memcmp(a.positions.data(), b.positions.data(),
                      sizeof(double) * 3 * a.n_ions()) == 0);
}

TEST_CASE("annealing quench stage never raises the energy afterwards") {
    // the post-anneal relax is monotone: its output is a fixed point
    const PotentialSpec spec = iso_spec();
    AnnealSchedule sched;
    sched.sweeps = 150;
    sched.seed = 5;
    const IonConfiguration c = anneal(12, spec, sched);
    const double e = total_energy(c, spec);
    const IonConfiguration r = relax(c, spec);
    CHECK(total_energy(r, spec) <= e + 1e-12 * std::abs(e));
}

TEST_CASE("configuration classes for two ions collapse to one") {
    const PotentialSpec spec = iso_spec();
    AnnealSchedule sched;
    sched.sweeps = 300;
    const auto classes = enumerate_configurations(2, spec, 8, sched);
    CHECK(classes.size() == 1);
    CHECK(classes[0].occurrences == 8);
    CHECK(classes[0].energy == doctest::Approx(kTwoIonEnergy).epsilon(1e-9));
}

TEST_CASE("zig-zag ground state has mirror multiplicity 2") {
    // elongated planar trap in the zig-zag regime for 10 ions
    const PotentialSpec spec = PotentialSpec::ca40(3.43e6, 1.2005e6, 0.343e6); // xi = 3.5
    AnnealSchedule sched;
    sched.seed = 3;
    const auto classes = enumerate_configurations(10, spec, 10, sched);
    REQUIRE(!classes.empty());
    const IonConfiguration& ground = classes[0].representative;
    // zig-zag: nonzero y excursions, alternating sign along the chain
    CHECK(ground.positions.col(1).cwiseAbs().maxCoeff() > 1e-3);
    CHECK(classes[0].multiplicity == 2);

    SUBCASE("the two mirror images land in the same class") {
        const double e = classes[0].energy;
        const IonConfiguration mirror = flipped(ground, true, false);
        CHECK(same_configuration_class(ground, e, mirror, total_energy(mirror, spec)));
    }
}

TEST_CASE("classes are closed under in-plane sign flips") {
    const PotentialSpec spec = PotentialSpec::ca40(3.43e6, 0.48e6, 0.343e6);
    AnnealSchedule sched;
    sched.seed = 17;
    sched.sweeps = 600;
    const auto classes = enumerate_configurations(14, spec, 12, sched);
    for (const auto& cls : classes) {
        for (int g = 1; g < 4; ++g) {
            const IonConfiguration f = flipped(cls.representative, g & 1, g & 2);
            CHECK(same_configuration_class(cls.representative, cls.energy, f,
                                           total_energy(f, spec)));
        }
    }
}

TEST_CASE("symmetry multiplicity of hand-built configurations") {
    // fully symmetric rectangle of 4 ions
    IonConfiguration rect = IonConfiguration::zeros(4);
    int k = 0;
    for (double sy : {-1.0, 1.0})
        for (double sz : {-1.0, 1.0}) {
            rect.positions(k, 1) = sy;
            rect.positions(k, 2) = 1.7 * sz;
            ++k;
        }
    CHECK(symmetry_multiplicity(rect) == 1);

    // config symmetric under the combined flip only (zig-zag-like)
    IonConfiguration zz = IonConfiguration::zeros(4);
    for (int i = 0; i < 4; ++i) {
        zz.positions(i, 2) = i - 1.5;
        zz.positions(i, 1) = (i % 2 == 0) ? 0.4 : -0.4;
    }
    CHECK(symmetry_multiplicity(zz) == 2);

    // fully asymmetric
    IonConfiguration asym = IonConfiguration::zeros(3);
    asym.positions << 0, 0.1, 0.2, 0, 1.0, -0.3, 0, -0.2, 1.1;
    CHECK(symmetry_multiplicity(asym) == 4);
}

TEST_CASE("fluid-model aspect ratio") {
    CHECK(aspect_ratio_theory(1.0) == 1.0);
    CHECK(aspect_ratio_theory(0.499) == doctest::Approx(0.403).epsilon(5e-3));

    SUBCASE("strictly increasing in xi_inverse") {
        double prev = 0;
        for (double xi_inv = 0.05; xi_inv <= 1.0; xi_inv += 0.05) {
            const double z = aspect_ratio_theory(xi_inv);
            CHECK(z > prev);
            CHECK(z <= 1.0);
            prev = z;
        }
    }
    SUBCASE("root satisfies the defining relation") {
        for (double xi_inv : {0.2, 0.499, 0.8}) {
            const double z = aspect_ratio_theory(xi_inv);
            const double kmod = std::sqrt(1 - z * z);
            const double kk = std::comp_ellint_1(kmod);
            const double ee = std::comp_ellint_2(kmod);
            CHECK(z * z * (kk - ee) / (ee - z * z * kk) ==
                  doctest::Approx(xi_inv * xi_inv).epsilon(1e-8));
        }
    }
    CHECK_THROWS_AS(aspect_ratio_theory(0.0), std::invalid_argument);
    CHECK_THROWS_AS(aspect_ratio_theory(1.2), std::invalid_argument);
}

TEST_CASE("measured aspect ratio") {
    IonConfiguration square = IonConfiguration::zeros(4);
    int k = 0;
    for (double sy : {-1.0, 1.0})
        for (double sz : {-1.0, 1.0}) {
            square.positions(k, 1) = sy;
            square.positions(k, 2) = sz;
            ++k;
        }
    CHECK(aspect_ratio_measured(square) == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("collinear chain is degenerate") {
        IonConfiguration chain = IonConfiguration::zeros(5);
        for (int i = 0; i < 5; ++i) chain.positions(i, 2) = i;
        CHECK_THROWS_AS(aspect_ratio_measured(chain), std::invalid_argument);
    }
    SUBCASE("relaxed planar crystals satisfy zeta <= xi^-1 + 0.02") {
        for (double xi : {1.2, 1.5, 2.0}) {
            const PotentialSpec spec = PotentialSpec::ca40(3.43e6, xi * 0.343e6, 0.343e6);
            AnnealSchedule sched;
            sched.seed = 9;
            const IonConfiguration c = anneal(30, spec, sched);
            REQUIRE(is_planar(c).planar);
            CHECK(aspect_ratio_measured(c) <= 1.0 / xi + 0.02);
        }
    }
}

TEST_CASE("planarity check") {
    IonConfiguration flat = IonConfiguration::zeros(3);
    flat.positions(0, 1) = 1;
    flat.positions(1, 2) = 1;
    flat.positions(2, 1) = -1;
    CHECK(is_planar(flat).planar);
    CHECK(is_planar(flat).max_excursion == 0.0);

    flat.positions(1, 0) = 2e-6;
    const PlanarCheck pc = is_planar(flat);
    CHECK_FALSE(pc.planar);
    CHECK(pc.max_excursion == doctest::Approx(2e-6));
    CHECK(is_planar(flat, 1e-5).planar);
}

TEST_CASE("run-indexed seeds make enumeration order-independent") {
    const PotentialSpec spec = iso_spec();
    AnnealSchedule sched;
    sched.sweeps = 200;
    sched.seed = 100;
    const auto serial = enumerate_configurations(6, spec, 6, sched, 1);
    const auto parallel = enumerate_configurations(6, spec, 6, sched, 3);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].energy == doctest::Approx(parallel[i].energy).epsilon(1e-14));
        CHECK(serial[i].occurrences == parallel[i].occurrences);
    }
}

TEST_CASE("seed ellipse reflects the fluid model") {
    const PotentialSpec spec = iso_spec();
    const SeedEllipse e = seed_ellipse(40, spec);
    CHECK(e.semi_major == doctest::Approx(e.semi_minor).epsilon(1e-12));
    CHECK(e.semi_major == doctest::Approx(std::cbrt(3 * constants::pi * 40 / 8.0)).epsilon(1e-12));

    const PotentialSpec aniso = PotentialSpec::ca40(3.43e6, 0.686e6, 0.343e6);
    const SeedEllipse e2 = seed_ellipse(40, aniso);
    CHECK(e2.major_axis == 2);
    CHECK(e2.semi_minor / e2.semi_major ==
          doctest::Approx(aspect_ratio_theory(0.5)).epsilon(1e-10));
}

TEST_CASE("schedule validation") {
    AnnealSchedule bad;
    bad.start_temp = 1e-7; // below end_temp
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = AnnealSchedule{};
    bad.sweeps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

} // TEST_SUITE
