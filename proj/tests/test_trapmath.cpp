#include "doctest.h"

#include <cmath>

#include "planarion/trapmath.hpp"

using namespace planarion;

namespace {
constexpr double kTwoPi = 2.0 * constants::pi;
MathieuSpec paper_drive(double q = 0.1, std::array<double, 3> a = {0, 0, 0}) {
    return MathieuSpec::linear(kTwoPi * 43.22e6, q, a);
}
} // namespace

TEST_SUITE("trapmath") {

TEST_CASE("secular frequencies from drive parameters") {
    const Eigen::Vector3d w = secular_frequencies(paper_drive());
    // (Omega/2) sqrt(q^2/2) = 2pi * 43.22 MHz / 2 * 0.1/sqrt(2)
    const double expected = kTwoPi * 43.22e6 / 2.0 * 0.1 / std::sqrt(2.0);
    CHECK(w[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(w[0] / kTwoPi == doctest::Approx(1.528e6).epsilon(1e-3));
    CHECK(w[2] == 0.0);
}

TEST_CASE("secular frequencies with dc offsets") {
    const Eigen::Vector3d w = secular_frequencies(paper_drive(0.1, {-0.0005, -0.0005, 0.001}));
    CHECK(w[2] / kTwoPi == doctest::Approx(0.683e6).epsilon(1e-3));
    // exact arithmetic: (Omega/2) sqrt(a3)
    CHECK(w[2] == doctest::Approx(kTwoPi * 43.22e6 / 2.0 * std::sqrt(0.001)).epsilon(1e-12));
}

TEST_CASE("zero drive strength means no confinement") {
    const Eigen::Vector3d w = secular_frequencies(paper_drive(0.0));
    CHECK(w.norm() == 0.0);
}

TEST_CASE("unstable axis is reported by name") {
    CHECK_THROWS_WITH_AS(secular_frequencies(paper_drive(0.1, {0, 0, -0.1})),
                         doctest::Contains("axis z"), std::invalid_argument);
}

TEST_CASE("frequency sum rule when dc terms cancel") {
    for (double q : {0.05, 0.1, 0.2, 0.29}) {
        const MathieuSpec m = paper_drive(q, {-0.001, 0.0006, 0.0004});
        const Eigen::Vector3d w = secular_frequencies(m);
        const double lhs = w.squaredNorm();
        const double rhs = q * q * m.drive_freq * m.drive_freq / 4.0;
        CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);
    }
}

TEST_CASE("secular frequencies increase with |q| on the radial axes") {
    double prev_x = -1, prev_y = -1;
    for (double q = 0.05; q < 0.3; q += 0.02) {
        const Eigen::Vector3d w = secular_frequencies(paper_drive(q, {-0.0005, -0.0005, 0.001}));
        CHECK(w[0] > prev_x);
        CHECK(w[1] > prev_y);
        prev_x = w[0];
        prev_y = w[1];
    }
}

TEST_CASE("minimum drive frequency bound") {
    const PotentialSpec t = PotentialSpec::ca40(2.2e6, 0.68e6, 0.343e6);
    CHECK(min_drive_frequency(t, 0.1) / kTwoPi / 1e6 == doctest::Approx(46.562).epsilon(1e-4));

    SUBCASE("two equal radial frequencies") {
        // sqrt(1^2 + 1^2) * 2 / 0.1 = 28.284 MHz
        const PotentialSpec t2 = PotentialSpec::ca40(1e6, 1e6, 1.0);
        CHECK(min_drive_frequency(t2, 0.1) / kTwoPi / 1e6 == doctest::Approx(28.284).epsilon(1e-3));
    }
    SUBCASE("single-axis limit 2 omega / q") {
        const PotentialSpec t3 = PotentialSpec::ca40(1.7e6, 1.0, 1.0);
        CHECK(min_drive_frequency(t3, 0.08) ==
              doctest::Approx(2.0 * kTwoPi * 1.7e6 / 0.08).epsilon(1e-9));
    }
}

TEST_CASE("frequency sensitivity to rf power") {
    // drive parameters matching the measured 91-ion trap frequencies at q = 0.1
    const PotentialSpec t = PotentialSpec::ca40(2.2e6, 0.68e6, 0.343e6);
    const MathieuSpec m = MathieuSpec::for_targets(t, 0.1);
    const Eigen::Vector3d w = secular_frequencies(m);
    const Eigen::Vector3d dwdq = freq_sensitivity(m);

    // closed form sum(w^2) / (2 q w_i)
    const double sum2 = w.squaredNorm();
    CHECK(dwdq[0] == doctest::Approx(sum2 / (2.0 * 0.1 * w[0])).epsilon(1e-10));
    CHECK(dwdq[0] / kTwoPi / 1e6 == doctest::Approx(12.32).epsilon(2e-3));
    CHECK(dwdq[2] == 0.0);

    SUBCASE("matches central finite differences in q") {
        const double h = 1e-6;
        MathieuSpec plus = m, minus = m;
        plus.q = {0.1 + h, -(0.1 + h), 0};
        minus.q = {0.1 - h, -(0.1 - h), 0};
        const Eigen::Vector3d fd =
            (secular_frequencies(plus) - secular_frequencies(minus)) / (2 * h);
        for (int d = 0; d < 2; ++d)
            CHECK(std::abs(dwdq[d] - fd[d]) <= 1e-6 * std::abs(fd[d]));
        CHECK(std::abs(fd[2]) == 0.0);
    }

    SUBCASE("symmetric radial axes have equal sensitivity") {
        const Eigen::Vector3d s = freq_sensitivity(paper_drive());
        CHECK(s[0] == doctest::Approx(s[1]).epsilon(1e-14));
    }
}

TEST_CASE("anisotropy sensitivity to rf voltage") {
    const PotentialSpec t = PotentialSpec::ca40(2.196e6, 0.68e6, 0.343e6);
    const SensitivityResult r = anisotropy_sensitivity(t, 1e-3);
    CHECK(r.value == doctest::Approx(-5.84e-3).epsilon(1e-3));
    CHECK_FALSE(r.hierarchy_warning);

    CHECK(anisotropy_sensitivity(t, 0.0).value == 0.0);

    SUBCASE("algebraic identity at omega_2^2 = sum/2") {
        // only reachable with omega_1 = omega_2 and omega_3 -> 0
        const PotentialSpec p = PotentialSpec::ca40(1e6, 1e6, 1.0);
        const SensitivityResult s = anisotropy_sensitivity(p, 1e-4);
        CHECK(s.value == doctest::Approx(-1e-4).epsilon(1e-11));
    }
    SUBCASE("hierarchy warning when omega_1 is not dominant") {
        const PotentialSpec p = PotentialSpec::ca40(1.0e6, 0.9e6, 0.3e6);
        CHECK(anisotropy_sensitivity(p, 1e-3).hierarchy_warning);
    }
}

TEST_CASE("planarity criterion threshold") {
    const PotentialSpec t = PotentialSpec::ca40(2.196e6, 0.68e6, 0.343e6);
    const PlanarityReport r91 = planarity_criterion(t, 91);
    CHECK(r91.threshold == doctest::Approx(1.23 * std::pow(91.0, 0.25)).epsilon(1e-12));
    CHECK(r91.threshold == doctest::Approx(3.799).epsilon(1e-3));
    CHECK(r91.ratio ==
          doctest::Approx(2.196e6 / std::sqrt(0.68e6 * 0.343e6)).epsilon(1e-12));
    CHECK(r91.satisfied);

    CHECK(planarity_criterion(t, 1).threshold == doctest::Approx(1.23).epsilon(1e-12));
    CHECK(planarity_criterion(t, 105).threshold == doctest::Approx(3.937).epsilon(1e-3));

    SUBCASE("threshold scales as N^(1/4)") {
        for (int n : {1, 5, 91}) {
            const double t1 = planarity_criterion(t, n).threshold;
            const double t16 = planarity_criterion(t, 16 * n).threshold;
            CHECK(t16 == doctest::Approx(2.0 * t1).epsilon(1e-14));
        }
    }
}

TEST_CASE("modulation index from Rabi frequencies") {
    CHECK(modulation_index_from_rabi(0.01, 1.0) == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(modulation_index_from_rabi(0.0, 1.0) == 0.0);
    CHECK(modulation_index_from_rabi(0.25, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(modulation_index_from_rabi(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("predicted modulation index off the rf null") {
    const double k729 = kTwoPi / 729e-9;
    CHECK(predicted_modulation_index(0.0, 0.1, k729).beta == 0.0);

    const ModulationIndex big = predicted_modulation_index(10e-6, 0.1, k729);
    CHECK(big.beta == doctest::Approx(4.31).epsilon(1e-3));
    CHECK(big.outside_small_beta);

    const ModulationIndex one = predicted_modulation_index(1e-6, 0.1, k729);
    const ModulationIndex two = predicted_modulation_index(2e-6, 0.1, k729);
    CHECK(two.beta == doctest::Approx(2.0 * one.beta).epsilon(1e-14));
    CHECK_THROWS_AS(predicted_modulation_index(1e-6, 0.4, k729), std::invalid_argument);
}

TEST_CASE("energy gap as a temperature") {
    const PotentialSpec t = PotentialSpec::ca40(2.196e6, 0.68e6, 0.343e6);
    const UnitSystem u = UnitSystem::from(t);
    CHECK(gap_to_temperature(0.0, u) == 0.0);
    CHECK(gap_to_temperature(1.0, u) == doctest::Approx(1.840).epsilon(2e-3));
    CHECK(gap_to_temperature(0.109, u) == doctest::Approx(0.2006).epsilon(2e-3));

    SUBCASE("energy scale grows as omega_z^(2/3)") {
        const UnitSystem u2 = UnitSystem::from(PotentialSpec::ca40(2.196e6, 0.68e6, 2 * 0.343e6));
        CHECK(u2.energy_scale / u.energy_scale ==
              doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(gap_to_temperature(-1.0, u), std::invalid_argument);
}

TEST_CASE("unit system invariants") {
    const PotentialSpec t = PotentialSpec::ca40(2.2e6, 0.742e6, 0.370e6);
    const UnitSystem u = UnitSystem::from(t);
    const double ke_q2 = constants::coulomb_constant * t.charge * t.charge;
    CHECK(std::pow(u.length_scale, 3) ==
          doctest::Approx(ke_q2 / (t.mass * t.omega_z * t.omega_z)).epsilon(1e-12));
    CHECK(u.energy_scale ==
          doctest::Approx(t.mass * t.omega_z * t.omega_z * u.length_scale * u.length_scale)
              .epsilon(1e-12));
    CHECK(u.time_scale == doctest::Approx(1.0 / t.omega_z).epsilon(1e-14));
}

TEST_CASE("spec JSON round trip and validation") {
    const PotentialSpec t = PotentialSpec::ca40(2.196e6, 0.68e6, 0.343e6);
    const PotentialSpec back = PotentialSpec::from_json(t.to_json());
    CHECK(back.omega_x == doctest::Approx(t.omega_x).epsilon(1e-14));
    CHECK(back.mass == doctest::Approx(t.mass).epsilon(1e-14));
    CHECK(back.charge == doctest::Approx(t.charge).epsilon(1e-14));

    const MathieuSpec m = paper_drive(0.1, {-0.0005, -0.0005, 0.001});
    const MathieuSpec mb = MathieuSpec::from_json(m.to_json());
    CHECK(mb.drive_freq == doctest::Approx(m.drive_freq).epsilon(1e-14));
    CHECK(mb.q[1] == doctest::Approx(-0.1).epsilon(1e-14));
    CHECK(mb.a[2] == doctest::Approx(0.001).epsilon(1e-14));

    PotentialSpec bad = t;
    bad.omega_y = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = t;
    bad.charge = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("drive parameters for target frequencies") {
    const PotentialSpec t = PotentialSpec::ca40(2.12e6, 0.72e6, 0.37e6);
    const MathieuSpec m = MathieuSpec::for_targets(t, 0.1);
    const Eigen::Vector3d w = secular_frequencies(m);
    CHECK(w[0] == doctest::Approx(t.omega_x).epsilon(1e-10));
    CHECK(w[1] == doctest::Approx(t.omega_y).epsilon(1e-10));
    CHECK(w[2] == doctest::Approx(t.omega_z).epsilon(1e-10));
    CHECK(m.a[0] + m.a[1] + m.a[2] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("anisotropy convention") {
    CHECK_THROWS_AS(Anisotropy(0.9), std::invalid_argument);
    CHECK(Anisotropy(1.987).xi == doctest::Approx(1.987));
}

} // TEST_SUITE
