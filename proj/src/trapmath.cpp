#include "planarion/trapmath.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace planarion {

using nlohmann::json;
namespace pc = constants;

static constexpr double two_pi = 2.0 * pc::pi;
static const char* axis_name[3] = {"x", "y", "z"};

PotentialSpec PotentialSpec::ca40(double fx_hz, double fy_hz, double fz_hz) {
    PotentialSpec s;
    s.omega_x = two_pi * fx_hz;
    s.omega_y = two_pi * fy_hz;
    s.omega_z = two_pi * fz_hz;
    s.mass = pc::ca40_mass_amu * pc::atomic_mass_unit;
    s.charge = pc::elementary_charge;
    s.validate();
    return s;
}

void PotentialSpec::validate() const {
    if (!(omega_x > 0) || !(omega_y > 0) || !(omega_z > 0))
        throw std::invalid_argument("PotentialSpec: all secular frequencies must be > 0");
    if (!(mass > 0))
        throw std::invalid_argument("PotentialSpec: mass must be > 0");
    if (charge == 0 || !std::isfinite(charge))
        throw std::invalid_argument("PotentialSpec: charge must be nonzero");
}

PotentialSpec PotentialSpec::with_xi(double xi) const {
    PotentialSpec s = *this;
    s.omega_y = xi * omega_z;
    s.validate();
    return s;
}

Eigen::Vector3d PotentialSpec::curvatures() const {
    const double wz2 = omega_z * omega_z;
    return {omega_x * omega_x / wz2, omega_y * omega_y / wz2, 1.0};
}

std::string PotentialSpec::to_json() const {
    json j;
    j["omega_x_hz"] = omega_x / two_pi;
    j["omega_y_hz"] = omega_y / two_pi;
    j["omega_z_hz"] = omega_z / two_pi;
    j["mass_amu"] = mass / pc::atomic_mass_unit;
    j["charge_e"] = charge / pc::elementary_charge;
    return j.dump(2);
}

PotentialSpec PotentialSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    PotentialSpec s;
    s.omega_x = two_pi * j.at("omega_x_hz").get<double>();
    s.omega_y = two_pi * j.at("omega_y_hz").get<double>();
    s.omega_z = two_pi * j.at("omega_z_hz").get<double>();
    s.mass = j.at("mass_amu").get<double>() * pc::atomic_mass_unit;
    s.charge = j.at("charge_e").get<double>() * pc::elementary_charge;
    s.validate();
    return s;
}

MathieuSpec MathieuSpec::linear(double drive_freq, double q_radial,
                                const std::array<double, 3>& a) {
    MathieuSpec m;
    m.drive_freq = drive_freq;
    m.q = {q_radial, -q_radial, 0.0};
    m.a = a;
    m.validate();
    return m;
}

MathieuSpec MathieuSpec::for_targets(const PotentialSpec& t, double q_radial) {
    t.validate();
    if (!(q_radial > 0))
        throw std::invalid_argument("MathieuSpec::for_targets: q_radial must be > 0");
    const double sum2 = t.omega_x * t.omega_x + t.omega_y * t.omega_y + t.omega_z * t.omega_z;
    const double drive = 2.0 * std::sqrt(sum2) / q_radial;
    MathieuSpec m;
    m.drive_freq = drive;
    m.q = {q_radial, -q_radial, 0.0};
    const double half_q2 = 0.5 * q_radial * q_radial;
    auto ax = [&](double w) { return std::pow(2.0 * w / drive, 2); };
    m.a = {ax(t.omega_x) - half_q2, ax(t.omega_y) - half_q2, ax(t.omega_z)};
    m.validate();
    return m;
}

void MathieuSpec::validate() const {
    if (!(drive_freq > 0))
        throw std::invalid_argument("MathieuSpec: drive frequency must be > 0");
    for (int d = 0; d < 3; ++d)
        if (!std::isfinite(q[d]) || !std::isfinite(a[d]))
            throw std::invalid_argument("MathieuSpec: non-finite q or a");
}

double MathieuSpec::q_radial() const {
    return std::max({std::abs(q[0]), std::abs(q[1]), std::abs(q[2])});
}

std::string MathieuSpec::to_json() const {
    json j;
    j["drive_hz"] = drive_freq / two_pi;
    j["q"] = q;
    j["a"] = a;
    return j.dump(2);
}

MathieuSpec MathieuSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    MathieuSpec m;
    m.drive_freq = two_pi * j.at("drive_hz").get<double>();
    auto qv = j.at("q").get<std::vector<double>>();
    auto av = j.at("a").get<std::vector<double>>();
    if (qv.size() != 3 || av.size() != 3)
        throw std::invalid_argument("MathieuSpec: q and a must have 3 components");
    for (int d = 0; d < 3; ++d) {
        m.q[d] = qv[d];
        m.a[d] = av[d];
    }
    m.validate();
    return m;
}

UnitSystem UnitSystem::from(const PotentialSpec& spec) {
    spec.validate();
    UnitSystem u;
    const double w2 = spec.omega_z * spec.omega_z;
    u.length_scale =
        std::cbrt(pc::coulomb_constant * spec.charge * spec.charge / (spec.mass * w2));
    u.energy_scale = spec.mass * w2 * u.length_scale * u.length_scale;
    u.time_scale = 1.0 / spec.omega_z;
    return u;
}

Anisotropy::Anisotropy(double value) : xi(value) {
    if (!(xi >= 1.0))
        throw std::invalid_argument("Anisotropy: xi must be >= 1 (swap axis labels otherwise)");
}

Eigen::Vector3d secular_frequencies(const MathieuSpec& m) {
    m.validate();
    Eigen::Vector3d w;
    for (int d = 0; d < 3; ++d) {
        const double radicand = 0.5 * m.q[d] * m.q[d] + m.a[d];
        if (radicand < 0)
            throw std::invalid_argument(std::string("secular_frequencies: unstable axis ") +
                                        axis_name[d] + " (q^2/2 + a < 0)");
        w[d] = 0.5 * m.drive_freq * std::sqrt(radicand);
    }
    return w;
}

double min_drive_frequency(const PotentialSpec& t, double q_max) {
    t.validate();
    if (!(q_max > 0))
        throw std::invalid_argument("min_drive_frequency: q_max must be > 0");
    const double sum2 = t.omega_x * t.omega_x + t.omega_y * t.omega_y + t.omega_z * t.omega_z;
    return 2.0 * std::sqrt(sum2) / q_max;
}

Eigen::Vector3d freq_sensitivity(const MathieuSpec& m) {
    m.validate();
    Eigen::Vector3d dwdq;
    for (int d = 0; d < 3; ++d) {
        if (m.q[d] == 0) {
            dwdq[d] = 0.0;
            continue;
        }
        const double radicand = 0.5 * m.q[d] * m.q[d] + m.a[d];
        if (radicand < 0)
            throw std::invalid_argument(std::string("freq_sensitivity: unstable axis ") +
                                        axis_name[d]);
        if (radicand == 0)
            throw std::invalid_argument(std::string("freq_sensitivity: zero secular frequency on axis ") +
                                        axis_name[d]);
        dwdq[d] = 0.25 * m.drive_freq * std::abs(m.q[d]) / std::sqrt(radicand);
    }
    return dwdq;
}

SensitivityResult anisotropy_sensitivity(const PotentialSpec& spec,
                                         double rel_voltage_change) {
    spec.validate();
    std::array<double, 3> w = {spec.omega_x, spec.omega_y, spec.omega_z};
    std::sort(w.begin(), w.end(), std::greater<>());
    if (w[1] == 0)
        throw std::invalid_argument("anisotropy_sensitivity: middle frequency is zero");
    SensitivityResult r;
    // formula assumes omega_1 >> omega_2 >= omega_3
    r.hierarchy_warning = w[0] < 2.0 * w[1];
    const double sum2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    r.value = -rel_voltage_change * sum2 / (2.0 * w[1] * w[1]);
    return r;
}

PlanarityReport planarity_criterion(const PotentialSpec& spec, int n_ions) {
    spec.validate();
    if (n_ions < 1)
        throw std::invalid_argument("planarity_criterion: n_ions must be >= 1");
    std::array<double, 3> w = {spec.omega_x, spec.omega_y, spec.omega_z};
    std::sort(w.begin(), w.end(), std::greater<>());
    PlanarityReport r;
    r.threshold = 1.23 * std::pow(static_cast<double>(n_ions), 0.25);
    r.ratio = w[0] / std::sqrt(w[1] * w[2]);
    r.ratio_weak1 = w[0] / w[1];
    r.ratio_weak2 = w[0] / w[2];
    r.margin = r.ratio - r.threshold;
    r.satisfied = r.ratio > r.threshold;
    return r;
}

double modulation_index_from_rabi(double sideband_rabi, double carrier_rabi) {
    if (!(carrier_rabi > 0))
        throw std::invalid_argument("modulation_index_from_rabi: carrier Rabi frequency must be > 0");
    return 2.0 * sideband_rabi / carrier_rabi;
}

ModulationIndex predicted_modulation_index(double displacement_m, double q,
                                           double wavenumber) {
    if (!(std::abs(q) < 0.3))
        throw std::invalid_argument("predicted_modulation_index: |q| must be < 0.3");
    ModulationIndex r;
    r.beta = wavenumber * q * displacement_m / 2.0;
    r.outside_small_beta = std::abs(r.beta) > 0.5;
    return r;
}

double gap_to_temperature(double gap_e0, const UnitSystem& units) {
    if (gap_e0 < 0)
        throw std::invalid_argument("gap_to_temperature: gap must be >= 0");
    return units.to_kelvin(gap_e0);
}

} // namespace planarion
