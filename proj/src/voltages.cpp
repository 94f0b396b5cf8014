#include "planarion/voltages.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace planarion {

const std::array<const char*, 8> kMultipoleTermNames = {"Ex", "Ey", "Ez", "U1",
                                                        "U2", "U3", "U4", "U5"};

Eigen::Matrix<double, 8, 1> MultipoleCoefficients::stacked() const {
    Eigen::Matrix<double, 8, 1> v;
    v << dipole, quadrupole;
    return v;
}

MultipoleCoefficients MultipoleCoefficients::from_stacked(const Eigen::Matrix<double, 8, 1>& v) {
    MultipoleCoefficients c;
    c.dipole = v.head<3>();
    c.quadrupole = v.tail<5>();
    return c;
}

double multipole_term(int term, const Eigen::Vector3d& r) {
    const double x = r[0], y = r[1], z = r[2];
    switch (term) {
        case 0: return x;
        case 1: return y;
        case 2: return z;
        case 3: return z * z - 0.5 * (x * x + y * y);
        case 4: return x * x - y * y;
        case 5: return x * y;
        case 6: return y * z;
        case 7: return z * x;
        default: throw std::invalid_argument("multipole_term: index out of range");
    }
}

void TargetAction::validate() const {
    if (change.stacked().cwiseAbs().maxCoeff() == 0)
        throw std::invalid_argument("TargetAction: at least one multipole component must be nonzero");
}

MultipoleFit fit_multipoles(const std::vector<PotentialSample>& samples,
                            const Eigen::Vector3d& center, double radius) {
    if (!(radius > 0)) throw std::invalid_argument("fit_multipoles: radius must be > 0");
    std::vector<const PotentialSample*> inside;
    for (const auto& s : samples)
        if ((s.first - center).norm() <= radius) inside.push_back(&s);
    if (inside.size() < 20)
        throw std::invalid_argument("fit_multipoles: need at least 20 sample points within the fit radius");

    const int m = static_cast<int>(inside.size());
    Eigen::MatrixXd design(m, 9); // constant + 8 terms
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
        const Eigen::Vector3d d = inside[i]->first - center;
        design(i, 0) = 1.0;
        for (int t = 0; t < 8; ++t) design(i, t + 1) = multipole_term(t, d);
        rhs[i] = inside[i]->second;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 9)
        throw std::invalid_argument("fit_multipoles: degenerate sampling (rank-deficient design)");
    const Eigen::VectorXd u = qr.solve(rhs);

    MultipoleFit fit;
    Eigen::Matrix<double, 8, 1> coeffs = u.tail<8>();
    fit.coefficients = MultipoleCoefficients::from_stacked(coeffs);
    fit.rms_residual = std::sqrt((design * u - rhs).squaredNorm() / m);
    return fit;
}

namespace {

struct ElectrodeLayout {
    int x_side;  // +1 top, -1 bottom
    int y_side;  // +1 front, -1 back
    int segment; // -1, 0, +1 along z
};

ElectrodeLayout layout_of(int electrode) {
    if (electrode < 0 || electrode >= 12)
        throw std::invalid_argument("electrode index out of range (0..11)");
    ElectrodeLayout l;
    l.x_side = electrode < 6 ? 1 : -1;
    l.y_side = (electrode / 3) % 2 == 0 ? 1 : -1;
    l.segment = electrode % 3 - 1;
    return l;
}

// Fibonacci sphere direction k of n.
Eigen::Vector3d fib_dir(int k, int n) {
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    const double zc = 1.0 - 2.0 * (k + 0.5) / n;
    const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    const double th = 2.0 * constants::pi * k / golden;
    return {rr * std::cos(th), rr * std::sin(th), zc};
}

} // namespace

double electrode_potential(const SyntheticTrapGeometry& geom, int electrode,
                           const Eigen::Vector3d& r) {
    const ElectrodeLayout l = layout_of(electrode);
    const double d = geom.ion_electrode_distance;
    const double seg = geom.central_segment_length;
    double sum = 0;
    int count = 0;
    for (int iy = 0; iy < geom.patch_rows; ++iy) {
        const double fy = geom.patch_rows > 1 ? double(iy) / (geom.patch_rows - 1) : 0.5;
        const double y = l.y_side * (geom.rail_inner_edge +
                                     fy * (geom.rail_outer_edge - geom.rail_inner_edge));
        for (int iz = 0; iz < geom.patch_cols; ++iz) {
            const double fz = geom.patch_cols > 1 ? double(iz) / (geom.patch_cols - 1) : 0.5;
            const double z = l.segment * seg + (fz - 0.5) * seg;
            const Eigen::Vector3d p(l.x_side * d, y, z);
            sum += d / (r - p).norm();
            ++count;
        }
    }
    return sum / count;
}

ElectrodeBasisMatrix build_basis(const SyntheticTrapGeometry& geom) {
    ElectrodeBasisMatrix basis;
    basis.ion_electrode_distance = geom.ion_electrode_distance;
    basis.central_segment_length = geom.central_segment_length;
    basis.response.resize(8, 12);

    std::vector<PotentialSample> samples;
    samples.reserve(2 * geom.fit_samples);
    for (int e = 0; e < 12; ++e) {
        samples.clear();
        for (int shell = 1; shell <= 2; ++shell) {
            const double rr = geom.fit_radius * shell / 2.0;
            for (int k = 0; k < geom.fit_samples; ++k) {
                const Eigen::Vector3d pos = rr * fib_dir(k, geom.fit_samples);
                samples.emplace_back(pos, electrode_potential(geom, e, pos));
            }
        }
        const MultipoleFit fit = fit_multipoles(samples, Eigen::Vector3d::Zero(), geom.fit_radius);
        basis.response.col(e) = fit.coefficients.stacked();
    }
    return basis;
}

std::array<int, 12> y_mirror_permutation() {
    std::array<int, 12> perm{};
    for (int e = 0; e < 12; ++e) {
        const ElectrodeLayout l = layout_of(e);
        const int x_idx = l.x_side > 0 ? 0 : 1;
        const int y_idx = l.y_side > 0 ? 1 : 0; // flipped
        perm[e] = x_idx * 6 + y_idx * 3 + (l.segment + 1);
    }
    return perm;
}

VoltageSet solve_tikhonov(const ElectrodeBasisMatrix& basis, const TargetAction& target,
                          double lambda, double compliance_limit) {
    target.validate();
    if (lambda < 0) throw std::invalid_argument("solve_tikhonov: lambda must be >= 0");

    const Eigen::MatrixXd b = basis.response;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd t = target.change.stacked();

    VoltageSet out;
    out.singular_values = svd.singularValues();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(b.cols());
    for (int i = 0; i < svd.singularValues().size(); ++i) {
        const double s = svd.singularValues()[i];
        if (s <= 0) continue;
        const double filter = s / (s * s + lambda * lambda);
        v += filter * (svd.matrixU().col(i).dot(t)) * svd.matrixV().col(i);
    }
    out.voltages = v;
    out.residual = (b * v - t).norm();

    std::string over;
    for (int i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > compliance_limit)
            over += (over.empty() ? "" : ", ") + std::to_string(i);
    if (!over.empty())
        throw std::runtime_error("solve_tikhonov: compliance limit exceeded on electrodes " + over);
    return out;
}

AchievedAction achieved_action(const ElectrodeBasisMatrix& basis, const Eigen::VectorXd& voltages,
                               const MultipoleCoefficients* target) {
    if (voltages.size() != basis.n_electrodes())
        throw std::invalid_argument("achieved_action: voltage count does not match electrode count");
    AchievedAction out;
    const Eigen::Matrix<double, 8, 1> achieved = basis.response * voltages;
    out.achieved = MultipoleCoefficients::from_stacked(achieved);
    if (target) out.residual = (achieved - target->stacked()).norm();
    return out;
}

} // namespace planarion
