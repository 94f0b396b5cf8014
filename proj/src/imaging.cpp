#include "planarion/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace planarion {

ImageFrame render(const IonConfiguration& config, const RenderParams& p) {
    config.validate();
    if (p.width < 2 || p.height < 2 || !(p.scale_px_per_l0 > 0) || !(p.psf_sigma_px > 0))
        throw std::invalid_argument("render: bad frame geometry");
    const PlanarCheck pc = is_planar(config, 1e-2);
    if (!pc.planar)
        throw std::invalid_argument("render: configuration is not planar");

    ImageFrame frame;
    frame.width = p.width;
    frame.height = p.height;
    frame.exposure_id = p.exposure_id;
    frame.pixels = Eigen::VectorXd::Constant(p.width * p.height, p.background);

    const double cy = 0.5 * (p.height - 1);
    const double cz = 0.5 * (p.width - 1);
    const double window = 6.0 * p.psf_sigma_px;
    for (int i = 0; i < config.n_ions(); ++i) {
        const double row = cy + p.scale_px_per_l0 * config.positions(i, 1);
        const double col = cz + p.scale_px_per_l0 * config.positions(i, 2);
        if (row < 0 || row > p.height - 1 || col < 0 || col > p.width - 1)
            throw std::invalid_argument("render: ion " + std::to_string(i) +
                                        " projects outside the frame");
        const int r0 = std::max(0, static_cast<int>(std::floor(row - window)));
        const int r1 = std::min(p.height - 1, static_cast<int>(std::ceil(row + window)));
        const int c0 = std::max(0, static_cast<int>(std::floor(col - window)));
        const int c1 = std::min(p.width - 1, static_cast<int>(std::ceil(col + window)));
        const double inv2s2 = 1.0 / (2.0 * p.psf_sigma_px * p.psf_sigma_px);
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const double d2 = (r - row) * (r - row) + (c - col) * (c - col);
                frame.at(r, c) += p.peak_counts * std::exp(-d2 * inv2s2);
            }
        }
    }

    if (p.noise_seed) {
        std::mt19937_64 rng(*p.noise_seed);
        for (int k = 0; k < frame.n_pixels(); ++k) {
            const double mean = frame.pixels[k];
            double v;
            if (mean > 1000.0) {
                std::normal_distribution<double> gauss(mean, std::sqrt(mean));
                v = std::round(gauss(rng));
            } else {
                std::poisson_distribution<long> pois(mean);
                v = static_cast<double>(pois(rng));
            }
            frame.pixels[k] = std::clamp(v, 0.0, 65535.0);
        }
    }
    return frame;
}

EigenBasis eigenpictures(const std::vector<ImageFrame>& frames, int n, bool center,
                         std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("eigenpictures: n must be >= 1");
    if (static_cast<int>(frames.size()) < n)
        throw std::invalid_argument("eigenpictures: basis size exceeds frame count");
    const int w = frames.front().width, h = frames.front().height;
    for (const auto& f : frames)
        if (f.width != w || f.height != h)
            throw std::invalid_argument("eigenpictures: frame dimensions differ");

    const int pix = w * h;
    const int nf = static_cast<int>(frames.size());
    Eigen::MatrixXd m(pix, nf);
    for (int j = 0; j < nf; ++j) m.col(j) = frames[j].pixels;
    if (center) {
        const Eigen::VectorXd mean = m.rowwise().mean();
        m.colwise() -= mean;
    }

    EigenBasis basis;
    basis.width = w;
    basis.height = h;

    if (nf <= 512) {
        // exact: eigenvectors of the Gram matrix M^T M share eigenvalues with M M^T
        const Eigen::MatrixXd gram = m.transpose() * m;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("eigenpictures: eigen-decomposition failed");
        basis.eigenpictures.resize(pix, n);
        basis.eigenvalues.resize(n);
        const double lmax = std::max(solver.eigenvalues().maxCoeff(), 0.0);
        for (int i = 0; i < n; ++i) {
            const int idx = nf - 1 - i; // ascending order -> take from the top
            const double lambda = solver.eigenvalues()[idx];
            if (!(lambda > 1e-14 * std::max(lmax, 1.0)))
                throw std::runtime_error("eigenpictures: requested basis exceeds the series rank");
            basis.eigenvalues[i] = lambda;
            basis.eigenpictures.col(i) = m * solver.eigenvectors().col(idx) / std::sqrt(lambda);
        }
    } else {
        // randomized subspace iteration with Rayleigh-Ritz extraction
        const int k = std::min(nf, n + 8);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd rnd(nf, k);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < nf; ++i) rnd(i, j) = gauss(rng);
        Eigen::MatrixXd q = (m * rnd).householderQr().householderQ() *
                            Eigen::MatrixXd::Identity(pix, k);
        for (int it = 0; it < 8; ++it) {
            const Eigen::MatrixXd y = m * (m.transpose() * q);
            q = y.householderQr().householderQ() * Eigen::MatrixXd::Identity(pix, k);
        }
        const Eigen::MatrixXd c = m.transpose() * q; // nf x k
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(c.transpose() * c);
        if (ritz.info() != Eigen::Success)
            throw std::runtime_error("eigenpictures: eigen-decomposition failed");
        basis.eigenpictures.resize(pix, n);
        basis.eigenvalues.resize(n);
        for (int i = 0; i < n; ++i) {
            const int idx = k - 1 - i;
            basis.eigenvalues[i] = std::max(ritz.eigenvalues()[idx], 0.0);
            basis.eigenpictures.col(i) = q * ritz.eigenvectors().col(idx);
        }
    }

    // canonical sign: largest-magnitude pixel positive
    for (int i = 0; i < n; ++i) {
        int imax = 0;
        basis.eigenpictures.col(i).cwiseAbs().maxCoeff(&imax);
        if (basis.eigenpictures(imax, i) < 0) basis.eigenpictures.col(i) *= -1.0;
    }
    return basis;
}

Eigen::VectorXd project(const ImageFrame& frame, const EigenBasis& basis) {
    if (frame.width != basis.width || frame.height != basis.height)
        throw std::invalid_argument("project: frame dimensions do not match the basis");
    return basis.eigenpictures.transpose() * frame.pixels;
}

ClusterLabeling cluster(const std::vector<Eigen::VectorXd>& coefficients, double eps,
                        int min_pts) {
    if (!(eps > 0)) throw std::invalid_argument("cluster: eps must be > 0");
    if (min_pts < 1) throw std::invalid_argument("cluster: min_pts must be >= 1");
    const int n = static_cast<int>(coefficients.size());

    // eps-neighborhoods (including the point itself)
    std::vector<std::vector<int>> nbr(n);
    const double eps2 = eps * eps;
    for (int i = 0; i < n; ++i) {
        nbr[i].push_back(i);
        for (int j = i + 1; j < n; ++j) {
            if ((coefficients[i] - coefficients[j]).squaredNorm() <= eps2) {
                nbr[i].push_back(j);
                nbr[j].push_back(i);
            }
        }
    }

    constexpr int kUnvisited = -2;
    ClusterLabeling out;
    out.eps = eps;
    out.min_pts = min_pts;
    out.labels.assign(n, kUnvisited);
    int cid = 0;
    for (int i = 0; i < n; ++i) {
        if (out.labels[i] != kUnvisited) continue;
        if (static_cast<int>(nbr[i].size()) < min_pts) {
            out.labels[i] = kNoiseLabel;
            continue;
        }
        out.labels[i] = cid;
        std::deque<int> queue(nbr[i].begin(), nbr[i].end());
        while (!queue.empty()) {
            const int j = queue.front();
            queue.pop_front();
            if (out.labels[j] == kNoiseLabel) out.labels[j] = cid; // border point
            if (out.labels[j] != kUnvisited) continue;
            out.labels[j] = cid;
            if (static_cast<int>(nbr[j].size()) >= min_pts)
                queue.insert(queue.end(), nbr[j].begin(), nbr[j].end());
        }
        ++cid;
    }
    out.n_clusters = cid;
    return out;
}

std::vector<Eigen::VectorXd> standardize_coefficients(const std::vector<Eigen::VectorXd>& c) {
    if (c.empty()) return {};
    const int dim = static_cast<int>(c.front().size());
    Eigen::VectorXd rms = Eigen::VectorXd::Zero(dim);
    for (const auto& v : c) rms += v.cwiseProduct(v);
    rms = (rms / static_cast<double>(c.size())).cwiseSqrt();
    for (int d = 0; d < dim; ++d)
        if (rms[d] == 0) rms[d] = 1.0;
    std::vector<Eigen::VectorXd> out;
    out.reserve(c.size());
    for (const auto& v : c) out.push_back(v.cwiseQuotient(rms));
    return out;
}

double default_eps(const std::vector<Eigen::VectorXd>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 2) throw std::invalid_argument("default_eps: need at least 2 points");
    double sum2 = 0;
    long count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            sum2 += (points[i] - points[j]).squaredNorm();
            ++count;
        }
    return 0.1 * std::sqrt(sum2 / count);
}

std::vector<double> configuration_probabilities(const ClusterLabeling& labeling) {
    if (labeling.labels.empty())
        throw std::invalid_argument("configuration_probabilities: empty labeling");
    std::vector<double> p(labeling.n_clusters, 0.0);
    for (int l : labeling.labels)
        if (l >= 0) p[l] += 1.0;
    for (auto& v : p) v /= static_cast<double>(labeling.labels.size());
    return p;
}

namespace {

struct Triangle {
    int a, b, c;
};

// Strict in-circumcircle predicate for counterclockwise triangle (pa, pb, pc).
bool in_circumcircle(const Eigen::Vector2d& pa, const Eigen::Vector2d& pb,
                     const Eigen::Vector2d& pc, const Eigen::Vector2d& pd) {
    const double ax = pa.x() - pd.x(), ay = pa.y() - pd.y();
    const double bx = pb.x() - pd.x(), by = pb.y() - pd.y();
    const double cx = pc.x() - pd.x(), cy = pc.y() - pd.y();
    const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                       (bx * bx + by * by) * (ax * cy - cx * ay) +
                       (cx * cx + cy * cy) * (ax * by - bx * ay);
    return det > 0;
}

double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

} // namespace

DefectGraph neighbor_graph(const IonConfiguration& config) {
    config.validate();
    const int n = config.n_ions();
    if (n < 3) throw std::invalid_argument("neighbor_graph: need at least 3 ions");

    std::vector<Eigen::Vector2d> pts;
    pts.reserve(n + 3);
    for (int i = 0; i < n; ++i)
        pts.emplace_back(config.positions(i, 1), config.positions(i, 2));

    double span = 0;
    Eigen::Vector2d lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    span = std::max((hi - lo).maxCoeff(), 1e-9);
    const Eigen::Vector2d mid = 0.5 * (lo + hi);

    bool collinear = true;
    for (int i = 2; i < n && collinear; ++i)
        if (std::abs(orient(pts[0], pts[1], pts[i])) > 1e-12 * span * span) collinear = false;
    if (collinear)
        throw std::invalid_argument("neighbor_graph: degenerate (collinear) configuration");

    // Bowyer-Watson with a super-triangle
    pts.emplace_back(mid.x() - 30 * span, mid.y() - 10 * span);
    pts.emplace_back(mid.x() + 30 * span, mid.y() - 10 * span);
    pts.emplace_back(mid.x(), mid.y() + 30 * span);
    std::vector<Triangle> tris{{n, n + 1, n + 2}};

    auto ccw = [&](Triangle& t) {
        if (orient(pts[t.a], pts[t.b], pts[t.c]) < 0) std::swap(t.b, t.c);
    };
    ccw(tris[0]);

    for (int p = 0; p < n; ++p) {
        std::vector<Triangle> keep;
        std::vector<std::pair<int, int>> boundary_edges;
        auto add_edge = [&](int u, int v) {
            // shared edges appear twice with opposite orientation; cancel them
            for (auto it = boundary_edges.begin(); it != boundary_edges.end(); ++it) {
                if (it->first == v && it->second == u) {
                    boundary_edges.erase(it);
                    return;
                }
            }
            boundary_edges.emplace_back(u, v);
        };
        for (const auto& t : tris) {
            if (in_circumcircle(pts[t.a], pts[t.b], pts[t.c], pts[p])) {
                add_edge(t.a, t.b);
                add_edge(t.b, t.c);
                add_edge(t.c, t.a);
            } else {
                keep.push_back(t);
            }
        }
        for (const auto& e : boundary_edges) {
            Triangle t{e.first, e.second, p};
            ccw(t);
            keep.push_back(t);
        }
        tris = std::move(keep);
    }

    DefectGraph g;
    g.neighbor_count.assign(n, 0);
    g.boundary.assign(n, false);
    g.defect.assign(n, false);

    std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& t : tris) {
        const int idx[3] = {t.a, t.b, t.c};
        for (int e = 0; e < 3; ++e) {
            int u = idx[e], v = idx[(e + 1) % 3];
            if (u > v) std::swap(u, v);
            ++edge_use[{u, v}];
            if (v < n && !seen[u][v]) { // both real ions
                seen[u][v] = true;
                g.edges.emplace_back(u, v);
                ++g.neighbor_count[u];
                ++g.neighbor_count[v];
            }
        }
    }
    // hull edges belong to a single finite triangle, or touch the super-triangle
    for (const auto& [edge, uses] : edge_use) {
        const auto [u, v] = edge;
        if (v >= n) {
            if (u < n) g.boundary[u] = true;
            continue;
        }
        if (uses == 1) {
            g.boundary[u] = true;
            g.boundary[v] = true;
        }
    }
    for (int i = 0; i < n; ++i)
        g.defect[i] = !g.boundary[i] && (g.neighbor_count[i] == 5 || g.neighbor_count[i] == 7);
    return g;
}

std::vector<ReducedClass> symmetry_reduce(const std::vector<IonConfiguration>& reps,
                                          const PotentialSpec& spec) {
    std::vector<ReducedClass> classes;
    std::vector<double> energies;
    for (std::size_t k = 0; k < reps.size(); ++k) {
        const double e = total_energy(reps[k], spec);
        bool merged = false;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            if (same_configuration_class(classes[c].representative, energies[c], reps[k], e)) {
                classes[c].members.push_back(static_cast<int>(k));
                if (e < energies[c]) {
                    energies[c] = e;
                    classes[c].representative = reps[k];
                }
                merged = true;
                break;
            }
        }
        if (!merged) {
            ReducedClass rc;
            rc.representative = reps[k];
            rc.members = {static_cast<int>(k)};
            classes.push_back(std::move(rc));
            energies.push_back(e);
        }
    }
    for (auto& c : classes) c.multiplicity = symmetry_multiplicity(c.representative);
    return classes;
}

} // namespace planarion
