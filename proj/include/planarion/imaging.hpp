#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "planarion/equilibrium.hpp"

namespace planarion {

/// One camera frame; pixel values are non-negative counts (16-bit grayscale
/// semantics, stored as doubles), row-major.
struct ImageFrame {
    int width = 0;
    int height = 0;
    Eigen::VectorXd pixels;
    int exposure_id = 0;

    double at(int row, int col) const { return pixels[row * width + col]; }
    double& at(int row, int col) { return pixels[row * width + col]; }
    int n_pixels() const { return width * height; }
};

struct RenderParams {
    int width = 96;
    int height = 96;
    double psf_sigma_px = 1.5;
    double scale_px_per_l0 = 6.0;
    double peak_counts = 2000.0;
    double background = 20.0;
    std::optional<std::uint64_t> noise_seed; // nullopt renders noiselessly
    int exposure_id = 0;
};

/// Synthetic EMCCD-style frame: isotropic Gaussian spots at the projected
/// (y, z) ion positions plus background, with Poisson noise on signal +
/// background (Gaussian approximation above 1000 counts). Deterministic for a
/// fixed seed; throws when an ion projects outside the frame.
ImageFrame render(const IonConfiguration& config, const RenderParams& params);

/// Top-n principal components of an image series (eigenpictures).
struct EigenBasis {
    Eigen::MatrixXd eigenpictures; // pixels x n, orthonormal columns
    Eigen::VectorXd eigenvalues;   // non-increasing
    int width = 0;
    int height = 0;

    int n() const { return static_cast<int>(eigenpictures.cols()); }
};

/// Eigenvectors of the largest eigenvalues of Q = M M^T, where the columns of
/// M are the frames. No mean-centering by default; `center` subtracts the mean
/// frame first (conventional PCA). Exact via the Gram matrix for small series,
/// seeded randomized subspace iteration for large ones.
EigenBasis eigenpictures(const std::vector<ImageFrame>& frames, int n, bool center = false,
                         std::uint64_t seed = 0x9e3779b97f4a7c15ull);

/// Projection coefficients c_i = y_i^T x.
Eigen::VectorXd project(const ImageFrame& frame, const EigenBasis& basis);

inline constexpr int kNoiseLabel = -1;

struct ClusterLabeling {
    std::vector<int> labels; // cluster id (dense from 0) or kNoiseLabel
    int n_clusters = 0;
    double eps = 0;
    int min_pts = 0;
};

/// DBSCAN over coefficient vectors with deterministic input-order processing;
/// border points go to the lowest-indexed eligible cluster, outliers get the
/// noise label. The eps-neighborhood count includes the point itself.
ClusterLabeling cluster(const std::vector<Eigen::VectorXd>& coefficients, double eps,
                        int min_pts);

/// Per-dimension RMS standardization used by the default clustering setup.
std::vector<Eigen::VectorXd> standardize_coefficients(const std::vector<Eigen::VectorXd>& c);

/// Default eps: 0.1 x RMS pairwise distance of the (standardized) points.
double default_eps(const std::vector<Eigen::VectorXd>& points);

/// p_i = N_i / N_P per cluster, with N_P the total frame count including noise
/// frames (so the probabilities sum to <= 1).
std::vector<double> configuration_probabilities(const ClusterLabeling& labeling);

/// Nearest-neighbor structure of a planar crystal from the Delaunay
/// triangulation of the (y, z) positions.
struct DefectGraph {
    std::vector<std::pair<int, int>> edges; // i < j
    std::vector<int> neighbor_count;
    std::vector<bool> boundary; // convex-hull ions (excluded from defect stats)
    std::vector<bool> defect;   // interior ions with 5 or 7 neighbors
};

DefectGraph neighbor_graph(const IonConfiguration& config);

/// Configuration classes merged across y/z mirror images.
struct ReducedClass {
    IonConfiguration representative;
    int multiplicity = 1;     // 4 / |flip stabilizer| of the representative
    std::vector<int> members; // input indices merged into this class
};

std::vector<ReducedClass> symmetry_reduce(const std::vector<IonConfiguration>& representatives,
                                          const PotentialSpec& spec);

} // namespace planarion
