#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "halluscan/error.hpp"
#include "halluscan/frames.hpp"

namespace halluscan {

/// Dense symmetric n x n matrix of frame distances.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double d) {
        data_[i * n_ + j] = d;
        data_[j * n_ + i] = d;
    }

    /// Distances with i < j, each unordered pair once.
    std::vector<double> upper_triangle() const;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

DistanceMatrix pairwise_distances(std::span<const FeatureVector> features, DistanceMetric metric,
                                  int workers = 1);
DistanceMatrix pairwise_distances(const FrameSet& frames, DistanceMetric metric, int workers = 1);

/// Floor used when every distance is zero.
inline constexpr double kMinCutoff = 1e-9;

/// Lower quantile with linear interpolation at position fraction * (N - 1).
double quantile(std::vector<double> values, double fraction);

/// Cutoff distance d_c: `neighbor_fraction` quantile of the pairwise distances.
double choose_dc(const DistanceMatrix& distances, double neighbor_fraction = 0.02);

enum class DensityKernel { cutoff, gaussian };

DensityKernel parse_kernel(std::string_view id);
std::string_view to_string(DensityKernel kernel);

/// cutoff: rho_i = #{j != i : d_ij < d_c}; gaussian: rho_i = sum_{j != i} exp(-(d_ij/d_c)^2).
std::vector<double> local_density(const DistanceMatrix& distances, double dc, DensityKernel kernel);

/// delta_i = min d_ij over frames with strictly higher density, or max_j d_ij
/// when no such frame exists.
std::vector<double> relative_distance(const DistanceMatrix& distances, std::span<const double> rho);

struct DensityStats {
    std::vector<double> rho;
    std::vector<double> delta;
    std::vector<double> gamma;

    static DensityStats compute(const DistanceMatrix& distances, double dc, DensityKernel kernel);
    static DensityStats from(std::vector<double> rho, std::vector<double> delta);
};

struct KeyframeSet {
    std::vector<int> indices;  // strictly increasing

    std::size_t m() const noexcept { return indices.size(); }
};

/// The m frames with the largest gamma; ties go to the lower index.
KeyframeSet select_keyframes(const DensityStats& stats, std::size_t m);

/// Keyframe count at the largest drop of the descending gamma sequence.
std::size_t auto_keyframe_count(const DensityStats& stats);

/// Sorted, de-duplicated {0, keyframes..., n-1}.
std::vector<int> anchor_indices(const KeyframeSet& keyframes, std::size_t n);

/// Detail-frame scan between consecutive anchors. `dist(i, j)` is a frame
/// dissimilarity; a segment is scanned only if its endpoints differ by more
/// than tau_d, and the running anchor moves to every frame that is kept.
template <typename Dist>
std::vector<int> extract_detail_frames(Dist&& dist, std::size_t n, std::span<const int> anchors, double tau_d) {
    if (!(tau_d > 0.0)) throw ContractError("tau_d must be positive");
    if (anchors.empty() || n == 0) throw ContractError("anchor set must not be empty");
    if (anchors.front() != 0 || anchors.back() != static_cast<int>(n) - 1) {
        throw ContractError("anchor set must start at the first frame and end at the last frame");
    }
    for (std::size_t k = 1; k < anchors.size(); ++k) {
        if (anchors[k] <= anchors[k - 1]) throw ContractError("anchor set must be strictly increasing");
    }

    std::vector<int> details;
    for (std::size_t k = 0; k + 1 < anchors.size(); ++k) {
        const int i = anchors[k];
        const int j = anchors[k + 1];
        if (!(dist(i, j) > tau_d)) continue;
        int t = i;
        for (int d = i + 1; d < j; ++d) {
            if (dist(t, d) > tau_d) {
                t = d;
                details.push_back(d);
            }
        }
    }
    return details;
}

std::vector<int> extract_detail_frames(const DistanceMatrix& distances, std::span<const int> anchors,
                                       double tau_d);

struct KeyframeCluster {
    int cluster_id = 0;
    int keyframe_index = 0;
    std::vector<int> detail_indices;  // strictly increasing, never contains the keyframe

    /// Keyframe and details in frame order.
    std::vector<int> frames() const;
};

struct ClusterSet {
    std::vector<KeyframeCluster> clusters;

    std::size_t size() const noexcept { return clusters.size(); }
    std::size_t detail_count() const noexcept;
};

/// Assigns each detail frame to the keyframe at the left end of its anchor
/// segment; the segment before the first keyframe goes to the first keyframe.
ClusterSet build_clusters(const KeyframeSet& keyframes, std::span<const int> details, std::span<const int> anchors);

struct KeyframeOptions {
    std::size_t m = 4;
    bool m_auto = false;
    double tau_d = 0.3;
    double dc_fraction = 0.02;
    DensityKernel kernel = DensityKernel::gaussian;
    DistanceMetric metric = DistanceMetric::cosine;
    int workers = 1;
};

/// Everything computed on the way from features to clusters.
struct KeyframeAnalysis {
    DistanceMatrix distances;
    double dc = 0.0;
    DensityStats stats;
    KeyframeSet keyframes;
    std::vector<int> anchors;
    std::vector<int> details;
    ClusterSet clusters;
};

/// m is clamped to the frame count.
KeyframeAnalysis analyze_keyframes(const FrameSet& frames, const KeyframeOptions& options);

}  // namespace halluscan
