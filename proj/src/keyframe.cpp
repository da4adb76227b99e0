#include "halluscan/keyframe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "halluscan/parallel.hpp"

namespace halluscan {

std::vector<double> DistanceMatrix::upper_triangle() const {
    std::vector<double> out;
    out.reserve(n_ * (n_ > 0 ? n_ - 1 : 0) / 2);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) out.push_back((*this)(i, j));
    }
    return out;
}

DistanceMatrix pairwise_distances(std::span<const FeatureVector> features, DistanceMetric metric, int workers) {
    const std::size_t n = features.size();
    DistanceMatrix out(n);
    // Rows write disjoint cells (j > i), so parallel rows do not race.
    parallel_for(n, workers, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) out.set(i, j, frame_distance(features[i], features[j], metric));
    });
    return out;
}

DistanceMatrix pairwise_distances(const FrameSet& frames, DistanceMetric metric, int workers) {
    if (!frames.has_features()) throw ContractError("pairwise distances need extracted features");
    return pairwise_distances(std::span<const FeatureVector>(*frames.features), metric, workers);
}

double quantile(std::vector<double> values, double fraction) {
    if (values.empty()) throw ContractError("quantile of an empty list");
    std::sort(values.begin(), values.end());
    const double pos = fraction * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double choose_dc(const DistanceMatrix& distances, double neighbor_fraction) {
    if (distances.size() < 2) throw ContractError("choose_dc needs at least two frames");
    if (!(neighbor_fraction > 0.0 && neighbor_fraction < 1.0)) {
        throw ContractError("neighbor fraction must lie in (0, 1)");
    }
    const double dc = quantile(distances.upper_triangle(), neighbor_fraction);
    return dc > 0.0 ? dc : kMinCutoff;
}

DensityKernel parse_kernel(std::string_view id) {
    if (id == "cutoff") return DensityKernel::cutoff;
    if (id == "gaussian") return DensityKernel::gaussian;
    throw ContractError("unknown density kernel: " + std::string(id));
}

std::string_view to_string(DensityKernel kernel) {
    return kernel == DensityKernel::cutoff ? "cutoff" : "gaussian";
}

std::vector<double> local_density(const DistanceMatrix& distances, double dc, DensityKernel kernel) {
    if (!(dc > 0.0)) throw ContractError("d_c must be positive");
    const std::size_t n = distances.size();
    std::vector<double> rho(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = distances(i, j);
            if (kernel == DensityKernel::cutoff) {
                if (d < dc) rho[i] += 1.0;
            } else {
                const double r = d / dc;
                rho[i] += std::exp(-r * r);
            }
        }
    }
    return rho;
}

std::vector<double> relative_distance(const DistanceMatrix& distances, std::span<const double> rho) {
    const std::size_t n = distances.size();
    if (rho.size() != n) throw ContractError("density vector length does not match distance matrix");
    std::vector<double> delta(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        bool has_denser = false;
        double nearest_denser = 0.0;
        double farthest = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = distances(i, j);
            farthest = std::max(farthest, d);
            if (rho[j] > rho[i] && (!has_denser || d < nearest_denser)) {
                nearest_denser = d;
                has_denser = true;
            }
        }
        delta[i] = has_denser ? nearest_denser : farthest;
    }
    return delta;
}

DensityStats DensityStats::from(std::vector<double> rho, std::vector<double> delta) {
    if (rho.size() != delta.size()) throw ContractError("rho and delta lengths differ");
    DensityStats s{std::move(rho), std::move(delta), {}};
    s.gamma.resize(s.rho.size());
    for (std::size_t i = 0; i < s.rho.size(); ++i) s.gamma[i] = s.rho[i] * s.delta[i];
    return s;
}

DensityStats DensityStats::compute(const DistanceMatrix& distances, double dc, DensityKernel kernel) {
    auto rho = local_density(distances, dc, kernel);
    auto delta = relative_distance(distances, rho);
    return from(std::move(rho), std::move(delta));
}

namespace {

std::vector<std::size_t> by_descending_gamma(const DensityStats& stats) {
    std::vector<std::size_t> order(stats.gamma.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return stats.gamma[a] > stats.gamma[b]; });
    return order;
}

}  // namespace

KeyframeSet select_keyframes(const DensityStats& stats, std::size_t m) {
    const std::size_t n = stats.gamma.size();
    if (m == 0) throw ContractError("keyframe count must be positive");
    if (m > n) {
        throw ContractError("keyframe count " + std::to_string(m) + " exceeds frame count " + std::to_string(n));
    }
    const auto order = by_descending_gamma(stats);
    KeyframeSet out;
    for (std::size_t k = 0; k < m; ++k) out.indices.push_back(static_cast<int>(order[k]));
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

std::size_t auto_keyframe_count(const DensityStats& stats) {
    const std::size_t n = stats.gamma.size();
    if (n == 0) throw ContractError("no frames");
    if (n == 1) return 1;
    const auto order = by_descending_gamma(stats);
    std::size_t best = 1;
    double best_gap = -1.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double gap = stats.gamma[order[k]] - stats.gamma[order[k + 1]];
        if (gap > best_gap) {
            best_gap = gap;
            best = k + 1;
        }
    }
    return best;
}

std::vector<int> anchor_indices(const KeyframeSet& keyframes, std::size_t n) {
    if (n == 0) throw ContractError("no frames");
    std::vector<int> h{0};
    h.insert(h.end(), keyframes.indices.begin(), keyframes.indices.end());
    h.push_back(static_cast<int>(n) - 1);
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
    return h;
}

std::vector<int> extract_detail_frames(const DistanceMatrix& distances, std::span<const int> anchors,
                                       double tau_d) {
    return extract_detail_frames(
        [&](int i, int j) { return distances(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); },
        distances.size(), anchors, tau_d);
}

std::vector<int> KeyframeCluster::frames() const {
    std::vector<int> out = detail_indices;
    out.push_back(keyframe_index);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t ClusterSet::detail_count() const noexcept {
    std::size_t total = 0;
    for (const auto& c : clusters) total += c.detail_indices.size();
    return total;
}

ClusterSet build_clusters(const KeyframeSet& keyframes, std::span<const int> details, std::span<const int> anchors) {
    ClusterSet out;
    for (std::size_t i = 0; i < keyframes.indices.size(); ++i) {
        out.clusters.push_back({static_cast<int>(i), keyframes.indices[i], {}});
    }
    if (out.clusters.empty()) {
        if (!details.empty()) throw ContractError("detail frames without keyframes");
        return out;
    }

    for (int d : details) {
        if (std::binary_search(keyframes.indices.begin(), keyframes.indices.end(), d)) {
            throw ContractError("detail frame " + std::to_string(d) + " is a keyframe");
        }
        // Left end of the anchor segment holding d.
        auto seg = std::upper_bound(anchors.begin(), anchors.end(), d);
        if (seg == anchors.begin() || seg == anchors.end()) {
            throw ContractError("detail frame " + std::to_string(d) + " lies outside the anchor range");
        }
        const int left = *(seg - 1);
        // Last keyframe <= left, or the first keyframe when the segment precedes all keyframes.
        auto kf = std::upper_bound(keyframes.indices.begin(), keyframes.indices.end(), left);
        const std::size_t owner =
            kf == keyframes.indices.begin() ? 0 : static_cast<std::size_t>(kf - keyframes.indices.begin()) - 1;
        out.clusters[owner].detail_indices.push_back(d);
    }
    for (auto& c : out.clusters) std::sort(c.detail_indices.begin(), c.detail_indices.end());
    return out;
}

KeyframeAnalysis analyze_keyframes(const FrameSet& frames, const KeyframeOptions& options) {
    const std::size_t n = frames.size();
    if (n == 0) throw ContractError("no frames");
    KeyframeAnalysis a;
    a.distances = pairwise_distances(frames, options.metric, options.workers);
    if (n == 1) {
        a.dc = kMinCutoff;
        a.stats = DensityStats::from({0.0}, {0.0});
        a.keyframes.indices = {0};
    } else {
        a.dc = choose_dc(a.distances, options.dc_fraction);
        a.stats = DensityStats::compute(a.distances, a.dc, options.kernel);
        const std::size_t m = options.m_auto ? auto_keyframe_count(a.stats) : std::min(options.m, n);
        a.keyframes = select_keyframes(a.stats, m);
    }
    a.anchors = anchor_indices(a.keyframes, n);
    a.details = extract_detail_frames(a.distances, a.anchors, options.tau_d);
    a.clusters = build_clusters(a.keyframes, a.details, a.anchors);
    return a;
}

}  // namespace halluscan
