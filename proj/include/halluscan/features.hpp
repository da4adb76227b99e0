#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "halluscan/frames.hpp"

namespace halluscan {

/// Produces a raw (un-normalized) descriptor from decoded pixels.
/// Implementations must be pure functions of the pixels.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> describe(const RgbImage& image) const = 0;
};

/// 8x8x8 RGB histogram (pixel fractions) followed by a 16x16 area-averaged
/// grayscale thumbnail in [0,1]. 768 values.
class HistThumbExtractor final : public FeatureExtractor {
public:
    static constexpr int kBinsPerChannel = 8;
    static constexpr int kThumbEdge = 16;
    static constexpr std::size_t kHistDim = kBinsPerChannel * kBinsPerChannel * kBinsPerChannel;
    static constexpr std::size_t kThumbDim = kThumbEdge * kThumbEdge;

    std::string name() const override { return "hist_thumb"; }
    std::size_t dim() const override { return kHistDim + kThumbDim; }
    std::vector<double> describe(const RgbImage& image) const override;

    static std::vector<double> histogram(const RgbImage& image);
    static std::vector<double> thumbnail(const RgbImage& image);
};

/// Histogram part only (512 values).
class HistogramExtractor final : public FeatureExtractor {
public:
    std::string name() const override { return "histogram"; }
    std::size_t dim() const override { return HistThumbExtractor::kHistDim; }
    std::vector<double> describe(const RgbImage& image) const override {
        return HistThumbExtractor::histogram(image);
    }
};

using ExtractorFactory = std::function<std::unique_ptr<FeatureExtractor>()>;

/// Adapter slot for external embedding backends.
void register_extractor(const std::string& name, ExtractorFactory factory);
std::unique_ptr<FeatureExtractor> make_extractor(std::string_view name);
std::vector<std::string> registered_extractors();

/// Decodes every frame and attaches one L2-normalized vector per frame.
/// Results are stored by frame index regardless of `workers`.
FrameSet extract_features(FrameSet frames, const FeatureExtractor& extractor, int workers = 1);

}  // namespace halluscan
