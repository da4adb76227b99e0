#include "halluscan/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "halluscan/error.hpp"
#include "halluscan/parallel.hpp"

namespace halluscan {

std::vector<double> HistThumbExtractor::histogram(const RgbImage& image) {
    std::vector<double> hist(kHistDim, 0.0);
    const std::size_t pixels = static_cast<std::size_t>(image.width) * image.height;
    if (pixels == 0) return hist;
    constexpr int shift = 5;  // 256 / 8 levels per bin
    for (std::size_t p = 0; p < pixels; ++p) {
        const int r = image.rgb[p * 3] >> shift;
        const int g = image.rgb[p * 3 + 1] >> shift;
        const int b = image.rgb[p * 3 + 2] >> shift;
        hist[static_cast<std::size_t>((r * kBinsPerChannel + g) * kBinsPerChannel + b)] += 1.0;
    }
    for (double& v : hist) v /= static_cast<double>(pixels);
    return hist;
}

std::vector<double> HistThumbExtractor::thumbnail(const RgbImage& image) {
    std::vector<double> thumb(kThumbDim, 0.0);
    if (image.width == 0 || image.height == 0) return thumb;
    for (int cy = 0; cy < kThumbEdge; ++cy) {
        int y0 = cy * image.height / kThumbEdge;
        int y1 = std::max((cy + 1) * image.height / kThumbEdge, y0 + 1);
        y0 = std::min(y0, image.height - 1);
        y1 = std::min(y1, image.height);
        for (int cx = 0; cx < kThumbEdge; ++cx) {
            int x0 = cx * image.width / kThumbEdge;
            int x1 = std::max((cx + 1) * image.width / kThumbEdge, x0 + 1);
            x0 = std::min(x0, image.width - 1);
            x1 = std::min(x1, image.width);
            double sum = 0.0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    sum += 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
                }
            }
            const double count = static_cast<double>((y1 - y0) * (x1 - x0));
            thumb[static_cast<std::size_t>(cy * kThumbEdge + cx)] = sum / count / 255.0;
        }
    }
    return thumb;
}

namespace {

// Unit length per block so the 256 thumbnail values do not drown the
// histogram.
void unit_block(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq == 0.0) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

}  // namespace

std::vector<double> HistThumbExtractor::describe(const RgbImage& image) const {
    auto out = histogram(image);
    auto thumb = thumbnail(image);
    unit_block(out);
    unit_block(thumb);
    out.insert(out.end(), thumb.begin(), thumb.end());
    return out;
}

namespace {

struct Registry {
    std::mutex mutex;
    std::map<std::string, ExtractorFactory, std::less<>> factories{
        {"hist_thumb", [] { return std::make_unique<HistThumbExtractor>(); }},
        {"histogram", [] { return std::make_unique<HistogramExtractor>(); }},
    };
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

void register_extractor(const std::string& name, ExtractorFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.factories[name] = std::move(factory);
}

std::unique_ptr<FeatureExtractor> make_extractor(std::string_view name) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.factories.find(name);
    if (it == r.factories.end()) throw ContractError("unknown feature extractor: " + std::string(name));
    return it->second();
}

std::vector<std::string> registered_extractors() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> names;
    for (const auto& [name, _] : r.factories) names.push_back(name);
    return names;
}

FrameSet extract_features(FrameSet frames, const FeatureExtractor& extractor, int workers) {
    if (frames.frames.empty()) throw ContractError("cannot extract features from an empty frame set");

    const std::size_t n = frames.size();
    std::vector<FeatureVector> features(n);
    std::vector<std::string> errors(n);
    parallel_for(n, workers, [&](std::size_t i) {
        try {
            auto raw = extractor.describe(decode_image(frames.frames[i].image_ref));
            if (raw.size() != extractor.dim()) throw InputError("extractor returned wrong dimension");
            features[i] = FeatureVector::normalized(std::move(raw));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::string message;
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) message += "\n  frame " + std::to_string(i) + ": " + errors[i];
    }
    if (!message.empty()) throw InputError("feature extraction failed:" + message);

    frames.features = std::move(features);
    return frames;
}

}  // namespace halluscan
