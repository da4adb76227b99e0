#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace halluscan {

/// One uniformly sampled frame. `index` is the position in the sampled
/// sequence, `source_index` the frame number in the original stream.
struct Frame {
    int index = 0;
    int source_index = 0;
    double timestamp_s = 0.0;
    std::filesystem::path image_ref;
};

/// Fixed-length visual descriptor. Built raw, or L2-normalized via
/// `normalized()`; a zero input normalizes to the zero vector and is flagged.
class FeatureVector {
public:
    FeatureVector() = default;
    explicit FeatureVector(std::vector<double> values);

    static FeatureVector normalized(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return values_.size(); }
    bool degenerate() const noexcept { return degenerate_; }
    double norm() const noexcept;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    std::vector<double> values_;
    bool degenerate_ = false;
};

struct FrameSet {
    std::vector<Frame> frames;
    std::optional<std::vector<FeatureVector>> features;
    double total_duration_s = 0.0;

    std::size_t size() const noexcept { return frames.size(); }
    bool has_features() const noexcept { return features.has_value(); }
    const FeatureVector& feature(std::size_t i) const;
};

struct IngestOptions {
    int stride = 5;
    double synthetic_fps = 30.0;
    /// Shell template turning a container into an image directory.
    /// `{input}` and `{output}` are substituted (both shell-quoted).
    std::string decoder_cmd = "ffmpeg -loglevel error -i {input} {output}/%06d.png";
    /// Optional template printing the container frame rate ("30000/1001" or "25").
    std::string probe_cmd;
    /// Where decoded container frames go; a temp directory when empty.
    std::filesystem::path work_dir;
};

/// Lexicographically ordered PNG/JPEG files of a directory.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

/// Uniform sampling over an ordered list of decoded frames.
FrameSet sample_frames(const std::vector<std::filesystem::path>& images, int stride, double fps);

/// Accepts an image directory or a video container (decoded by `decoder_cmd`).
FrameSet ingest(const std::filesystem::path& source, const IngestOptions& options = {});

/// Decoded 8-bit RGB pixels, row-major, 3 bytes per pixel.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    std::uint8_t at(int x, int y, int channel) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + channel];
    }
};

/// Throws InputError when the file cannot be decoded.
RgbImage decode_image(const std::filesystem::path& path);

enum class DistanceMetric { cosine, euclidean };

DistanceMetric parse_metric(std::string_view id);
std::string_view to_string(DistanceMetric metric);

/// Symmetric, d(x,x) = 0. Cosine distance is 1 - cos(a,b) clamped to [0,2];
/// a zero vector is at distance 1 from any non-zero vector.
double frame_distance(const FeatureVector& a, const FeatureVector& b,
                      DistanceMetric metric = DistanceMetric::cosine);

}  // namespace halluscan
