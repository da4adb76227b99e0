#include "halluscan/frames.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numeric>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <unistd.h>

#include "halluscan/error.hpp"

namespace fs = std::filesystem;

namespace halluscan {

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!std::isfinite(v)) throw ContractError("feature vector entries must be finite");
    }
}

FeatureVector FeatureVector::normalized(std::vector<double> values) {
    FeatureVector out(std::move(values));
    const double n = out.norm();
    if (n == 0.0) {
        out.degenerate_ = true;
        return out;
    }
    for (double& v : out.values_) v /= n;
    return out;
}

double FeatureVector::norm() const noexcept {
    return std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
}

const FeatureVector& FrameSet::feature(std::size_t i) const {
    if (!features) throw ContractError("frame set has no features");
    return features->at(i);
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    for (auto pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + value.size())) {
        tmpl.replace(pos, key.size(), value);
    }
    return tmpl;
}

std::string run_capture(const std::string& cmd) {
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    if (!pipe) throw InputError("failed to run: " + cmd);
    std::string out;
    std::array<char, 256> buf{};
    while (auto n = std::fread(buf.data(), 1, buf.size(), pipe.get())) out.append(buf.data(), n);
    return out;
}

double parse_rate(const std::string& text) {
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return std::stod(text);
        const double num = std::stod(text.substr(0, slash));
        const double den = std::stod(text.substr(slash + 1));
        if (den == 0.0) return 0.0;
        return num / den;
    } catch (const std::exception&) {
        return 0.0;
    }
}

}  // namespace

std::vector<fs::path> list_image_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && has_image_extension(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return out;
}

FrameSet sample_frames(const std::vector<fs::path>& images, int stride, double fps) {
    if (stride < 1) throw ContractError("stride must be >= 1");
    if (!(fps > 0.0)) throw ContractError("frame rate must be positive");
    if (images.empty()) throw EmptyInputError("no decodable frames");

    FrameSet out;
    for (std::size_t src = 0; src < images.size(); src += static_cast<std::size_t>(stride)) {
        Frame f;
        f.index = static_cast<int>(out.frames.size());
        f.source_index = static_cast<int>(src);
        f.timestamp_s = static_cast<double>(src) / fps;
        f.image_ref = images[src];
        out.frames.push_back(std::move(f));
    }
    out.total_duration_s = static_cast<double>(images.size()) / fps;
    return out;
}

FrameSet ingest(const fs::path& source, const IngestOptions& options) {
    if (options.stride < 1) throw ContractError("stride must be >= 1");
    std::error_code ec;
    if (!fs::exists(source, ec)) throw InputError("source does not exist: " + source.string());

    if (fs::is_directory(source, ec)) {
        return sample_frames(list_image_files(source), options.stride, options.synthetic_fps);
    }
    if (!fs::is_regular_file(source, ec)) throw InputError("unreadable source: " + source.string());

    fs::path out_dir = options.work_dir;
    if (out_dir.empty()) {
        out_dir = fs::temp_directory_path() /
                  ("halluscan-decode-" + std::to_string(::getpid()) + "-" + source.stem().string());
    }
    fs::create_directories(out_dir);
    for (const auto& stale : list_image_files(out_dir)) fs::remove(stale);

    std::string cmd = substitute(options.decoder_cmd, "{input}", shell_quote(fs::absolute(source).string()));
    cmd = substitute(cmd, "{output}", shell_quote(out_dir.string()));
    if (std::system(cmd.c_str()) != 0) throw InputError("decoder failed for " + source.string());

    double fps = options.synthetic_fps;
    if (!options.probe_cmd.empty()) {
        const double probed =
            parse_rate(run_capture(substitute(options.probe_cmd, "{input}", shell_quote(source.string()))));
        if (probed > 0.0) fps = probed;
    }
    return sample_frames(list_image_files(out_dir), options.stride, fps);
}

RgbImage decode_image(const fs::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw InputError("cannot decode image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);

    RgbImage img;
    img.width = rgb.cols;
    img.height = rgb.rows;
    img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < rgb.rows; ++y) {
        const auto* row = rgb.ptr<std::uint8_t>(y);
        std::copy(row, row + img.width * 3, img.rgb.begin() + static_cast<std::ptrdiff_t>(y) * img.width * 3);
    }
    return img;
}

DistanceMetric parse_metric(std::string_view id) {
    if (id == "cosine") return DistanceMetric::cosine;
    if (id == "euclidean") return DistanceMetric::euclidean;
    throw ContractError("unknown distance metric: " + std::string(id));
}

std::string_view to_string(DistanceMetric metric) {
    return metric == DistanceMetric::cosine ? "cosine" : "euclidean";
}

double frame_distance(const FeatureVector& a, const FeatureVector& b, DistanceMetric metric) {
    if (a.dim() != b.dim()) {
        throw ContractError("feature dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
    }
    const auto va = a.values();
    const auto vb = b.values();
    if (std::equal(va.begin(), va.end(), vb.begin())) return 0.0;

    if (metric == DistanceMetric::euclidean) {
        double sum = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) {
            const double d = va[i] - vb[i];
            sum += d * d;
        }
        return std::sqrt(sum);
    }

    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 1.0;
    const double cos = std::inner_product(va.begin(), va.end(), vb.begin(), 0.0) / (na * nb);
    return std::clamp(1.0 - cos, 0.0, 2.0);
}

}  // namespace halluscan
