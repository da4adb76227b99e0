#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "halluscan/config.hpp"
#include "halluscan/gateway.hpp"
#include "halluscan/keyframe.hpp"
#include "halluscan/report.hpp"

namespace halluscan {

struct DetectionRun {
    QualityReport report;
    FrameSet frames;
    KeyframeAnalysis analysis;
};

/// Full detection for one video:
///   ingest -> features -> keyframes -> detail frames -> clusters
///   -> [per cluster] static KG
///   -> summary + consistency
///   -> [per cluster] static detection, dynamic KG, local dynamic detection
///   -> group dynamic KG + global detection -> aggregate -> score.
/// The optional premise check runs first. Per-cluster stages use up to
/// `config.workers` threads; results are merged by cluster id.
DetectionRun run_detection(const std::filesystem::path& source, std::string_view prompt,
                           const PipelineConfig& config, Gateway& gw, std::string video_id = {});

/// Video id used when none is given: the source's file or directory name.
std::string default_video_id(const std::filesystem::path& source);

}  // namespace halluscan
