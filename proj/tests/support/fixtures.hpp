#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "halluscan/bench.hpp"
#include "scenario.hpp"

namespace halluscan::testing {

/// tests/data in the source tree.
std::filesystem::path data_dir();

std::vector<Rgb> golden_colors();
std::vector<int> golden_counts();
Plan golden_plan();
json golden_config_doc();

std::vector<std::string> minibench_ids();
std::vector<std::vector<Rgb>> minibench_colors();
std::vector<Plan> minibench_plans();
std::vector<AnnotationRecord> minibench_annotations();
json minibench_config_doc();

/// 50 records: 46 hallucinated, 54 static and 97 dynamic codes in total.
std::vector<AnnotationRecord> bench50_annotations();

std::vector<AnnotationRecord> hand3_annotations();
std::vector<PredictionRecord> hand3_predictions();

AnnotationRecord make_record(std::string id, bool pch, std::vector<std::string> static_codes,
                             std::vector<std::string> dynamic_codes);

}  // namespace halluscan::testing
