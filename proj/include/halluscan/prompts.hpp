#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace halluscan::prompts {

using json = nlohmann::json;

/// Schema ids published with each template.
inline constexpr std::string_view kPremiseSchema = "premise.v1";
inline constexpr std::string_view kConsistencySchema = "consistency.v1";
inline constexpr std::string_view kStaticKgSchema = "static_kg.v1";
inline constexpr std::string_view kStaticDetectSchema = "static_detect.v1";
inline constexpr std::string_view kDynamicKgSchema = "dynamic_kg.v1";
inline constexpr std::string_view kDynamicDetectSchema = "dynamic_detect.v1";
inline constexpr std::string_view kGroupDynamicSchema = "group_dynamic.v1";

std::string premise(std::string_view user_prompt);
std::string static_kg(const json& context);
std::string consistency(const json& context);
std::string static_detect(const json& context);
std::string cluster_dynamic(const json& context);
std::string local_detect(const json& context);
/// Group dynamic-KG construction and global detection in one reply; with
/// `with_relations` false only findings are requested.
std::string group_dynamic(const json& context, bool with_relations);
std::string group_dynamic_kg(const json& context);

}  // namespace halluscan::prompts
