#include "halluscan/taxonomy.hpp"

#include <utility>

#include "halluscan/error.hpp"

namespace halluscan {

namespace {

struct Entry {
    CategoryCode code;
    std::string_view id;
    std::string_view name;
    std::string_view description;
};

constexpr std::array<Entry, 19> kEntries = {{
    {CategoryCode::PCH, "PCH", "prompt-consistency", "video content diverges from what the prompt describes"},
    {CategoryCode::S1, "S1", "geometric-structure", "object shape, proportion or topology contradicts common sense"},
    {CategoryCode::S2, "S2", "biological-structure", "anatomy of people or animals is deformed, missing or duplicated"},
    {CategoryCode::S3, "S3", "lighting-shadow-material", "light direction, shadows or surface materials break physics"},
    {CategoryCode::S4, "S4", "color-distribution", "colors or color combinations look unnatural"},
    {CategoryCode::S5, "S5", "depth-of-field", "focus, depth or perspective is physically impossible"},
    {CategoryCode::S6, "S6", "composition-semantics", "object arrangement or scene setting violates semantic logic"},
    {CategoryCode::S7, "S7", "motion-blur", "blur does not match how objects are moving"},
    {CategoryCode::S8, "S8", "physical-phenomenon", "reflections, refractions or similar effects are wrong"},
    {CategoryCode::S9, "S9", "image-quality", "resolution or quality is uneven across the frame"},
    {CategoryCode::D1, "D1", "clipping", "object boundaries overlap or intersect unnaturally"},
    {CategoryCode::D2, "D2", "implausible-fusion", "separate objects merge into one"},
    {CategoryCode::D3, "D3", "appearance-disappearance", "an object appears or vanishes without cause"},
    {CategoryCode::D4, "D4", "implausible-motion", "an object moves in a physically impossible way"},
    {CategoryCode::D5, "D5", "implausible-transform", "an object deforms or changes state impossibly"},
    {CategoryCode::D6, "D6", "implausible-penetration", "an object passes through another"},
    {CategoryCode::D7, "D7", "physical-interaction-error", "an expected interaction is missing or an impossible one occurs"},
    {CategoryCode::D8, "D8", "logical-interaction-error", "events happen in the wrong temporal order"},
    {CategoryCode::D9, "D9", "other", "any other temporal implausibility"},
}};

const Entry& entry(CategoryCode code) { return kEntries[static_cast<std::size_t>(code)]; }

}  // namespace

std::string_view to_string(HallucinationKind kind) {
    switch (kind) {
        case HallucinationKind::consistency: return "consistency";
        case HallucinationKind::static_: return "static";
        case HallucinationKind::dynamic: return "dynamic";
    }
    return "unknown";
}

HallucinationKind kind_of(CategoryCode code) {
    if (code == CategoryCode::PCH) return HallucinationKind::consistency;
    return static_cast<int>(code) <= static_cast<int>(CategoryCode::S9) ? HallucinationKind::static_
                                                                         : HallucinationKind::dynamic;
}

HallucinationCategory HallucinationCategory::of(CategoryCode code) { return {kind_of(code), code}; }

std::string_view to_string(CategoryCode code) { return entry(code).id; }
std::string_view category_name(CategoryCode code) { return entry(code).name; }
std::string_view category_description(CategoryCode code) { return entry(code).description; }

std::optional<CategoryCode> parse_code(std::string_view text) {
    for (const auto& e : kEntries) {
        if (e.id == text) return e.code;
    }
    return std::nullopt;
}

}  // namespace halluscan
