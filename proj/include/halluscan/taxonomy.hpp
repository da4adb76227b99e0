#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace halluscan {

enum class HallucinationKind { consistency, static_, dynamic };

std::string_view to_string(HallucinationKind kind);

/// Closed taxonomy: PCH for prompt consistency, S1-S9 static, D1-D9 dynamic.
enum class CategoryCode {
    PCH,
    S1, S2, S3, S4, S5, S6, S7, S8, S9,
    D1, D2, D3, D4, D5, D6, D7, D8, D9,
};

inline constexpr std::array<CategoryCode, 9> kStaticCodes = {
    CategoryCode::S1, CategoryCode::S2, CategoryCode::S3, CategoryCode::S4, CategoryCode::S5,
    CategoryCode::S6, CategoryCode::S7, CategoryCode::S8, CategoryCode::S9};

inline constexpr std::array<CategoryCode, 9> kDynamicCodes = {
    CategoryCode::D1, CategoryCode::D2, CategoryCode::D3, CategoryCode::D4, CategoryCode::D5,
    CategoryCode::D6, CategoryCode::D7, CategoryCode::D8, CategoryCode::D9};

struct HallucinationCategory {
    HallucinationKind kind = HallucinationKind::consistency;
    CategoryCode code = CategoryCode::PCH;

    static HallucinationCategory of(CategoryCode code);

    friend bool operator==(const HallucinationCategory&, const HallucinationCategory&) = default;
};

HallucinationKind kind_of(CategoryCode code);
std::string_view to_string(CategoryCode code);
std::optional<CategoryCode> parse_code(std::string_view text);
/// Short slug, e.g. "geometric-structure".
std::string_view category_name(CategoryCode code);
/// One-line description used in prompts and prose reports.
std::string_view category_description(CategoryCode code);

}  // namespace halluscan
