#include "halluscan/prompts.hpp"

#include "halluscan/taxonomy.hpp"

namespace halluscan::prompts {

namespace {

std::string category_list(bool dynamic) {
    std::string out;
    const auto& codes = dynamic ? kDynamicCodes : kStaticCodes;
    for (auto code : codes) {
        out += "- ";
        out += to_string(code);
        out += " (";
        out += category_name(code);
        out += "): ";
        out += category_description(code);
        out += "\n";
    }
    return out;
}

std::string assemble(std::string_view task, std::string_view format, const json& context) {
    std::string out(task);
    out += "\n\nResponse format (one JSON object, no other text):\n";
    out += format;
    out += "\n\nContext:\n";
    out += context.dump(2);
    return out;
}

constexpr std::string_view kRelationFormat =
    R"(  "temporal_relations": [{"from_frame": <int>, "to_frame": <int>, "subject": "<tracked object id>",
                          "change": "position" | "interaction" | "attribute", "detail": "<what changed>"}])";

constexpr std::string_view kDynamicFindingFormat =
    R"(  "findings": [{"code": "D1".."D9", "severity": <0-10>, "description": "<what is implausible>",
                 "frames": [<frame_index>, ...]}])";

}  // namespace

std::string premise(std::string_view user_prompt) {
    json context = {{"prompt", user_prompt}};
    return assemble(
        "Decide whether the video generation prompt below describes a scene that can exist under real-world "
        "physical and logical constraints. Fantasy is acceptable when it is internally coherent; contradictions "
        "(a square circle, an object in two places at once) are not.",
        R"({"valid": true | false, "reason": "<one sentence>"})", context);
}

std::string static_kg(const json& context) {
    return assemble(
        "The attached images are video frames, in the order listed in the context. For every frame: list the "
        "objects you can see (give each a short noun label, a ref unique within the frame, and visible attributes "
        "such as color), then the relations and interactions between them as subject-predicate-object facts "
        "using object refs. Use snake_case predicates such as sitting_on or holding.",
        R"({"graphs": [{"frame_index": <int>,
              "objects": [{"ref": "<id>", "label": "<noun>", "attributes": {"<key>": "<value>"}}],
              "triples": [{"subject": "<ref>", "predicate": "<relation>", "object": "<ref>"}]}]})",
        context);
}

std::string consistency(const json& context) {
    return assemble(
        "The attached images are keyframes and detail frames of a generated video, in the order listed in the "
        "context, together with any scene facts extracted from them. First write a summary of the video covering "
        "its main events, objects and interactions. Then rate how well that content matches the generation "
        "prompt: similarity 1 means the video shows exactly what the prompt asks for, 0 means it is unrelated. "
        "Rate the severity of any mismatch from 0 (none) to 10 (completely different content).",
        R"({"summary": "<text>", "similarity": <0-1>, "severity": <0-10>, "rationale": "<text>"})", context);
}

std::string static_detect(const json& context) {
    return assemble(
        "Inspect each attached frame on its own for static hallucinations: content inside a single frame that "
        "is implausible given the scene facts and the video summary in the context. Use only these categories:\n" +
            category_list(false) +
            "Report each problem once, with the frame it occurs in and a severity from 0 to 10. Return an empty "
            "list when the frames look plausible.",
        R"({"findings": [{"code": "S1".."S9", "severity": <0-10>, "description": "<what is wrong>", "frame_index": <int>}]})",
        context);
}

std::string cluster_dynamic(const json& context) {
    return assemble(
        "The attached images are consecutive frames of one video segment, in the order listed in the context, "
        "with the objects tracked across them. For each pair of consecutive frames, describe how tracked objects "
        "change: their position, their interactions, or their attributes. Refer to objects only by the tracked "
        "ids given in the context.",
        std::string("{\n") + std::string(kRelationFormat) + "\n}", context);
}

std::string local_detect(const json& context) {
    return assemble(
        "The attached images are consecutive frames of one video segment. Using the temporal changes and the "
        "static problems already found in these frames (listed in the context, check those areas first), find "
        "dynamic hallucinations: implausible changes between frames. Use only these categories:\n" +
            category_list(true) + "Return an empty list when the motion looks plausible.",
        std::string("{\n") + std::string(kDynamicFindingFormat) + "\n}", context);
}

std::string group_dynamic(const json& context, bool with_relations) {
    if (!with_relations) {
        return assemble(
            "The attached images are the keyframes of a generated video, in time order. Look for dynamic "
            "hallucinations that only show across the whole video: objects whose identity, appearance or state "
            "changes without cause between scenes, or events in an impossible order. Use only these categories:\n" +
                category_list(true) + "Return an empty list when the video is coherent.",
            std::string("{\n") + std::string(kDynamicFindingFormat) + "\n}", context);
    }
    return assemble(
        "The attached images are the keyframes of a generated video, in time order, with the objects tracked "
        "across them. First, for each pair of consecutive keyframes, describe how tracked objects change "
        "(position, interaction, attribute), referring to them by tracked id. Then, using those changes, find "
        "dynamic hallucinations that only show across the whole video. Use only these categories:\n" +
            category_list(true) + "Return empty lists when nothing changes or the video is coherent.",
        std::string("{\n") + std::string(kRelationFormat) + ",\n" + std::string(kDynamicFindingFormat) + "\n}",
        context);
}

std::string group_dynamic_kg(const json& context) {
    return assemble(
        "The attached images are the keyframes of a generated video, in time order, with the objects tracked "
        "across them. For each pair of consecutive keyframes, describe how tracked objects change: position, "
        "interaction, or attribute. Refer to objects only by their tracked ids.",
        std::string("{\n") + std::string(kRelationFormat) + "\n}", context);
}

}  // namespace halluscan::prompts
