#pragma once

// Rule-based prompt parser: cue phrases pick a phenomenon class, a
// quantity/unit grammar fills the class template parameters.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moreforge/canonical_json.hpp"
#include "moreforge/spec.hpp"
#include "moreforge/templates.hpp"

namespace moreforge {

inline constexpr std::size_t kMaxPromptLength = 2000;

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive, byte offsets into the prompt
    bool operator==(const Span&) const = default;
};

struct MatchedRule {
    std::string rule;
    Span span;
    bool operator==(const MatchedRule&) const = default;
};

struct InferredField {
    std::string path;   // "params.<name>"
    std::string source; // where the value came from
    bool operator==(const InferredField&) const = default;
};

struct ParseTrace {
    Phenomenon phenomenon = Phenomenon::Gravity;
    double confidence = 0.0;
    std::vector<MatchedRule> matched_rules; // sorted by span, non-overlapping
    std::vector<InferredField> inferred_fields;
    std::vector<Span> unresolved;
    TemplateParams params;
    std::vector<std::string> bound_params; // params set by a matched rule
    bool operator==(const ParseTrace&) const = default;
};

Json trace_to_json(const ParseTrace& trace);

struct Classification {
    Phenomenon phenomenon = Phenomenon::Gravity;
    double confidence = 0.0; // winning cue weight / all matched cue weight
    std::vector<MatchedRule> cues;
};

/// Throws UnclassifiableError when no cue matches and SyntaxError for empty
/// or oversized prompts.
Classification classify_phenomenon(std::string_view prompt);

struct ParseResult {
    ScenarioSpec spec;
    ParseTrace trace;
};

/// Throws Unclassifiable, Contradiction (two rules bind one parameter to
/// different values), Syntax (unknown unit) or Schema (value out of range).
ParseResult parse_prompt(std::string_view prompt);

/// POSTs {"prompt": ...} and validates the returned spec without repairing it.
ScenarioSpec external_parse(std::string_view prompt, const std::string& url);

/// One documented prompt shape of a class.
struct PromptTemplate {
    Phenomenon phenomenon;
    std::vector<std::string> verbalized;                  // params the prompt states
    std::vector<std::pair<std::string, double>> fixed;    // params the wording implies
    std::function<std::string(const TemplateParams&)> render;
};

/// The documented template family, at least five per class.
const std::vector<PromptTemplate>& prompt_templates();

/// Renders params through a template; fixed params are forced first.
std::string verbalize(const PromptTemplate& tmpl, TemplateParams params);

} // namespace moreforge
