#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace syco {

// Open/close marker pair for reasoning traces, e.g. {"<think>", "</think>"}.
struct DelimiterPair {
    std::string open;
    std::string close;
};

inline std::vector<DelimiterPair> default_delimiters() {
    return {{"<think>", "</think>"}};
}

struct StripResult {
    // The trace keeps its markers, so for the usual leading-block payload
    // trace + answer_text reassembles the original string.
    std::optional<std::string> trace;
    std::string answer_text;
};

// Removes the first balanced marker pair (outermost wins when nested). An
// unmatched open marker swallows everything after it. Total: never throws.
StripResult strip_reasoning(const std::string& raw, const std::vector<DelimiterPair>& delimiters);

struct ExtractedChoice {
    std::optional<char> value;  // nullopt = abstain
    std::string rule_fired;
    // Character range [begin, end) in the answer text; present iff value is a label.
    std::optional<std::pair<std::size_t, std::size_t>> evidence_span;

    bool is_abstain() const { return !value.has_value(); }
};

// Rules, in priority order, first hit wins; two distinct labels matched by the
// same rule abstain:
//   1. explicit statements: "answer is X", "Answer: X", "correct option is X"
//   2. a line that is just a label, optionally parenthesized or dotted
//   3. the final "(X)" occurrence anywhere
//   4. exactly one label appearing as a standalone uppercase token
// A returned label is always a member of `labels`.
ExtractedChoice extract_choice(const std::string& answer_text, const std::string& labels);

}  // namespace syco
