#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace syco {

using json = nlohmann::json;

struct Choice {
    char label;  // uppercase letter
    std::string text;
    bool operator==(const Choice&) const = default;
};

// One multiple-choice item. Labels are a contiguous prefix of A..Z in order,
// the gold answer is always one of them, and there are at least two choices.
struct Question {
    std::string id;
    std::string stem;
    std::vector<Choice> choices;
    char answer_key = 0;
    std::string subject;  // optional tag, empty if absent
    std::string dataset;

    int choice_count() const { return static_cast<int>(choices.size()); }
    std::string labels() const;                  // e.g. "ABCD"
    const std::string& choice_text(char label) const;
    bool operator==(const Question&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<Question> questions;
    std::optional<int> declared_choice_count;

    bool operator==(const Dataset&) const = default;
};

// Throws ValidationError naming the first violated invariant.
void validate_question(const Question& q);

// Line format: {"id": str, "question": str, "choices": {"A": str, ...} | [str, ...],
// "answer": str, "subject": str?}. List choices are labeled A.. in order.
// permissive=true downgrades per-record validation failures to skip-with-log
// (collected in skipped, if given); parse errors always abort.
Dataset load_dataset(const std::filesystem::path& path, const std::string& name,
                     bool permissive = false, std::vector<std::string>* skipped = nullptr,
                     std::optional<int> declared_choice_count = std::nullopt);

json question_to_json(const Question& q);
Question question_from_json(const json& j, const std::string& dataset);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Keep only questions whose subject tag equals `subject`.
Dataset filter_subject(const Dataset& ds, const std::string& subject);

// Deterministic k-sample preserving the original question order.
// Same seed, same subset. k > |questions| throws RangeError.
Dataset subset(const Dataset& ds, std::size_t k, std::uint64_t seed);

// One-shot import of the common public shapes of the two supported benchmarks
// (and already-canonical records) into the canonical line format.
// Returns the number of questions written.
std::size_t import_dataset(const std::filesystem::path& src, const std::filesystem::path& dst,
                           const std::string& name);

}  // namespace syco
