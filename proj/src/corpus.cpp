#include "syco/corpus.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "syco/errors.hpp"
#include "syco/jsonl.hpp"
#include "syco/rng.hpp"

namespace syco {

std::string Question::labels() const {
    std::string out;
    out.reserve(choices.size());
    for (const auto& c : choices) out.push_back(c.label);
    return out;
}

const std::string& Question::choice_text(char label) const {
    for (const auto& c : choices) {
        if (c.label == label) return c.text;
    }
    throw RangeError("no choice labeled '" + std::string(1, label) + "' in question " + id);
}

void validate_question(const Question& q) {
    if (q.id.empty()) throw ValidationError(q.id, "empty id");
    if (q.stem.empty()) throw ValidationError(q.id, "empty stem");
    if (q.choices.size() < 2) throw ValidationError(q.id, "fewer than 2 choices");
    for (std::size_t i = 0; i < q.choices.size(); ++i) {
        const char expect = static_cast<char>('A' + i);
        if (q.choices[i].label != expect) {
            throw ValidationError(q.id, std::string("choice labels must be A.. in order; got '") +
                                            q.choices[i].label + "' at position " +
                                            std::to_string(i));
        }
        if (q.choices[i].text.empty()) {
            throw ValidationError(q.id, std::string("empty text for choice ") + expect);
        }
    }
    const std::string ls = q.labels();
    if (ls.find(q.answer_key) == std::string::npos) {
        throw ValidationError(q.id, std::string("gold answer '") + q.answer_key +
                                        "' is not among choices " + ls);
    }
}

namespace {

char parse_label(const json& j, const std::string& id) {
    if (!j.is_string() || j.get<std::string>().size() != 1) {
        throw ValidationError(id, "answer must be a single letter");
    }
    char c = j.get<std::string>()[0];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return c;
}

std::vector<Choice> parse_choices(const json& j, const std::string& id) {
    std::vector<Choice> out;
    if (j.is_object()) {
        // Object keys land sorted (nlohmann uses std::map), which is exactly
        // the label order we want; still normalize case.
        for (const auto& [key, val] : j.items()) {
            if (key.size() != 1) throw ValidationError(id, "choice label '" + key + "' is not a single letter");
            char c = key[0];
            if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
            out.push_back({c, val.is_string() ? val.get<std::string>() : val.dump()});
        }
        std::sort(out.begin(), out.end(), [](const Choice& a, const Choice& b) { return a.label < b.label; });
    } else if (j.is_array()) {
        char label = 'A';
        for (const auto& val : j) {
            out.push_back({label++, val.is_string() ? val.get<std::string>() : val.dump()});
        }
    } else {
        throw ValidationError(id, "choices must be an object or array");
    }
    return out;
}

}  // namespace

Question question_from_json(const json& j, const std::string& dataset) {
    Question q;
    q.dataset = dataset;
    q.id = j.value("id", "");
    if (!j.contains("question") || !j["question"].is_string()) {
        throw ValidationError(q.id, "missing 'question' field");
    }
    q.stem = j["question"].get<std::string>();
    if (!j.contains("choices")) throw ValidationError(q.id, "missing 'choices' field");
    q.choices = parse_choices(j["choices"], q.id);
    if (!j.contains("answer")) throw ValidationError(q.id, "missing 'answer' field");
    q.answer_key = parse_label(j["answer"], q.id);
    q.subject = j.value("subject", "");
    validate_question(q);
    return q;
}

json question_to_json(const Question& q) {
    json choices = json::object();
    for (const auto& c : q.choices) choices[std::string(1, c.label)] = c.text;
    json j = {{"id", q.id},
              {"question", q.stem},
              {"choices", choices},
              {"answer", std::string(1, q.answer_key)}};
    if (!q.subject.empty()) j["subject"] = q.subject;
    return j;
}

Dataset load_dataset(const std::filesystem::path& path, const std::string& name,
                     bool permissive, std::vector<std::string>* skipped,
                     std::optional<int> declared_choice_count) {
    Dataset ds;
    ds.name = name;
    ds.declared_choice_count = declared_choice_count;
    std::set<std::string> seen_ids;
    for_each_jsonl(path, [&](std::size_t lineno, const json& j) {
        try {
            Question q = question_from_json(j, name);
            if (!seen_ids.insert(q.id).second) {
                throw ValidationError(q.id, "duplicate question id");
            }
            if (declared_choice_count && q.choice_count() != *declared_choice_count) {
                throw ValidationError(q.id, "expected " + std::to_string(*declared_choice_count) +
                                                " choices, got " + std::to_string(q.choice_count()));
            }
            ds.questions.push_back(std::move(q));
        } catch (const ValidationError& e) {
            if (!permissive) throw;
            if (skipped) skipped->push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    });
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::vector<json> records;
    records.reserve(ds.questions.size());
    for (const auto& q : ds.questions) records.push_back(question_to_json(q));
    write_jsonl(path, records);
}

Dataset filter_subject(const Dataset& ds, const std::string& subject) {
    Dataset out;
    out.name = ds.name;
    out.declared_choice_count = ds.declared_choice_count;
    for (const auto& q : ds.questions) {
        if (q.subject == subject) out.questions.push_back(q);
    }
    return out;
}

Dataset subset(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    if (k > ds.questions.size()) {
        throw RangeError("subset size " + std::to_string(k) + " exceeds dataset size " +
                         std::to_string(ds.questions.size()));
    }
    std::vector<std::size_t> idx(ds.questions.size());
    std::iota(idx.begin(), idx.end(), 0);
    Splitmix rng(seed);
    // Partial Fisher-Yates: the first k slots are a uniform k-sample.
    for (std::size_t i = 0; i < k && i + 1 < idx.size(); ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());  // keep original order
    Dataset out;
    out.name = ds.name;
    out.declared_choice_count = ds.declared_choice_count;
    out.questions.reserve(k);
    for (std::size_t i : idx) out.questions.push_back(ds.questions[i]);
    return out;
}

namespace {

// Benchmark export shape A: {"question", "options": {"A": ...}, "answer_idx": "C", "meta_info"?}
// Benchmark export shape B: {"question_id", "question", "options": [...], "answer": "C"
//                            or "answer_index": int, "category"?}
json import_record(const json& j, const std::string& name, std::size_t lineno) {
    if (j.contains("choices") && j.contains("answer")) return j;  // already canonical

    json out;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu", lineno);
    if (j.contains("question_id")) {
        out["id"] = name + "-" + (j["question_id"].is_string()
                                      ? j["question_id"].get<std::string>()
                                      : std::to_string(j["question_id"].get<long long>()));
    } else if (j.contains("id")) {
        out["id"] = j["id"].is_string() ? j["id"].get<std::string>()
                                        : name + "-" + j["id"].dump();
    } else {
        out["id"] = name + "-" + buf;
    }
    if (!j.contains("question")) throw ParseError(lineno, "record has no 'question' field");
    out["question"] = j["question"];

    if (!j.contains("options")) throw ParseError(lineno, "record has no 'options' field");
    out["choices"] = j["options"];

    if (j.contains("answer_idx")) {
        out["answer"] = j["answer_idx"];
    } else if (j.contains("answer") && j["answer"].is_string() &&
               j["answer"].get<std::string>().size() == 1) {
        out["answer"] = j["answer"];
    } else if (j.contains("answer_index")) {
        out["answer"] = std::string(1, static_cast<char>('A' + j["answer_index"].get<int>()));
    } else {
        throw ParseError(lineno, "record has no usable gold-answer field");
    }

    if (j.contains("category")) {
        out["subject"] = j["category"];
    } else if (j.contains("meta_info")) {
        out["subject"] = j["meta_info"];
    } else if (j.contains("subject")) {
        out["subject"] = j["subject"];
    }
    return out;
}

}  // namespace

std::size_t import_dataset(const std::filesystem::path& src, const std::filesystem::path& dst,
                           const std::string& name) {
    std::vector<json> out;
    for_each_jsonl(src, [&](std::size_t lineno, const json& j) {
        json rec = import_record(j, name, lineno);
        // Validate now so the emitted file is guaranteed loadable.
        Question q = question_from_json(rec, name);
        out.push_back(question_to_json(q));
    });
    write_jsonl(dst, out);
    return out.size();
}

}  // namespace syco
