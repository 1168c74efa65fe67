#include "syco/extract.hpp"

#include <cctype>
#include <regex>
#include <set>

namespace syco {

StripResult strip_reasoning(const std::string& raw, const std::vector<DelimiterPair>& delimiters) {
    // Earliest open marker across all configured pairs decides which pair applies.
    std::size_t open_pos = std::string::npos;
    const DelimiterPair* pair = nullptr;
    for (const auto& d : delimiters) {
        if (d.open.empty() || d.close.empty()) continue;
        std::size_t p = raw.find(d.open);
        if (p != std::string::npos && p < open_pos) {
            open_pos = p;
            pair = &d;
        }
    }
    if (!pair) return {std::nullopt, raw};

    // Walk forward counting nesting depth of the same pair; the close that
    // returns to depth zero ends the outermost block.
    std::size_t pos = open_pos + pair->open.size();
    int depth = 1;
    std::size_t close_end = std::string::npos;
    while (pos < raw.size()) {
        std::size_t next_open = raw.find(pair->open, pos);
        std::size_t next_close = raw.find(pair->close, pos);
        if (next_close == std::string::npos) break;
        if (next_open != std::string::npos && next_open < next_close) {
            ++depth;
            pos = next_open + pair->open.size();
        } else {
            --depth;
            pos = next_close + pair->close.size();
            if (depth == 0) {
                close_end = pos;
                break;
            }
        }
    }

    StripResult out;
    if (close_end == std::string::npos) {
        // Unbalanced open: everything after it is trace.
        out.trace = raw.substr(open_pos);
        out.answer_text = raw.substr(0, open_pos);
    } else {
        out.trace = raw.substr(open_pos, close_end - open_pos);
        out.answer_text = raw.substr(0, open_pos) + raw.substr(close_end);
    }
    return out;
}

namespace {

bool is_label(char c, const std::string& labels) {
    return labels.find(c) != std::string::npos;
}

char upper(char c) {
    return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

struct Match {
    char label;
    std::size_t begin;
    std::size_t end;
};

// Distinct labels -> abstain; same label everywhere -> the last occurrence.
std::optional<Match> resolve(const std::vector<Match>& ms) {
    if (ms.empty()) return std::nullopt;
    std::set<char> distinct;
    for (const auto& m : ms) distinct.insert(m.label);
    if (distinct.size() != 1) return std::nullopt;
    return ms.back();
}

const std::regex& explicit_pattern() {
    static const std::regex re(
        R"((?:final\s+answer|answer|correct\s+(?:option|answer|choice))\s*(?:is\s*:?|:)\s*\**\(?([A-Za-z])\)?)",
        std::regex::icase | std::regex::optimize);
    return re;
}

std::vector<Match> explicit_matches(const std::string& text, const std::string& labels) {
    static const std::regex continuation(R"(^\s*(?:or|and)\s+\(?([A-Za-z])\)?\b)",
                                         std::regex::icase);
    std::vector<Match> out;
    auto begin = std::sregex_iterator(text.begin(), text.end(), explicit_pattern());
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        char c = upper(m.str(1)[0]);
        if (!is_label(c, labels)) continue;
        // The captured letter must not be the start of a longer word
        // ("answer is correct" must not read as label C).
        std::size_t after = static_cast<std::size_t>(m.position(1)) + 1;
        if (after < text.size() && std::isalnum(static_cast<unsigned char>(text[after]))) continue;
        std::size_t end = static_cast<std::size_t>(m.position(0) + m.length(0));
        out.push_back({c, static_cast<std::size_t>(m.position(0)), end});
        // "answer is A or B" offers two labels, which the tie rule must see.
        std::smatch cm;
        std::string rest = text.substr(end);
        if (std::regex_search(rest, cm, continuation)) {
            char c2 = upper(cm.str(1)[0]);
            if (is_label(c2, labels)) out.push_back({c2, end, end + cm.length(0)});
        }
    }
    return out;
}

std::vector<Match> bare_line_matches(const std::string& text, const std::string& labels) {
    static const std::regex line_re(R"(^\s*\(?([A-Za-z])\)?\s*[.:]?\s*$)");
    std::vector<Match> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        std::size_t len = (nl == std::string::npos ? text.size() : nl) - start;
        std::string line = text.substr(start, len);
        std::smatch m;
        if (std::regex_match(line, m, line_re)) {
            char c = upper(m.str(1)[0]);
            if (is_label(c, labels)) {
                std::size_t lb = start + static_cast<std::size_t>(m.position(1));
                out.push_back({c, lb, lb + 1});
            }
        }
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return out;
}

std::optional<Match> final_parenthesized(const std::string& text, const std::string& labels) {
    std::optional<Match> last;
    for (std::size_t i = 0; i + 2 < text.size(); ++i) {
        if (text[i] == '(' && text[i + 2] == ')') {
            char c = upper(text[i + 1]);
            if (is_label(c, labels)) last = Match{c, i, i + 3};
        }
    }
    return last;
}

std::vector<Match> standalone_tokens(const std::string& text, const std::string& labels) {
    // Uppercase only: a lowercase article "a" is not an answer. A standalone
    // "I" is almost always the pronoun, so it never counts here; the explicit
    // and bare-line rules still recognize label I.
    std::vector<Match> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isalnum(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
            if (j - i == 1 && text[i] != 'I' && is_label(text[i], labels)) {
                out.push_back({text[i], i, j});
            }
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

}  // namespace

ExtractedChoice extract_choice(const std::string& answer_text, const std::string& labels) {
    ExtractedChoice out;

    auto expl = explicit_matches(answer_text, labels);
    if (auto m = resolve(expl)) {
        out.value = m->label;
        out.rule_fired = "explicit_statement";
        out.evidence_span = {m->begin, m->end};
        return out;
    }
    if (!expl.empty()) {
        out.rule_fired = "tie_explicit_statement";
        return out;
    }

    auto bare = bare_line_matches(answer_text, labels);
    if (auto m = resolve(bare)) {
        out.value = m->label;
        out.rule_fired = "bare_label_line";
        out.evidence_span = {m->begin, m->end};
        return out;
    }
    if (!bare.empty()) {
        out.rule_fired = "tie_bare_label_line";
        return out;
    }

    if (auto m = final_parenthesized(answer_text, labels)) {
        out.value = m->label;
        out.rule_fired = "final_parenthesized";
        out.evidence_span = {m->begin, m->end};
        return out;
    }

    auto tokens = standalone_tokens(answer_text, labels);
    if (auto m = resolve(tokens)) {
        out.value = m->label;
        out.rule_fired = "unique_standalone_token";
        out.evidence_span = {m->begin, m->end};
        return out;
    }

    out.rule_fired = tokens.empty() ? "none" : "tie_standalone_token";
    return out;
}

}  // namespace syco
