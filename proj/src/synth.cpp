#include "syco/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "syco/errors.hpp"
#include "syco/rng.hpp"

namespace syco {

namespace {

std::string synth_qid(long long i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth-%06lld", i);
    return buf;
}

// Uniform pick over the labels below n_q excluding one (the answer key).
char pick_excluding_one(std::uint64_t seed, const std::string& key, int n_q, char excluded) {
    auto idx = substream_below(seed, key, 0, static_cast<std::uint32_t>(n_q - 1));
    char c = static_cast<char>('A' + idx);
    if (c >= excluded) c = static_cast<char>(c + 1);
    return c;
}

// Uniform pick excluding two labels (the answer key and the suggestion).
char pick_excluding_two(std::uint64_t seed, const std::string& key, int n_q, char ex1, char ex2) {
    const char lo = std::min(ex1, ex2);
    const char hi = std::max(ex1, ex2);
    auto idx = substream_below(seed, key, 0, static_cast<std::uint32_t>(n_q - 2));
    char c = static_cast<char>('A' + idx);
    if (c >= lo) c = static_cast<char>(c + 1);
    if (c >= hi) c = static_cast<char>(c + 1);
    return c;
}

}  // namespace

std::string to_string(LandingConvention c) {
    return c == LandingConvention::ExcludeSuggested ? "exclude-suggested" : "include-suggested";
}

LandingConvention landing_from_string(const std::string& s) {
    if (s == "exclude-suggested") return LandingConvention::ExcludeSuggested;
    if (s == "include-suggested") return LandingConvention::IncludeSuggested;
    throw ConfigError("unknown landing convention '" + s +
                      "' (expected exclude-suggested or include-suggested)");
}

void validate_params(const BehaviorParams& p) {
    auto check = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw RangeError(std::string(name) + " must be in [0,1], got " + std::to_string(v));
        }
    };
    check(p.p_correct, "p_correct");
    check(p.f_move, "f_move");
    check(p.sigma, "sigma");
}

char behave_vanilla(const BehaviorParams& p, const std::string& question_id, char answer_key,
                    int n_q) {
    if (substream_u01(p.seed, "vanilla|" + question_id, 0) < p.p_correct) return answer_key;
    return pick_excluding_one(p.seed, "vanilla-wrong|" + question_id, n_q, answer_key);
}

char behave_perturbed(const BehaviorParams& p, const std::string& question_id, char answer_key,
                      char vanilla_choice, char suggested, int n_q,
                      const std::string& condition_name) {
    // Outside Q_c the model just repeats its wrong vanilla answer.
    if (vanilla_choice != answer_key) return vanilla_choice;

    const std::string key =
        question_id + "|" + condition_name + "|" + std::string(1, suggested);
    if (substream_u01(p.seed, "move|" + key, 0) >= p.f_move) return answer_key;
    if (n_q == 2) return suggested;  // the suggestion is the only incorrect label
    if (substream_u01(p.seed, "syco|" + key, 0) < p.sigma) return suggested;
    if (p.landing == LandingConvention::ExcludeSuggested) {
        return pick_excluding_two(p.seed, "land|" + key, n_q, answer_key, suggested);
    }
    return pick_excluding_one(p.seed, "land|" + key, n_q, answer_key);
}

std::vector<TrialRecord> simulate_run(const BehaviorParams& p, int n_questions, int n_q,
                                      const std::vector<Condition>& conditions) {
    validate_params(p);
    if (n_questions < 1) throw RangeError("n_questions must be positive");
    if (n_q < 2 || n_q > 26) throw RangeError("n_q must be in 2..26");
    if (conditions.empty()) throw RangeError("at least one nudge condition is required");
    std::vector<std::string> names;
    names.reserve(conditions.size());
    for (const auto& c : conditions) {
        if (c.nudge == NudgeKind::Vanilla) {
            throw RangeError("conditions must be nudged; the vanilla pass is implicit");
        }
        validate_condition(c);
        names.push_back(c.name());
    }

    const std::size_t per_question = 1 + conditions.size() * static_cast<std::size_t>(n_q - 1);
    std::vector<TrialRecord> out(per_question * static_cast<std::size_t>(n_questions));

    // Every record slot and every random draw is a pure function of the
    // question index, so the loop parallelizes without changing one byte.
#pragma omp parallel for schedule(static) if (n_questions > 64)
    for (long long i = 0; i < n_questions; ++i) {
        const std::string qid = synth_qid(i);
        const char answer_key = static_cast<char>('A' + (i % n_q));
        const char vanilla = behave_vanilla(p, qid, answer_key, n_q);

        std::size_t slot = static_cast<std::size_t>(i) * per_question;
        TrialRecord& v = out[slot++];
        v.question_id = qid;
        v.n_q = n_q;
        v.answer_key = answer_key;
        v.is_vanilla = true;
        v.choice = vanilla;

        for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
            for (char x = 'A'; x < static_cast<char>('A' + n_q); ++x) {
                if (x == answer_key) continue;
                TrialRecord& t = out[slot++];
                t.question_id = qid;
                t.n_q = n_q;
                t.answer_key = answer_key;
                t.is_vanilla = false;
                t.condition = conditions[ci];
                t.suggested = x;
                t.vanilla_choice = vanilla;
                t.choice = behave_perturbed(p, qid, answer_key, vanilla, x, n_q, names[ci]);
            }
        }
    }
    return out;
}

SynthExpectation analytic_expectation(const BehaviorParams& p, int n_q) {
    validate_params(p);
    if (n_q < 3) {
        throw RangeError("analytic expectations need n_q >= 3; with two options the erratic "
                         "event does not exist");
    }
    const double f = p.f_move;
    const double s = p.sigma;
    SynthExpectation e;
    if (p.landing == LandingConvention::ExcludeSuggested) {
        e.s_r = f * s;
        e.c_true = f == 0.0 ? 0.0
                            : static_cast<double>(n_q - 1) / static_cast<double>(n_q - 2) *
                                  (1.0 - s);
    } else {
        e.s_r = f * (s + (1.0 - s) / static_cast<double>(n_q - 1));
        e.c_true = f == 0.0 ? 0.0 : 1.0 - s;
    }
    e.s_a = std::max(0.0, e.s_r - e.c_true / static_cast<double>(n_q - 1));
    return e;
}

}  // namespace syco
