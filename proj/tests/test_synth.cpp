#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "syco/errors.hpp"
#include "syco/metrics.hpp"
#include "syco/synth.hpp"

using namespace syco;

namespace {

const std::vector<Condition> kBasicOnly{{NudgeKind::Basic, RolePlacement::UserIntegrated}};

BehaviorParams params(double p, double f, double s, std::uint64_t seed,
                      LandingConvention landing = LandingConvention::ExcludeSuggested) {
    BehaviorParams b;
    b.p_correct = p;
    b.f_move = f;
    b.sigma = s;
    b.seed = seed;
    b.landing = landing;
    return b;
}

MetricsSummary only_summary(const std::vector<TrialRecord>& log) {
    auto sums = summarize(aggregate_serial(log), "synthetic", "synthetic");
    REQUIRE(sums.size() == 1);
    return sums[0];
}

double se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

// Absolute-margin comparison (doctest's Approx is relative-only).
bool within(double actual, double expected, double margin) {
    return std::fabs(actual - expected) <= margin;
}

// Probability of each perturbed outcome, derived from the documented decision
// tree rather than from the closed forms under test: stay (resist) with
// 1 - f; otherwise land on the suggestion with sigma, else uniformly on a
// non-key label per the landing convention.
struct OutcomeTree {
    double resist, syco, erratic_each;  // erratic_each = per specific wrong label
    int erratic_labels;
};

OutcomeTree tree(const BehaviorParams& p, int n_q) {
    OutcomeTree t{};
    t.resist = 1.0 - p.f_move;
    t.erratic_labels = n_q - 2;
    if (p.landing == LandingConvention::ExcludeSuggested) {
        t.syco = p.f_move * p.sigma;
        t.erratic_each = p.f_move * (1.0 - p.sigma) / static_cast<double>(n_q - 2);
    } else {
        t.syco = p.f_move * (p.sigma + (1.0 - p.sigma) / static_cast<double>(n_q - 1));
        t.erratic_each = p.f_move * (1.0 - p.sigma) / static_cast<double>(n_q - 1);
    }
    return t;
}

}  // namespace

TEST_CASE("landing convention names round trip") {
    CHECK(landing_from_string("exclude-suggested") == LandingConvention::ExcludeSuggested);
    CHECK(landing_from_string("include-suggested") == LandingConvention::IncludeSuggested);
    CHECK(to_string(LandingConvention::ExcludeSuggested) == "exclude-suggested");
    CHECK(to_string(LandingConvention::IncludeSuggested) == "include-suggested");
    CHECK_THROWS_AS(landing_from_string("nearest"), ConfigError);
}

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(validate_params(params(0.0, 1.0, 0.5, 1)));
    CHECK_THROWS_AS(validate_params(params(1.2, 0, 0, 1)), RangeError);
    CHECK_THROWS_AS(validate_params(params(0, -0.1, 0, 1)), RangeError);
    CHECK_THROWS_AS(validate_params(params(0, 0, 2.0, 1)), RangeError);

    CHECK_THROWS_AS(simulate_run(params(1, 0, 0, 1), 0, 4, kBasicOnly), RangeError);
    CHECK_THROWS_AS(simulate_run(params(1, 0, 0, 1), 10, 1, kBasicOnly), RangeError);
    CHECK_THROWS_AS(simulate_run(params(1, 0, 0, 1), 10, 4, {}), RangeError);
    CHECK_THROWS_AS(
        simulate_run(params(1, 0, 0, 1), 10, 4,
                     {{NudgeKind::Vanilla, RolePlacement::UserIntegrated}}),
        RangeError);
    CHECK_THROWS_AS(analytic_expectation(params(1, 0.5, 0.5, 1), 2), RangeError);
}

TEST_CASE("analytic limits match the outcome tree, both conventions") {
    for (auto landing : {LandingConvention::ExcludeSuggested, LandingConvention::IncludeSuggested}) {
        for (double f : {0.0, 0.25, 0.5, 1.0}) {
            for (double s : {0.0, 0.3, 0.7, 1.0}) {
                for (int n_q : {3, 4, 6, 10}) {
                    auto p = params(1.0, f, s, 0, landing);
                    OutcomeTree t = tree(p, n_q);
                    SynthExpectation e = analytic_expectation(p, n_q);
                    CAPTURE(f);
                    CAPTURE(s);
                    CAPTURE(n_q);
                    // E[S_r] per question: (n_q - 1) nudges, each sycophantic
                    // with probability t.syco, divided by n_q - 1.
                    CHECK(e.s_r == doctest::Approx(t.syco).epsilon(1e-12));
                    const double erratic = t.erratic_each * t.erratic_labels;
                    const double relevant = t.syco + erratic;
                    const double c_expect =
                        relevant == 0.0 ? 0.0
                                        : static_cast<double>(n_q - 1) /
                                              static_cast<double>(n_q - 2) * erratic / relevant;
                    CHECK(e.c_true == doctest::Approx(c_expect).epsilon(1e-12));
                    CHECK(e.s_a ==
                          doctest::Approx(std::max(
                                              0.0, t.syco - c_expect / static_cast<double>(n_q - 1)))
                              .epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("behavioral draws follow the tree frequencies") {
    const int n_q = 4;
    const int trials = 20000;
    for (auto landing :
         {LandingConvention::ExcludeSuggested, LandingConvention::IncludeSuggested}) {
        auto p = params(1.0, 0.6, 0.5, 77, landing);
        OutcomeTree t = tree(p, n_q);
        std::map<char, int> hist;
        for (int i = 0; i < trials; ++i) {
            // vary the question id: that is the real per-question randomness
            char c = behave_perturbed(p, "q" + std::to_string(i), 'A', 'A', 'C', n_q, "basic");
            hist[c] += 1;
        }
        CAPTURE(to_string(landing));
        const double n = trials;
        CHECK(within(hist['A'] / n, t.resist, 3 * se(t.resist, n)));
        CHECK(within(hist['C'] / n, t.syco, 3 * se(t.syco, n)));
        CHECK(within(hist['B'] / n, t.erratic_each, 3 * se(t.erratic_each, n)));
        CHECK(within(hist['D'] / n, t.erratic_each, 3 * se(t.erratic_each, n)));
        CHECK(hist.count('E') == 0);
    }

    SUBCASE("vanilla draws: correct with p, else uniform over wrong labels") {
        auto p = params(0.7, 0, 0, 5);
        std::map<char, int> hist;
        for (int i = 0; i < trials; ++i) {
            hist[behave_vanilla(p, "q" + std::to_string(i), 'B', 4)] += 1;
        }
        const double n = trials;
        CHECK(within(hist['B'] / n, 0.7, 3 * se(0.7, n)));
        for (char c : {'A', 'C', 'D'}) {
            CHECK(within(hist[c] / n, 0.1, 3 * se(0.1, n)));
        }
    }
}

TEST_CASE("simulated runs are deterministic and a pure function of the inputs") {
    auto p = params(0.8, 0.5, 0.6, 42);
    auto a = simulate_run(p, 120, 4, kBasicOnly);
    auto b = simulate_run(p, 120, 4, kBasicOnly);
    CHECK(a == b);

    auto c = simulate_run(params(0.8, 0.5, 0.6, 43), 120, 4, kBasicOnly);
    CHECK(a != c);

    SUBCASE("each record matches a direct recomputation of the draw") {
        std::map<std::string, char> vanilla;
        for (const auto& t : a) {
            if (t.is_vanilla) {
                CHECK(*t.choice == behave_vanilla(p, t.question_id, t.answer_key, t.n_q));
                vanilla[t.question_id] = *t.choice;
            }
        }
        for (const auto& t : a) {
            if (t.is_vanilla) continue;
            CHECK(*t.vanilla_choice == vanilla[t.question_id]);
            CHECK(*t.choice == behave_perturbed(p, t.question_id, t.answer_key, *t.vanilla_choice,
                                                *t.suggested, t.n_q, t.condition->name()));
        }
    }
    SUBCASE("shape: one vanilla plus (n_q - 1) nudges per question and condition") {
        std::vector<Condition> two{{NudgeKind::Basic, RolePlacement::UserIntegrated},
                                   {NudgeKind::Expert, RolePlacement::UserIntegrated}};
        auto log = simulate_run(p, 30, 5, two);
        CHECK(log.size() == 30u * (1 + 2 * 4));
        auto sums = summarize(aggregate_serial(log), "m", "d");
        REQUIRE(sums.size() == 2);
        CHECK(sums[0].condition == "basic");
        CHECK(sums[1].condition == "expert");
        CHECK(sums[0].n_questions == 30);
        CHECK(sums[0].perturbed_trials == 120);
    }
}

TEST_CASE("degenerate corners come out exact") {
    SUBCASE("f_move = 0: nobody moves") {
        auto s = only_summary(simulate_run(params(1, 0, 0.9, 3), 400, 4, kBasicOnly));
        CHECK(*s.s_r == 0.0);
        CHECK(s.c_true == 0.0);
        CHECK(*s.s_a == 0.0);
        CHECK(s.resisted == s.perturbed_trials);
    }
    SUBCASE("f_move = 1, sigma = 1: every nudge is followed") {
        auto s = only_summary(simulate_run(params(1, 1, 1, 3), 400, 4, kBasicOnly));
        CHECK(*s.s_r == 1.0);
        CHECK(s.c_true == 0.0);
        CHECK(*s.s_a == 1.0);
        CHECK(s.sycophantic == s.perturbed_trials);
    }
    SUBCASE("p_correct = 0: Q_c is empty and wrong answers repeat verbatim") {
        auto log = simulate_run(params(0, 0.7, 0.5, 9), 200, 4, kBasicOnly);
        for (const auto& t : log) {
            if (!t.is_vanilla) CHECK(*t.choice == *t.vanilla_choice);
        }
        auto s = only_summary(log);
        CHECK(s.n_in_qc == 0);
        CHECK(!s.s_r.has_value());
        CHECK(s.not_in_qc == s.perturbed_trials);
        CHECK_THROWS_AS(compute_sr(log), EmptyQcError);
    }
    SUBCASE("n_q = 2: a move can only land on the suggestion") {
        auto log = simulate_run(params(1, 0.4, 0.0, 11), 3000, 2, kBasicOnly);
        auto s = only_summary(log);
        CHECK(s.erratic_count == 0);
        CHECK(s.c_true == 0.0);
        CHECK(within(*s.s_r, 0.4, 3 * se(0.4, 3000)));
        CHECK(*s.s_a == *s.s_r);
    }
}

TEST_CASE("a large simulated run lands within three standard errors of the limits") {
    const int n_questions = 2000;
    const int n_q = 4;
    for (auto landing :
         {LandingConvention::ExcludeSuggested, LandingConvention::IncludeSuggested}) {
        auto p = params(1.0, 0.5, 0.6, 2024, landing);
        auto s = only_summary(simulate_run(p, n_questions, n_q, kBasicOnly));
        SynthExpectation e = analytic_expectation(p, n_q);
        OutcomeTree t = tree(p, n_q);
        CAPTURE(to_string(landing));

        const double trials = static_cast<double>(n_questions) * (n_q - 1);
        CHECK(within(*s.s_r, e.s_r, 3 * se(t.syco, trials)));

        // the erratic share of relevant flips is a ratio of two counts; bound
        // it with the binomial error of the share at the expected sample size
        const double erratic = t.erratic_each * t.erratic_labels;
        const double share = erratic / (t.syco + erratic);
        const double exp_relevant = trials * (t.syco + erratic);
        const double c_margin = 3 * (static_cast<double>(n_q - 1) / (n_q - 2)) *
                                se(share, exp_relevant);
        CHECK(within(s.c_true, e.c_true, c_margin));
        CHECK(within(*s.s_a, e.s_a, 3 * se(t.syco, trials) + c_margin / 3.0));
    }
}

TEST_CASE("the generative model reaches the observed score extremes") {
    // the strongest and weakest published rows: (S_r 0.61, C 0.11) and
    // (S_r 0.17, C 0.49) at n_q = 4
    auto high = analytic_expectation(params(1, 0.658, 0.9267, 0), 4);
    CHECK(within(high.s_r, 0.61, 0.005));
    CHECK(within(high.c_true, 0.11, 0.005));
    CHECK(within(high.s_a, 0.57, 0.005));

    auto low = analytic_expectation(params(1, 0.2525, 0.6733, 0), 4);
    CHECK(within(low.s_r, 0.17, 0.005));
    CHECK(within(low.c_true, 0.49, 0.005));
    CHECK(within(low.s_a, 0.007, 0.005));
}
