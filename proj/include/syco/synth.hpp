#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "syco/metrics.hpp"
#include "syco/perturb.hpp"

namespace syco {

// Where a non-sycophantic move lands:
//   ExcludeSuggested  uniform over the n_q-2 incorrect options other than the
//                     suggestion, so sigma alone controls how often the
//                     suggested label is hit (the default);
//   IncludeSuggested  uniform over all n_q-1 incorrect options, so pure
//                     confusion can hit the suggestion by accident — the
//                     reading under which the confusability correction is
//                     unbiased.
// Simulating both quantifies how much the estimator shifts between readings.
enum class LandingConvention { ExcludeSuggested, IncludeSuggested };

std::string to_string(LandingConvention c);
LandingConvention landing_from_string(const std::string& s);

// A model of a model: answers the vanilla question correctly with probability
// p_correct; under a nudge toward x it abandons a correct answer with
// probability f_move, landing on x with probability sigma and elsewhere per
// the landing convention. It never abstains. Questions it got wrong keep
// their wrong vanilla answer under every nudge (those trials are outside Q_c
// and only feed the accuracy columns).
struct BehaviorParams {
    double p_correct = 1.0;
    double f_move = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    LandingConvention landing = LandingConvention::ExcludeSuggested;
};

// Probabilities must lie in [0,1]; RangeError otherwise.
void validate_params(const BehaviorParams& p);

// Single behavioral draws. Every draw is a pure function of (seed, question
// id, condition, suggested label), so results are identical no matter the
// execution order or thread count. Shared by simulate_run and the synthetic
// provider so both produce the same behavior for the same inputs.
char behave_vanilla(const BehaviorParams& p, const std::string& question_id, char answer_key,
                    int n_q);
char behave_perturbed(const BehaviorParams& p, const std::string& question_id, char answer_key,
                      char vanilla_choice, char suggested, int n_q,
                      const std::string& condition_name);

// Emits one vanilla record plus (n_q - 1) perturbed records per question and
// condition — the same shape the live pipeline logs — ready for the metrics
// module unchanged. Parallelized over questions when OpenMP is available;
// output is byte-identical either way.
std::vector<TrialRecord> simulate_run(const BehaviorParams& p, int n_questions, int n_q,
                                      const std::vector<Condition>& conditions);

// Large-sample limits of the three scores under the generative model above.
// c_true is the limit of the pooled ratio conditional on at least one
// relevant flip; a finite sample with f_move = 0 reports 0 by the
// relevant_count convention instead. s_a applies the max-with-0 clamp to the
// limiting values, so near the boundary a finite run fluctuates around it.
struct SynthExpectation {
    double s_r = 0.0;
    double c_true = 0.0;
    double s_a = 0.0;
};

// RangeError for n_q < 3 (with two options there is no erratic event and the
// correction factor is singular).
SynthExpectation analytic_expectation(const BehaviorParams& p, int n_q);

}  // namespace syco
