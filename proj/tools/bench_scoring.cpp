// Times the serial aggregation pass against the OpenMP-sharded one on a
// synthetic trial log and checks that they produce identical summaries.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "syco/metrics.hpp"
#include "syco/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double best_ms(int repeats, const std::function<void()>& fn) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = Clock::now();
        fn();
        const auto t1 = Clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

std::string dump_summaries(const syco::Accumulator& acc) {
    std::string out;
    for (const auto& s : syco::summarize(acc, "bench", "bench")) {
        out += syco::summary_to_json(s).dump();
        out += '\n';
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aggregation benchmark: serial reference vs OpenMP shards"};
    int questions = 20000;
    int n_q = 4;
    int repeats = 5;
    double sigma = 0.6;
    double f_move = 0.4;
    app.add_option("--questions", questions, "questions to simulate");
    app.add_option("--nq", n_q, "choices per question");
    app.add_option("--repeats", repeats, "timed repetitions (best run reported)");
    CLI11_PARSE(app, argc, argv);

    syco::BehaviorParams p;
    p.p_correct = 0.8;
    p.f_move = f_move;
    p.sigma = sigma;
    p.seed = 7;
    const std::vector<syco::Condition> conds = {
        {syco::NudgeKind::Basic, syco::RolePlacement::UserIntegrated},
        {syco::NudgeKind::Expert, syco::RolePlacement::UserIntegrated}};
    const auto trials = syco::simulate_run(p, questions, n_q, conds);
    std::cout << "aggregation benchmark: " << questions << " question(s), n_q=" << n_q << ", "
              << conds.size() << " condition(s) -> " << trials.size() << " record(s)\n";

    syco::Accumulator serial_acc;
    syco::Accumulator parallel_acc;
    const double serial = best_ms(repeats, [&] { serial_acc = syco::aggregate_serial(trials); });
    const double parallel =
        best_ms(repeats, [&] { parallel_acc = syco::aggregate_parallel(trials); });

    const double n = static_cast<double>(trials.size());
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("  serial:   best of %d, %8.2f ms  (%6.2f M records/s)\n", repeats, serial,
                n / serial / 1e3);
    std::printf("  parallel: best of %d, %8.2f ms  (%6.2f M records/s), %d thread(s), %.2fx\n",
                repeats, parallel, n / parallel / 1e3, threads, serial / parallel);

    if (dump_summaries(serial_acc) != dump_summaries(parallel_acc)) {
        std::cerr << "MISMATCH: serial and parallel summaries differ\n";
        return 1;
    }
    std::cout << "  summaries identical across both paths\n";
    return 0;
}
