#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "syco/digest.hpp"
#include "syco/jsonl.hpp"

using namespace syco;

namespace {

const std::string kBin = SYCOBENCH_BIN;

std::string q(const std::string& s) { return "'" + s + "'"; }

testutil::CmdResult run_cli(const std::string& args) { return testutil::run_cmd(kBin + " " + args); }

void write_dataset(const std::filesystem::path& path, int n = 10) {
    std::ofstream out(path);
    for (int i = 0; i < n; ++i) {
        json rec;
        rec["id"] = "q" + std::to_string(i);
        rec["question"] = "Which option is number " + std::to_string(i % 4 + 1) + "?";
        rec["choices"] = {{"A", "first"}, {"B", "second"}, {"C", "third"}, {"D", "fourth"}};
        rec["answer"] = std::string(1, static_cast<char>('A' + i % 4));
        out << rec.dump() << "\n";
    }
}

std::filesystem::path write_config(const std::filesystem::path& dir) {
    json cfg;
    cfg["datasets"] = json::array({json{{"name", "tiny"}, {"path", "tiny.jsonl"}}});
    cfg["providers"] = json::array({json{{"name", "synth"},
                                         {"kind", "synthetic"},
                                         {"model", "synthetic-demo"},
                                         {"behavior",
                                          {{"p_correct", 0.8},
                                           {"f_move", 0.5},
                                           {"sigma", 0.7},
                                           {"seed", 11}}}}});
    cfg["conditions"] = {"basic", "expert"};
    cfg["cache_dir"] = "cache";
    cfg["output_dir"] = "out";
    cfg["parallelism"] = 2;
    const auto path = dir / "run-config.json";
    std::ofstream(path) << cfg.dump(2) << "\n";
    return path;
}

}  // namespace

TEST_CASE("help and argument errors") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("--help").output.find("simulate") != std::string::npos);
    CHECK(run_cli("").exit_code == 1);                   // a subcommand is required
    CHECK(run_cli("frobnicate").exit_code == 1);         // unknown subcommand
    CHECK(run_cli("plan").exit_code == 1);               // --config is required
    CHECK(run_cli("validate --config /nonexistent.json").exit_code != 0);
}

TEST_CASE("the full pipeline runs, is idempotent, and its outputs are stable") {
    testutil::ScratchDir tmp;
    write_dataset(tmp.path / "tiny.jsonl");
    const auto cfg = write_config(tmp.path);
    const std::string c = " --config " + q(cfg.string());

    auto v = run_cli("validate" + c);
    CAPTURE(v.output);
    CHECK(v.exit_code == 0);
    CHECK(v.output.find("configuration OK: 1 dataset(s), 1 provider(s), 2 condition(s)") !=
          std::string::npos);

    auto p = run_cli("plan" + c);
    CAPTURE(p.output);
    CHECK(p.exit_code == 0);
    REQUIRE(std::filesystem::exists(tmp.path / "out" / "tiny" / "cases.jsonl"));
    // 10 vanilla + 2 conditions x 10 questions x 3 nudges
    CHECK(p.output.find("70 case(s)") != std::string::npos);

    auto r = run_cli("run" + c);
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    const auto archive = tmp.path / "out" / "tiny" / "synth" / "archive";
    REQUIRE(std::filesystem::exists(archive / "run.json"));
    CHECK(json::parse(read_file(archive / "run.json"))["counts"]["failures"] == 0);

    auto s = run_cli("score" + c);
    CAPTURE(s.output);
    CHECK(s.exit_code == 0);
    const auto summary_path = tmp.path / "out" / "tiny" / "synth" / "summary.json";
    REQUIRE(std::filesystem::exists(summary_path));
    REQUIRE(std::filesystem::exists(tmp.path / "out" / "tiny" / "synth" / "trials.jsonl"));
    json summaries = json::parse(read_file(summary_path));
    CHECK(summaries["record"] == "summary_set");
    CHECK(summaries["summaries"].size() == 2);  // basic and expert at n_q=4

    auto rep = run_cli("report" + c);
    CAPTURE(rep.output);
    CHECK(rep.exit_code == 0);
    const auto report_dir = tmp.path / "out" / "report";
    for (const char* f : {"report.json", "report.csv", "report.md"}) {
        CHECK(std::filesystem::exists(report_dir / f));
    }
    CHECK(std::filesystem::exists(report_dir / "charts" / "tiny.svg"));

    SUBCASE("second pass is a no-op and changes no bytes") {
        const std::string sum_sha = sha256_file(summary_path.string());
        const std::string trials_sha =
            sha256_file((tmp.path / "out" / "tiny" / "synth" / "trials.jsonl").string());
        const std::string csv_sha = sha256_file((report_dir / "report.csv").string());
        const std::string run_sha = sha256_file((archive / "run.json").string());

        for (const char* stage : {"plan", "run", "score", "report"}) {
            auto again = run_cli(std::string(stage) + c);
            CAPTURE(again.output);
            CHECK(again.exit_code == 0);
            CHECK(again.output.find("up to date") != std::string::npos);
        }
        CHECK(sha256_file(summary_path.string()) == sum_sha);
        CHECK(sha256_file((report_dir / "report.csv").string()) == csv_sha);
        CHECK(sha256_file((archive / "run.json").string()) == run_sha);

        SUBCASE("scoring again after losing its stamp rewrites identical bytes") {
            std::filesystem::remove(tmp.path / "out" / "tiny" / "synth" / "score.stamp.json");
            auto rescored = run_cli("score" + c);
            CHECK(rescored.exit_code == 0);
            CHECK(rescored.output.find("up to date") == std::string::npos);
            CHECK(sha256_file(summary_path.string()) == sum_sha);
            CHECK(sha256_file((tmp.path / "out" / "tiny" / "synth" / "trials.jsonl").string()) ==
                  trials_sha);
        }
    }

    SUBCASE("unknown provider or condition filters fail loudly") {
        CHECK(run_cli("run" + c + " --provider nope").exit_code == 1);
        CHECK(run_cli("plan" + c + " --condition sideways").exit_code == 1);
    }
}

TEST_CASE("stages refuse to run out of order") {
    testutil::ScratchDir tmp;
    write_dataset(tmp.path / "tiny.jsonl");
    const auto cfg = write_config(tmp.path);
    const std::string c = " --config " + q(cfg.string());

    auto r = run_cli("run" + c);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("plan") != std::string::npos);  // tells the user what to do

    auto s = run_cli("score" + c);
    CHECK(s.exit_code == 1);

    auto rep = run_cli("report" + c);
    CHECK(rep.exit_code == 1);
    CHECK(rep.output.find("score") != std::string::npos);
}

TEST_CASE("validate reports every defect with its location") {
    testutil::ScratchDir tmp;
    json bad;
    bad["datasets"] = json::array({json{{"name", "d"}, {"path", "missing.jsonl"}}});
    bad["providers"] = json::array({json{{"name", "p"}, {"kind", "http"}, {"model", "m"},
                                         {"endpoint", "not-a-url"}}});
    bad["parallelism"] = 0;
    const auto path = tmp.path / "bad.json";
    std::ofstream(path) << bad.dump();

    auto v = run_cli("validate --config " + q(path.string()));
    CAPTURE(v.output);
    CHECK(v.exit_code == 1);
    CHECK(v.output.find("error: /providers/0") != std::string::npos);
    CHECK(v.output.find("error: /parallelism") != std::string::npos);
    CHECK(v.output.find("problem(s) found") != std::string::npos);
}

TEST_CASE("import converts a foreign dump and is idempotent") {
    testutil::ScratchDir tmp;
    {
        std::ofstream src(tmp.path / "raw.jsonl");
        src << json{{"question", "Pick b."},
                    {"options", {{"A", "a"}, {"B", "b"}, {"C", "c"}, {"D", "d"}}},
                    {"answer_idx", "B"},
                    {"meta_info", "step1"}}
                   .dump()
            << "\n";
    }
    const auto dst = tmp.path / "imported.jsonl";
    auto first = run_cli("import " + q((tmp.path / "raw.jsonl").string()) + " " + q(dst.string()) +
                         " --name med");
    CAPTURE(first.output);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("1 question(s)") != std::string::npos);
    REQUIRE(std::filesystem::exists(dst));
    const std::string sha = sha256_file(dst.string());

    auto second = run_cli("import " + q((tmp.path / "raw.jsonl").string()) + " " + q(dst.string()) +
                          " --name med");
    CHECK(second.exit_code == 0);
    CHECK(second.output.find("up to date") != std::string::npos);
    CHECK(sha256_file(dst.string()) == sha);

    CHECK(run_cli("import /nonexistent.jsonl " + q((tmp.path / "x.jsonl").string()) +
                  " --name x")
              .exit_code == 1);
}

TEST_CASE("simulate writes a scored trial log with analytic expectations") {
    testutil::ScratchDir tmp;
    const std::string out = q((tmp.path / "sim").string());
    auto r = run_cli("simulate --p-correct 1 --f-move 0.5 --sigma 0.6 --seed 3 --questions 300"
                     " --nq 4 --out " +
                     out);
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    REQUIRE(std::filesystem::exists(tmp.path / "sim" / "expectation.json"));
    REQUIRE(std::filesystem::exists(tmp.path / "sim" / "trials.jsonl"));
    REQUIRE(std::filesystem::exists(tmp.path / "sim" / "summary.json"));

    json e = json::parse(read_file(tmp.path / "sim" / "expectation.json"));
    CHECK(e["record"] == "expectation");
    CHECK(e["analytic"].contains("exclude-suggested"));
    CHECK(e["analytic"].contains("include-suggested"));
    REQUIRE(e["measured"].size() == 1);
    // S_r should land near f*sigma = 0.3 for the default landing convention
    const double s_r = e["measured"][0]["s_r"].get<double>();
    CHECK(s_r > 0.3 - 0.1);
    CHECK(s_r < 0.3 + 0.1);

    auto again = run_cli("simulate --p-correct 1 --f-move 0.5 --sigma 0.6 --seed 3"
                         " --questions 300 --nq 4 --out " +
                         out);
    CHECK(again.exit_code == 0);
    CHECK(again.output.find("up to date") != std::string::npos);

    CHECK(run_cli("simulate --sigma 3 --out " + out).exit_code == 2);  // out-of-range parameter
}
