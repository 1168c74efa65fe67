#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "syco/corpus.hpp"
#include "syco/errors.hpp"
#include "syco/jsonl.hpp"

using namespace syco;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p);
    for (const auto& l : lines) out << l << "\n";
}

Question make_q(const std::string& id, int n, char key, const std::string& subject = "") {
    Question q;
    q.id = id;
    q.stem = "stem for " + id;
    for (int i = 0; i < n; ++i) {
        q.choices.push_back({static_cast<char>('A' + i), "option " + std::to_string(i)});
    }
    q.answer_key = key;
    q.subject = subject;
    q.dataset = "t";
    return q;
}

}  // namespace

TEST_CASE("question invariants") {
    Question q = make_q("q1", 4, 'C');
    CHECK_NOTHROW(validate_question(q));
    CHECK(q.labels() == "ABCD");
    CHECK(q.choice_count() == 4);
    CHECK(q.choice_text('B') == "option 1");
    CHECK_THROWS_AS(q.choice_text('E'), RangeError);

    SUBCASE("gold answer must be a choice") {
        q.answer_key = 'E';
        CHECK_THROWS_AS(validate_question(q), ValidationError);
    }
    SUBCASE("at least two choices") {
        q.choices.resize(1);
        q.answer_key = 'A';
        CHECK_THROWS_AS(validate_question(q), ValidationError);
    }
    SUBCASE("labels are a contiguous prefix in order") {
        q.choices[1].label = 'C';
        CHECK_THROWS_AS(validate_question(q), ValidationError);
    }
    SUBCASE("empty choice text") {
        q.choices[2].text.clear();
        CHECK_THROWS_AS(validate_question(q), ValidationError);
    }
    SUBCASE("empty stem") {
        q.stem.clear();
        CHECK_THROWS_AS(validate_question(q), ValidationError);
    }
}

TEST_CASE("loading the canonical line format") {
    testutil::ScratchDir tmp;
    const auto path = tmp.path / "ds.jsonl";
    write_lines(path,
                {R"({"id":"a","question":"Q1?","choices":{"A":"x","B":"y"},"answer":"b"})",
                 R"({"id":"b","question":"Q2?","choices":["u","v","w"],"answer":"A","subject":"phys"})"});
    Dataset ds = load_dataset(path, "demo");
    REQUIRE(ds.questions.size() == 2);
    CHECK(ds.name == "demo");
    CHECK(ds.questions[0].answer_key == 'B');  // lowercase answer normalized
    CHECK(ds.questions[0].dataset == "demo");
    CHECK(ds.questions[1].labels() == "ABC");  // list choices labeled in order
    CHECK(ds.questions[1].subject == "phys");

    SUBCASE("duplicate ids rejected") {
        write_lines(path,
                    {R"({"id":"a","question":"Q1?","choices":{"A":"x","B":"y"},"answer":"A"})",
                     R"({"id":"a","question":"Q2?","choices":{"A":"x","B":"y"},"answer":"B"})"});
        CHECK_THROWS_AS(load_dataset(path, "demo"), ValidationError);
    }
    SUBCASE("declared choice count enforced") {
        CHECK_THROWS_AS(load_dataset(path, "demo", false, nullptr, 4), ValidationError);
        Dataset three = load_dataset(path, "demo", false, nullptr, std::nullopt);
        CHECK(three.questions.size() == 2);
    }
    SUBCASE("permissive mode skips bad records and reports them") {
        write_lines(path,
                    {R"({"id":"ok","question":"Q?","choices":{"A":"x","B":"y"},"answer":"A"})",
                     R"({"id":"bad","question":"Q?","choices":{"A":"x","B":"y"},"answer":"E"})",
                     R"({"id":"ok2","question":"Q?","choices":{"A":"x","B":"y"},"answer":"B"})"});
        std::vector<std::string> skipped;
        Dataset ds2 = load_dataset(path, "demo", true, &skipped);
        CHECK(ds2.questions.size() == 2);
        REQUIRE(skipped.size() == 1);
        CHECK(skipped[0].find("line 2") != std::string::npos);
        // strict mode raises instead
        CHECK_THROWS_AS(load_dataset(path, "demo"), ValidationError);
    }
    SUBCASE("malformed JSON aborts even in permissive mode") {
        write_lines(path, {R"({"id":"a")"});
        CHECK_THROWS_AS(load_dataset(path, "demo", true), ParseError);
    }
}

TEST_CASE("json round trip preserves every field") {
    Question q = make_q("rt", 5, 'D', "chem");
    Question back = question_from_json(question_to_json(q), "t");
    CHECK(back == q);
}

TEST_CASE("save and reload round trip") {
    testutil::ScratchDir tmp;
    Dataset ds;
    ds.name = "demo";
    ds.questions = {make_q("a", 4, 'A', "s1"), make_q("b", 4, 'C', "s2")};
    for (auto& q : ds.questions) q.dataset = "demo";
    const auto path = tmp.path / "saved.jsonl";
    save_dataset(ds, path);
    Dataset back = load_dataset(path, "demo");
    CHECK(back.questions == ds.questions);
}

TEST_CASE("subject filter") {
    Dataset ds;
    ds.name = "demo";
    ds.questions = {make_q("a", 4, 'A', "math"), make_q("b", 4, 'B', "bio"),
                    make_q("c", 4, 'C', "math")};
    Dataset math = filter_subject(ds, "math");
    REQUIRE(math.questions.size() == 2);
    CHECK(math.questions[0].id == "a");
    CHECK(math.questions[1].id == "c");
    CHECK(filter_subject(ds, "absent").questions.empty());
}

TEST_CASE("deterministic subset") {
    Dataset ds;
    ds.name = "demo";
    for (int i = 0; i < 30; ++i) {
        ds.questions.push_back(make_q("q" + std::to_string(100 + i), 4, 'A'));
    }
    Dataset s1 = subset(ds, 10, 7);
    Dataset s2 = subset(ds, 10, 7);
    CHECK(s1.questions == s2.questions);
    CHECK(s1.questions.size() == 10);

    // original order preserved
    for (std::size_t i = 1; i < s1.questions.size(); ++i) {
        CHECK(s1.questions[i - 1].id < s1.questions[i].id);
    }
    Dataset s3 = subset(ds, 10, 8);
    CHECK(s3.questions != s1.questions);  // different seed, different sample

    CHECK(subset(ds, 30, 1).questions == ds.questions);  // k == n keeps everything
    CHECK(subset(ds, 0, 1).questions.empty());
    CHECK_THROWS_AS(subset(ds, 31, 1), RangeError);
}

TEST_CASE("import of common benchmark export shapes") {
    testutil::ScratchDir tmp;
    const auto src = tmp.path / "src.jsonl";
    const auto dst = tmp.path / "dst.jsonl";

    SUBCASE("options object with answer_idx and meta_info") {
        write_lines(src, {R"({"question":"Q?","options":{"A":"x","B":"y","C":"z","D":"w"},"answer_idx":"C","meta_info":"step1"})"});
        CHECK(import_dataset(src, dst, "med") == 1);
        Dataset ds = load_dataset(dst, "med");
        REQUIRE(ds.questions.size() == 1);
        CHECK(ds.questions[0].id == "med-000001");
        CHECK(ds.questions[0].answer_key == 'C');
        CHECK(ds.questions[0].subject == "step1");
    }
    SUBCASE("options list with answer_index and category") {
        write_lines(src, {R"({"question_id":17,"question":"Q?","options":["a","b","c"],"answer_index":1,"category":"health"})"});
        CHECK(import_dataset(src, dst, "pro") == 1);
        Dataset ds = load_dataset(dst, "pro");
        REQUIRE(ds.questions.size() == 1);
        CHECK(ds.questions[0].id == "pro-17");
        CHECK(ds.questions[0].answer_key == 'B');
        CHECK(ds.questions[0].subject == "health");
        CHECK(ds.questions[0].labels() == "ABC");
    }
    SUBCASE("already canonical records pass through") {
        write_lines(src, {R"({"id":"k1","question":"Q?","choices":{"A":"x","B":"y"},"answer":"A"})"});
        CHECK(import_dataset(src, dst, "canon") == 1);
        Dataset ds = load_dataset(dst, "canon");
        CHECK(ds.questions[0].id == "k1");
    }
    SUBCASE("missing gold answer aborts") {
        write_lines(src, {R"({"question":"Q?","options":["a","b"]})"});
        CHECK_THROWS_AS(import_dataset(src, dst, "bad"), ParseError);
    }
}
