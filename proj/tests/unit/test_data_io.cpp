#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>

#include "rubricrank/data_io.hpp"
#include "rubricrank/error.hpp"
#include "support.hpp"

using namespace rubricrank;
using testing::fixture_dir;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

// 1 query, 3 docs, 3 candidates, 1 judgment
void write_minimal(const fs::path& root, const std::string& name, const std::string& extra_candidate = "") {
    const auto dir = root / name;
    write_file(dir / "queries.jsonl", "# q\n{\"query_id\": \"q1\", \"text\": \"why is the sky blue\"}\n");
    write_file(dir / "corpus.jsonl",
               "{\"doc_id\": \"a\", \"text\": \"Rayleigh scattering\"}\n"
               "\n"
               "{\"doc_id\": \"b\", \"text\": \"line one\\nline two\"}\r\n"
               "{\"doc_id\": \"c\", \"text\": \"unrelated \\u00e9t\\u00e9\"}\n");
    write_file(dir / "candidates.run", "q1 Q0 b 2 5.0 bm25\nq1 Q0 a 1 9.5 bm25\nq1 Q0 c 3 1 bm25\n" + extra_candidate);
    write_file(dir / "qrels.txt", "q1 0 a 1\n");
}

}  // namespace

TEST_CASE("minimal dataset loads consistently") {
    TempDir tmp;
    write_minimal(tmp.path(), "biology");
    const auto ds = load_dataset(DatasetPaths::under(tmp.path(), "biology"), RubricConfig::builtin());
    REQUIRE(ds.queries.size() == 1);
    CHECK(ds.query("q1")->text == "why is the sky blue");
    CHECK(ds.query("q2") == nullptr);
    CHECK(ds.corpus.size() == 3);
    CHECK(ds.corpus.text("b") == "line one\nline two");
    CHECK(ds.corpus.text("c") == "unrelated \xc3\xa9t\xc3\xa9");
    REQUIRE(ds.candidates.size() == 1);
    const auto& e = ds.candidates[0].entries;
    REQUIRE(e.size() == 3);
    CHECK(e[0].doc_id == "a");
    CHECK(e[1].doc_id == "b");
    CHECK(e[2].first_stage_score == 1.0);
    CHECK(ds.qrels.relevance("q1", "a") == 1);
    CHECK(ds.rubric.query_type == "biology post");
    CHECK(ds.dangling.total() == 0);
    CHECK(code_of([&] { ds.corpus.text("zzz"); }) == ErrorCode::DanglingReference);
}

TEST_CASE("dangling references") {
    TempDir tmp;
    write_minimal(tmp.path(), "pony", "q1 Q0 ghost 4 0.5 bm25\nq9 Q0 a 1 1 bm25\n");
    try {
        load_dataset(DatasetPaths::under(tmp.path(), "pony"), RubricConfig::builtin(), LoadOptions{true, 100});
        FAIL("expected DanglingReference");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DanglingReference);
        CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
    const auto lenient = load_dataset(DatasetPaths::under(tmp.path(), "pony"), RubricConfig::builtin());
    CHECK(lenient.dangling.candidate_docs == 1);
    CHECK(lenient.dangling.candidate_queries == 1);
    CHECK(lenient.candidates.size() == 1);
    CHECK(lenient.candidates[0].entries.size() == 3);
}

TEST_CASE("unknown dataset names fail before any file is read") {
    TempDir tmp;
    write_minimal(tmp.path(), "gardening");
    CHECK(code_of([&] { load_dataset(DatasetPaths::under(tmp.path(), "gardening"), RubricConfig::builtin()); }) ==
          ErrorCode::UnknownDataset);
}

TEST_CASE("bright-shaped layout resolves every rubric") {
    TempDir tmp;
    const std::vector<std::string> names{"biology", "earth_science", "economics", "psychology",
                                         "robotics", "stackoverflow", "sustainable_living", "leetcode",
                                         "pony", "aops", "theoremqa_questions", "theoremqa_theorems"};
    for (const auto& n : names) write_minimal(tmp.path(), n);
    const auto found = discover_datasets(tmp.path());
    CHECK(found.size() == 12);
    const auto cfg = RubricConfig::builtin();
    for (const auto& n : found) {
        const auto ds = load_dataset(DatasetPaths::under(tmp.path(), n), cfg);
        CHECK(ds.rubric == cfg.at(n));
        CHECK(ds.rubric.relevance_definition.rfind("Given a query (", 0) == 0);
    }
}

TEST_CASE("malformed inputs raise ParseError with a line number") {
    TempDir tmp;
    write_file(tmp / "q.jsonl", "{\"query_id\": \"a\", \"text\": \"x\"}\n{\"query_id\": \"b\"}\n");
    try {
        load_queries(tmp / "q.jsonl");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.code() == ErrorCode::ParseError);
    }
    write_file(tmp / "dup.jsonl", "{\"query_id\": \"a\", \"text\": \"x\"}\n{\"query_id\": \"a\", \"text\": \"y\"}\n");
    CHECK_THROWS_AS(load_queries(tmp / "dup.jsonl"), ParseError);
    write_file(tmp / "bad.jsonl", "{not json\n");
    CHECK_THROWS_AS(load_queries(tmp / "bad.jsonl"), ParseError);
    write_file(tmp / "c.run", "q1 Q0 a 1 9.5\n");
    CHECK_THROWS_AS(load_candidates(tmp / "c.run"), ParseError);
    write_file(tmp / "inc.run", "q1 Q0 a 1 1.0 x\nq1 Q0 b 2 2.0 x\n");
    CHECK_THROWS_AS(load_candidates(tmp / "inc.run"), ParseError);
    write_file(tmp / "qrels.txt", "q1 0 a one\n");
    CHECK_THROWS_AS(load_qrels(tmp / "qrels.txt"), ParseError);
    write_file(tmp / "qrels2.txt", "q1 0 a 1\nq1 0 a 2\n");
    CHECK_THROWS_AS(load_qrels(tmp / "qrels2.txt"), ParseError);
    write_file(tmp / "empty_doc.jsonl", "{\"doc_id\": \"a\", \"text\": \"\"}\n");
    CHECK_THROWS_AS(Corpus::open(tmp / "empty_doc.jsonl"), ParseError);
    CHECK(code_of([&] { load_queries(tmp / "missing.jsonl"); }) == ErrorCode::IoError);
}

TEST_CASE("candidate depth truncates") {
    TempDir tmp;
    std::string run;
    for (int r = 1; r <= 150; ++r) run += "q Q0 d" + std::to_string(r) + " " + std::to_string(r) + " " + std::to_string(200 - r) + " x\n";
    write_file(tmp / "c.run", run);
    CHECK(load_candidates(tmp / "c.run")[0].entries.size() == 100);
    CHECK(load_candidates(tmp / "c.run", 20)[0].entries.size() == 20);
}

TEST_CASE("run files") {
    std::vector<RankedList> lists{{"q2", {{"x", 80.0, false}, {"y", 20.0, false}}},
                                  {"q1", {{"a", 50.0, false}, {"b", 50.0, false}, {"c", 0.0, true}}}};
    CHECK(format_run(lists, "rr") ==
          "q1 Q0 a 1 50 rr\nq1 Q0 b 2 50 rr\nq1 Q0 c 3 -1 rr\nq2 Q0 x 1 80 rr\nq2 Q0 y 2 20 rr\n");
    CHECK(code_of([&] { format_run(lists, "two words"); }) == ErrorCode::InvalidArgument);

    TempDir tmp;
    std::vector<RankedList> precise{{"q", {{"a", 56.666666666666664, false}, {"b", 0.1 + 0.2, false}}}};
    write_run_file(tmp / "p.run", precise, "t");
    CHECK(load_run_file(tmp / "p.run") == precise);
    write_run_file(tmp / "l.run", lists, "t");
    auto back = load_run_file(tmp / "l.run");
    std::sort(lists.begin(), lists.end(), [](auto& a, auto& b) { return a.query_id < b.query_id; });
    CHECK(back == lists);
    write_run_file(tmp / "empty.run", {}, "t");
    CHECK(read_file(tmp / "empty.run").empty());
}

TEST_CASE("corpus reads are safe across threads") {
    TempDir tmp;
    std::string corpus;
    for (int i = 0; i < 200; ++i) corpus += "{\"doc_id\": \"d" + std::to_string(i) + "\", \"text\": \"body " + std::to_string(i) + "\"}\n";
    write_file(tmp / "corpus.jsonl", corpus);
    const auto c = Corpus::open(tmp / "corpus.jsonl");
    std::atomic<int> bad{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t) {
        pool.emplace_back([&, t] {
            for (int i = 0; i < 200; ++i) {
                const int id = (i * 7 + t) % 200;
                if (c.text("d" + std::to_string(id)) != "body " + std::to_string(id)) ++bad;
            }
        });
    }
    for (auto& th : pool) th.join();
    CHECK(bad.load() == 0);
}

TEST_CASE("training pairs: file round trip and convenience sampler") {
    TempDir tmp;
    std::vector<TrainingSample> s{{"q1", "a", "b"}, {"q2", "c", "d"}};
    write_training_samples(tmp / "s.jsonl", s);
    const auto back = load_training_samples(tmp / "s.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[1].negative_doc_id == "d");

    const auto ds = load_dataset(DatasetPaths::under(fixture_dir() / "datasets", "biology"), RubricConfig::builtin());
    const auto pairs = sample_training_pairs(ds, 3);
    CHECK(pairs.size() == 3);
    for (const auto& p : pairs) {
        CHECK(ds.qrels.relevance(p.query_id, p.positive_doc_id) > 0);
        CHECK(ds.qrels.relevance(p.query_id, p.negative_doc_id) == 0);
    }
    CHECK(sample_training_pairs(ds, 3).front().positive_doc_id == pairs.front().positive_doc_id);
}

TEST_CASE("audit records round trip") {
    ScoredCandidate c{"q", "d", IntegratedScore{56.666666666666664, 3, Weighting::uniform},
                      {{"t1", 90, std::nullopt}, {"t2", 70, std::nullopt}, {"t3", 10, std::nullopt}},
                      1, 4, std::string(64, 'a')};
    ScoredCandidate failed{"q", "e", std::nullopt, {}, 3, 3, std::string(64, 'b')};
    RerankResult r{assemble_ranking("q", std::vector<ScoredCandidate>{c, failed}), {c, failed}};
    TempDir tmp;
    CHECK(write_audit_file(tmp / "a.jsonl", std::vector<RerankResult>{r}) == 2);
    CHECK(read_file(tmp / "a.jsonl").rfind("# rubricrank audit v1", 0) == 0);
    const auto back = load_audit_file(tmp / "a.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].integrated == c.integrated);
    CHECK(back[0].trajectories == c.trajectories);
    CHECK(back[0].failure_count == 1);
    CHECK(back[1].failed());
    CHECK(back[1].backend_calls == 3);
}

TEST_CASE("sft and reward records") {
    SftTuple t{"q", "d", PromptText{"prompt text"}, Trajectory{"why\n<score>70</score>", 70, std::nullopt},
               IntegratedScore{68.75, 8, Weighting::uniform}, 2};
    const auto j = sft_record(t);
    CHECK(j["prompt"] == "prompt text");
    CHECK(j["response"] == "why\n<score>70</score>");
    CHECK(j["score"] == 70);
    CHECK(j["integrated_score"] == 68.75);
    const auto back = sft_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.trajectory == t.trajectory);
    CHECK(back.integrated == t.integrated);
    CHECK(back.discarded == 2);

    RolloutGroup pos{"q", "p", Label::positive, {{"a", 90}, {"b", 70}, {"c", 10}}};
    RolloutGroup neg{"q", "n", Label::negative, {{"x", 60}, {"y", 40}, {"z", std::nullopt}}};
    const RewardConfig rc{};
    RewardExport rec{"q", pos, neg, compute_sample_rewards(pos, neg, rc), rc};
    const auto rj = reward_record(rec);
    CHECK(rj["positive"]["composite"] == nlohmann::json{0.25, 1.0, -0.75});
    CHECK(rj["negative"]["trajectories"][2]["score"].is_null());
    const auto rback = reward_from_json(nlohmann::json::parse(rj.dump()));
    CHECK(rback.rewards.positive.composite == rec.rewards.positive.composite);
    CHECK(rback.rewards.negative.inter == rec.rewards.negative.inter);
    CHECK(rback.negative.trajectories[2] == neg.trajectories[2]);

    TempDir tmp;
    JsonlWriter w(tmp / "r.jsonl", kRolloutHeader);
    w.write(rollout_record(RolloutSample{"q", pos, neg}));
    w.close();
    const auto rolls = load_rollouts(tmp / "r.jsonl");
    REQUIRE(rolls.size() == 1);
    CHECK(rolls[0].negative.trajectories == neg.trajectories);
}

TEST_CASE("empty exports still carry a header") {
    TempDir tmp;
    const auto counts = export_training_artifacts(tmp.path(), {}, {});
    CHECK(counts.sft == 0);
    CHECK(counts.rewards == 0);
    const auto text = read_file(tmp / "rewards.jsonl");
    CHECK(text.rfind("# rubricrank rewards v1", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
}

TEST_CASE("streaming export at training-set scale") {
    std::vector<SftTuple> sft;
    for (int i = 0; i < 12000; ++i) {
        sft.push_back(SftTuple{"q" + std::to_string(i / 2), "d" + std::to_string(i), PromptText{"p"},
                               Trajectory{"r <score>50</score>", 50, std::nullopt}, IntegratedScore{50, 8, Weighting::uniform}, 0});
    }
    RolloutGroup pos{"q", "p", Label::positive, std::vector<Rollout>(8, Rollout{"t", 80})};
    RolloutGroup neg{"q", "n", Label::negative, std::vector<Rollout>(8, Rollout{"t", 20})};
    const RewardConfig rc{};
    const RewardExport one{"q", pos, neg, compute_sample_rewards(pos, neg, rc), rc};
    std::vector<RewardExport> rewards(24000, one);

    TempDir tmp;
    const auto counts = export_training_artifacts(tmp.path(), sft, rewards);
    CHECK(counts.sft == 12000);
    CHECK(counts.rewards == 24000);
    std::size_t lines = 0;
    for_each_jsonl(tmp / "rewards.jsonl", [&](const nlohmann::json& j, std::size_t) {
        ++lines;
        if (lines == 24000) CHECK(reward_from_json(j).rewards.positive.composite == one.rewards.positive.composite);
    });
    CHECK(lines == 24000);
    std::size_t sft_lines = 0;
    for_each_jsonl(tmp / "sft.jsonl", [&](const nlohmann::json&, std::size_t) { ++sft_lines; });
    CHECK(sft_lines == 12000);
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(50.0) == "50");
    CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
    CHECK(format_double(56.666666666666664) == "56.666666666666664");
    CHECK(trim_trailing_newline("a\r\n") == "a");
    CHECK(trim_trailing_newline("a\n\n") == "a\n");
}
