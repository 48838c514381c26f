#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "rubricrank/error.hpp"
#include "rubricrank/metrics.hpp"

using namespace rubricrank;

namespace {

RankedList ranked(const std::string& qid, std::vector<std::string> ids) {
    RankedList r{qid, {}};
    double s = 100;
    for (auto& id : ids) r.entries.push_back({std::move(id), s--, false});
    return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("ndcg basic cases") {
    Qrels q;
    q.add("q", "a", 2);
    q.add("q", "b", 1);
    q.add("q", "c", 0);
    CHECK(ndcg_at_k(ranked("q", {"a", "b", "c"}), q, 10) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ndcg_at_k(ranked("q", {"c", "x", "y"}), q, 10) == 0.0);

    Qrels binary;
    binary.add("q", "rel", 1);
    CHECK(ndcg_at_k(ranked("q", {"other", "rel"}), binary, 10) == doctest::Approx(0.63093).epsilon(1e-5));
    CHECK(ndcg_at_k(ranked("q", {"other", "rel"}), binary, 10) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-15));
    CHECK(ndcg_at_k(ranked("q", {"other", "rel"}), binary, 1) == 0.0);
}

TEST_CASE("ndcg edge cases") {
    Qrels q;
    q.add("q", "a", 1);
    q.add("zero", "a", 0);
    // queries with no relevant document score zero
    CHECK(ndcg_at_k(ranked("zero", {"a"}), q, 10) == 0.0);
    // unknown queries score zero unless strict
    CHECK(ndcg_at_k(ranked("nope", {"a"}), q, 10) == 0.0);
    CHECK(code_of([&] { ndcg_at_k(ranked("nope", {"a"}), q, 10, true); }) == ErrorCode::UnknownQuery);
    // duplicates count once
    CHECK(ndcg_at_k(ranked("q", {"x", "x", "a"}), q, 2) == doctest::Approx(1.0 / std::log2(3.0)));
    CHECK(ndcg_at_k(ranked("q", {}), q, 10) == 0.0);
    CHECK(code_of([&] { ndcg_at_k(ranked("q", {"a"}), q, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("ndcg matches the reference over small permutations") {
    // grade vectors over 4 documents in {0,1,2}; every ordering
    for (int code = 0; code < 81; ++code) {
        std::vector<int> grades;
        for (int c = code, i = 0; i < 4; ++i, c /= 3) grades.push_back(c % 3);
        Qrels q;
        std::vector<std::string> ids;
        for (int i = 0; i < 4; ++i) {
            ids.push_back("d" + std::to_string(i));
            q.add("q", ids.back(), grades[i]);
        }
        std::vector<int> perm{0, 1, 2, 3};
        do {
            std::vector<std::string> order;
            std::vector<int> ranked_grades;
            for (int p : perm) {
                order.push_back(ids[p]);
                ranked_grades.push_back(grades[p]);
            }
            for (std::size_t k : {1, 2, 3, 10}) {
                CHECK(std::abs(ndcg_at_k(ranked("q", order), q, k) - oracle::ndcg(ranked_grades, grades, k)) <= 1e-12);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("qrels bookkeeping") {
    Qrels q;
    q.add("q1", "a", 1);
    q.add("q1", "b", 0);
    q.add("q2", "a", 3);
    CHECK(q.size() == 3);
    CHECK(q.relevance("q2", "a") == 3);
    CHECK(q.relevance("q2", "zzz") == 0);
    CHECK(q.judged("q1", "b"));
    CHECK_FALSE(q.judged("q1", "c"));
    CHECK(code_of([&] { q.add("q1", "a", 2); }) == ErrorCode::ParseError);
    CHECK(code_of([&] { q.add("q3", "a", -1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("report and comparison") {
    Qrels q;
    q.add("q1", "a", 1);
    q.add("q2", "b", 1);
    q.add("q3", "c", 0);
    const std::vector<RankedList> good{ranked("q1", {"a"}), ranked("q2", {"b"}), ranked("q3", {"c"})};
    const std::vector<RankedList> worse{ranked("q1", {"x", "a"}), ranked("q2", {"b"}), ranked("q3", {"c"})};

    MetricReport a, b;
    add_dataset(a, "set1", good, q);
    add_dataset(a, "set2", worse, q);
    CHECK(a.datasets.at("set1").mean == doctest::Approx(2.0 / 3.0));
    CHECK(a.datasets.at("set1").zero_relevant_queries == std::vector<std::string>{"q3"});
    CHECK(a.macro_average == doctest::Approx((2.0 / 3.0 + (1.0 / std::log2(3.0) + 1.0) / 3.0) / 2.0));

    const auto back = MetricReport::from_json_text(a.to_json_text(), "mem");
    CHECK(back.k == a.k);
    CHECK(back.macro_average == a.macro_average);
    CHECK(back.datasets.at("set2").per_query == a.datasets.at("set2").per_query);
    CHECK(a.summary().find("set2") != std::string::npos);

    const std::vector<MetricReport> self{a, a};
    const std::vector<std::string> labels{"x", "y"};
    const auto t = compare_runs(self, labels);
    for (const auto& row : t.rows)
        for (double d : row.deltas) CHECK(d == 0.0);
    CHECK(t.rows.back().dataset == "avg");
    CHECK(t.to_tsv().rfind("dataset\tx\ty\tdelta_y\n", 0) == 0);

    add_dataset(b, "set1", std::vector<RankedList>{ranked("q9", {"a"})}, q);
    add_dataset(b, "set2", worse, q);
    const std::vector<MetricReport> mismatched{a, b};
    CHECK(code_of([&] { compare_runs(mismatched, labels); }) == ErrorCode::MismatchedQueries);
    CHECK(code_of([&] { add_dataset(b, "dup", std::vector<RankedList>{ranked("q1", {}), ranked("q1", {})}, q); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("score distribution buckets") {
    Qrels q;
    q.add("q", "p1", 1);
    q.add("q", "p2", 2);
    q.add("q", "n1", 0);
    q.add("q", "n2", 0);
    std::vector<ScoredPairView> s{{"q", "p1", 95}, {"q", "p2", 90}, {"q", "n1", 10}, {"q", "n2", 5},
                                  {"q", "unjudged", 50}, {"q", "p1", std::nullopt}};
    auto d = score_distribution(s, q, 10);
    CHECK(d.positive[9] == 2);
    CHECK(d.positive_total() == 2);
    CHECK(d.negative[0] == 1);
    CHECK(d.negative[1] == 1);
    CHECK(d.skipped_unjudged == 1);
    CHECK(d.skipped_failed == 1);

    std::vector<ScoredPairView> edge{{"q", "p1", 100}, {"q", "n1", 0}, {"q", "n2", 60}};
    d = score_distribution(edge, q, 20);
    CHECK(d.positive.size() == 5);
    CHECK(d.positive[4] == 1);  // 100 lands in the closed last bucket
    CHECK(d.negative[0] == 1);
    CHECK(d.negative[3] == 1);  // 60 opens [60,80)
    CHECK(d.to_tsv().rfind("bucket_low\tbucket_high\tclass\tcount\n0\t20\tpositive\t0\n", 0) == 0);
    CHECK(code_of([&] { score_distribution(edge, q, 30); }) == ErrorCode::InvalidArgument);

    const auto sep = separation_summary(s, q);
    CHECK(sep.positives == 2);
    CHECK(sep.positive_above == 1.0);
    CHECK(sep.negative_below == 1.0);
}
