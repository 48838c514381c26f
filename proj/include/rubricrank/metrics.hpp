#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rubricrank/orchestrator.hpp"

namespace rubricrank {

// Graded judgments keyed by query then document.
class Qrels {
public:
    // Throws Error(InvalidArgument) on a negative grade, Error(ParseError) on
    // a duplicate key.
    void add(const std::string& query_id, const std::string& doc_id, int relevance);

    // Unjudged pairs have relevance 0.
    int relevance(const std::string& query_id, const std::string& doc_id) const;
    bool judged(const std::string& query_id, const std::string& doc_id) const;
    bool has_query(const std::string& query_id) const;
    const std::map<std::string, int>* judgments(const std::string& query_id) const;

    std::size_t size() const;
    const std::map<std::string, std::map<std::string, int>>& by_query() const { return data_; }

private:
    std::map<std::string, std::map<std::string, int>> data_;
};

// (2^rel - 1) / log2(rank + 1) summed over the first k ranks; the ideal
// ordering is taken over every judged document of the query. Queries without
// a relevant document score 0. With strict set, a query absent from the
// qrels raises Error(UnknownQuery); otherwise it scores 0.
double ndcg_at_k(const RankedList& ranking, const Qrels& qrels, std::size_t k, bool strict = false);

struct DatasetMetrics {
    std::map<std::string, double> per_query;
    std::vector<std::string> zero_relevant_queries;
    double mean = 0.0;
};

struct MetricReport {
    std::size_t k = 10;
    std::map<std::string, DatasetMetrics> datasets;
    // Mean of the per-dataset means (the usual benchmark "Avg." column).
    double macro_average = 0.0;

    std::string to_json_text() const;
    static MetricReport from_json_text(const std::string& text, const std::string& origin);
    std::string summary() const;
};

// Evaluates one dataset's rankings and stores it under `dataset`.
void add_dataset(MetricReport& report, const std::string& dataset,
                 std::span<const RankedList> rankings, const Qrels& qrels, bool strict = false);

struct ComparisonRow {
    std::string dataset;              // "avg" for the macro-average row
    std::vector<double> values;       // one per run
    std::vector<double> deltas;       // values[i] - values[0]
};

struct ComparisonTable {
    std::vector<std::string> run_labels;
    std::vector<ComparisonRow> rows;

    std::string to_tsv() const;
    std::string to_text() const;
};

// Side-by-side per-dataset means with deltas against the first run. Every
// run must cover the same datasets and queries; otherwise
// Error(MismatchedQueries).
ComparisonTable compare_runs(std::span<const MetricReport> runs,
                             std::span<const std::string> labels);

// Audit view consumed by the distribution report.
struct ScoredPairView {
    std::string query_id;
    std::string doc_id;
    std::optional<double> integrated;
};

struct ScoreDistribution {
    int bucket_width = 10;
    std::vector<std::size_t> positive;  // 100 / bucket_width buckets
    std::vector<std::size_t> negative;
    std::size_t skipped_unjudged = 0;
    std::size_t skipped_failed = 0;

    std::size_t positive_total() const;
    std::size_t negative_total() const;
    // Rows "bucket_low\tbucket_high\tclass\tcount" with a header line.
    std::string to_tsv() const;
};

// Buckets [0,w), [w,2w), ..., [100-w,100]. Positive means qrels grade > 0.
// Pairs without a judgment are skipped and counted.
ScoreDistribution score_distribution(std::span<const ScoredPairView> scored, const Qrels& qrels,
                                     int bucket_width);

struct SeparationSummary {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double positive_above = 0.0;  // fraction of positives scoring > high
    double negative_below = 0.0;  // fraction of negatives scoring < low
};

SeparationSummary separation_summary(std::span<const ScoredPairView> scored, const Qrels& qrels,
                                     double high = 60.0, double low = 40.0);

}  // namespace rubricrank
