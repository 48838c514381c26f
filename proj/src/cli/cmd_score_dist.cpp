#include <fstream>
#include <iomanip>
#include <memory>

#include "common.hpp"

namespace rubricrank::cli {

namespace {

struct ScoreDistArgs {
    std::vector<std::string> audits;
    std::vector<std::string> qrels;
    int bucket_width = 10;
    std::string out;
};

int run_score_dist(const ScoreDistArgs& a, Streams io) {
    Qrels qrels;
    for (const auto& path : a.qrels) {
        auto part = load_qrels(path);
        for (const auto& [qid, docs] : part.by_query())
            for (const auto& [did, rel] : docs) qrels.add(qid, did, rel);
    }
    std::vector<ScoredPairView> pairs;
    for (const auto& path : a.audits) {
        for (auto& c : load_audit_file(path)) {
            std::optional<double> v;
            if (c.integrated) v = c.integrated->value;
            pairs.push_back({std::move(c.query_id), std::move(c.doc_id), v});
        }
    }
    auto dist = score_distribution(pairs, qrels, a.bucket_width);
    auto sep = separation_summary(pairs, qrels);
    if (a.out.empty()) {
        io.out << dist.to_tsv();
    } else {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + a.out);
        f << dist.to_tsv();
    }
    auto& report = a.out.empty() ? io.err : io.out;
    report << std::fixed << std::setprecision(3) << "positives " << sep.positives << " (above 60: "
           << sep.positive_above << "), negatives " << sep.negatives << " (below 40: " << sep.negative_below
           << "), skipped " << dist.skipped_unjudged << " unjudged, " << dist.skipped_failed << " failed\n";
    return kExitOk;
}

}  // namespace

Command register_score_dist(CLI::App& root) {
    auto args = std::make_shared<ScoreDistArgs>();
    auto* sub = root.add_subcommand("score-dist", "Histogram of integrated scores for judged positives and negatives");
    sub->add_option("--audit", args->audits, "Audit file written by rerank (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--qrels", args->qrels, "Judgment file (repeatable)")->required()->check(CLI::ExistingFile);
    sub->add_option("--bucket-width", args->bucket_width, "Bucket width; must divide 100")
        ->capture_default_str()
        ->check(CLI::Range(1, 100));
    sub->add_option("--out", args->out, "Write the TSV here instead of stdout");
    return {sub, [args](Streams io) { return run_score_dist(*args, io); }};
}

}  // namespace rubricrank::cli
