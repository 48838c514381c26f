#include <chrono>
#include <memory>

#include "common.hpp"

namespace rubricrank::cli {

namespace {

struct RerankArgs {
    std::string root;
    std::vector<std::string> datasets;
    std::string rubrics;
    std::string out;
    std::string tag = "rubricrank";
    std::size_t depth = kDefaultCandidateDepth;
    bool length_control = false;
    bool strict = false;
    BackendFlags backend;
};

struct DatasetTotals {
    std::size_t queries = 0;
    std::size_t skipped_queries = 0;  // no candidates
    std::size_t pairs = 0;
    std::size_t failed_pairs = 0;
    std::size_t failed_samples = 0;
    std::size_t backend_calls = 0;
    nlohmann::ordered_json aborted = nlohmann::ordered_json::array();
};

int run_rerank(const RerankArgs& a, Streams io) {
    auto started = std::chrono::steady_clock::now();
    const auto config = a.backend.config();
    auto rubrics = load_rubrics(a.rubrics);

    auto names = a.datasets.empty() ? discover_datasets(a.root) : a.datasets;
    if (names.empty()) throw Error(ErrorCode::InvalidArgument, "no datasets under " + a.root);

    // Load everything before the first backend call so that bad input fails fast.
    std::vector<Dataset> datasets;
    for (const auto& name : names) {
        datasets.push_back(load_dataset(DatasetPaths::under(a.root, name), rubrics,
                                        LoadOptions{a.strict, a.depth}));
        const auto& ds = datasets.back();
        if (ds.dangling.total() > 0)
            io.err << "warning: " << name << ": dropped " << ds.dangling.total()
                   << " dangling candidate references\n";
    }
    std::vector<const Dataset*> views;
    for (const auto& ds : datasets) views.push_back(&ds);
    auto backend = build_backend(a.backend, views);

    fs::create_directories(a.out);
    Manifest manifest(a.out);
    nlohmann::ordered_json summary_sets = nlohmann::ordered_json::object();
    bool any_aborted = false;

    for (const auto& ds : datasets) {
        auto rubric = ds.rubric;
        rubric.length_control = a.length_control;
        DatasetTotals t;
        std::vector<RerankResult> results;

        for (const auto& cand : ds.candidates) {
            const Query* q = ds.query(cand.query_id);
            if (!q || cand.entries.empty()) {
                ++t.skipped_queries;
                continue;
            }
            std::vector<CandidateDoc> docs;
            docs.reserve(cand.entries.size());
            for (const auto& e : cand.entries) docs.push_back({e.doc_id, ds.corpus.text(e.doc_id)});
            ++t.queries;
            try {
                results.push_back(rerank(*backend, q->query_id, q->text, docs, rubric, config));
            } catch (const QueryAbortedError& e) {
                any_aborted = true;
                std::size_t calls = 0;
                for (const auto& p : e.partial()) calls += p.backend_calls;
                t.backend_calls += calls;
                t.aborted.push_back({{"query_id", e.query_id()},
                                     {"cause", std::string(to_string(e.cause()))},
                                     {"message", e.what()},
                                     {"completed_pairs", e.partial().size()},
                                     {"total_pairs", e.total_pairs()}});
                io.err << "error: " << ds.name << "/" << e.query_id() << ": " << e.what() << '\n';
                continue;
            }
            for (const auto& c : results.back().candidates) {
                ++t.pairs;
                if (c.failed()) ++t.failed_pairs;
                t.failed_samples += c.failure_count;
                t.backend_calls += c.backend_calls;
            }
        }

        std::vector<RankedList> rankings;
        for (const auto& r : results) rankings.push_back(r.ranking);
        auto run_path = fs::path(a.out) / (ds.name + ".run");
        auto audit_path = fs::path(a.out) / (ds.name + ".audit.jsonl");
        write_run_file(run_path, rankings, a.tag);
        write_audit_file(audit_path, results);
        manifest.add(run_path);
        manifest.add(audit_path);

        summary_sets[ds.name] = {{"queries", t.queries},
                                 {"skipped_queries", t.skipped_queries},
                                 {"pairs", t.pairs},
                                 {"failed_pairs", t.failed_pairs},
                                 {"failed_samples", t.failed_samples},
                                 {"backend_calls", t.backend_calls},
                                 {"dangling_dropped", ds.dangling.total()},
                                 {"aborted_queries", t.aborted}};
        io.out << ds.name << ": " << t.queries << " queries, " << t.pairs << " pairs, "
               << t.failed_pairs << " failed pairs, " << t.failed_samples << " failed samples, "
               << t.aborted.size() << " aborted\n";
    }

    nlohmann::ordered_json summary{
        {"command", "rerank"},
        {"endpoint", config.endpoint_url},
        {"model", config.model_name},
        {"samples_per_pair", config.samples_per_pair},
        {"temperature", config.effective_temperature()},
        {"weighting", std::string(to_string(config.weighting))},
        {"length_control", a.length_control},
        {"depth", a.depth},
        {"datasets", summary_sets}};
    auto summary_path = fs::path(a.out) / "summary.json";
    write_json_file(summary_path, summary);
    manifest.add(summary_path);
    manifest.write();
    io.out << "wall time " << seconds_since(started) << '\n';
    return any_aborted ? kExitRuntime : kExitOk;
}

}  // namespace

Command register_rerank(CLI::App& root) {
    auto args = std::make_shared<RerankArgs>();
    auto* sub = root.add_subcommand("rerank", "Score every candidate with the rubric prompt and write run files");
    sub->add_option("--dataset-root", args->root, "Directory holding one subdirectory per dataset")
        ->required()
        ->check(CLI::ExistingDirectory);
    sub->add_option("--dataset", args->datasets, "Dataset name (repeatable; default: every dataset found)");
    sub->add_option("--rubrics", args->rubrics, "JSON file overriding the built-in rubrics")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args->out, "Output directory")->required();
    sub->add_option("--tag", args->tag, "Run tag written in the last column")->capture_default_str();
    sub->add_option("--depth", args->depth, "Candidates per query")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_flag("--length-control,!--no-length-control", args->length_control,
                  "Ask the scorer to keep its analysis short")
        ->capture_default_str();
    sub->add_flag("--strict", args->strict, "Fail on dangling references instead of dropping them");
    args->backend.add_to(*sub, "--backend", 1, 2, "Scoring samples per pair (K)");
    return {sub, [args](Streams io) { return run_rerank(*args, io); }};
}

}  // namespace rubricrank::cli
