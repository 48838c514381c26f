#include <fstream>
#include <memory>
#include <set>

#include "common.hpp"

namespace rubricrank::cli {

namespace {

struct EvalArgs {
    std::vector<std::string> runs;
    std::vector<std::string> qrels;
    std::vector<std::string> names;
    std::string run_dir;
    std::string root;
    std::string out;
    std::size_t k = 10;
    bool strict = false;
};

struct EvalInput {
    std::string name;
    fs::path run;
    fs::path qrels;
};

std::vector<EvalInput> collect_inputs(const EvalArgs& a) {
    std::vector<EvalInput> inputs;
    if (!a.run_dir.empty()) {
        if (a.root.empty())
            throw Error(ErrorCode::InvalidArgument, "--run-dir needs --dataset-root for the qrels");
        std::vector<fs::path> found;
        for (const auto& e : fs::directory_iterator(a.run_dir))
            if (e.is_regular_file() && e.path().extension() == ".run") found.push_back(e.path());
        std::sort(found.begin(), found.end());
        for (const auto& p : found) {
            auto name = p.stem().string();
            inputs.push_back({name, p, DatasetPaths::under(a.root, name).qrels});
        }
    }
    if (!a.runs.empty()) {
        if (a.qrels.size() != 1 && a.qrels.size() != a.runs.size())
            throw Error(ErrorCode::InvalidArgument, "give one --qrels, or one per --run");
        if (!a.names.empty() && a.names.size() != a.runs.size())
            throw Error(ErrorCode::InvalidArgument, "give one --name per --run");
        for (std::size_t i = 0; i < a.runs.size(); ++i) {
            fs::path run = a.runs[i];
            inputs.push_back({a.names.empty() ? run.stem().string() : a.names[i], run,
                              a.qrels.size() == 1 ? a.qrels[0] : a.qrels[i]});
        }
    }
    if (inputs.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to evaluate: give --run or --run-dir");
    std::set<std::string> seen;
    for (const auto& in : inputs)
        if (!seen.insert(in.name).second)
            throw Error(ErrorCode::InvalidArgument, "dataset " + in.name + " given twice");
    return inputs;
}

int run_eval(const EvalArgs& a, Streams io) {
    MetricReport report;
    report.k = a.k;
    for (const auto& in : collect_inputs(a)) {
        auto rankings = load_run_file(in.run);
        auto qrels = load_qrels(in.qrels);

        std::set<std::string> ranked;
        for (const auto& r : rankings) ranked.insert(r.query_id);
        std::size_t unranked = 0;
        for (const auto& [qid, _] : qrels.by_query()) unranked += ranked.count(qid) ? 0 : 1;
        std::size_t unjudged = 0;
        for (const auto& q : ranked) unjudged += qrels.has_query(q) ? 0 : 1;
        if (a.strict && (unranked || unjudged)) {
            throw Error(ErrorCode::MismatchedQueries,
                        in.name + ": " + std::to_string(unjudged) + " ranked queries without judgments, " +
                            std::to_string(unranked) + " judged queries not ranked");
        }
        if (unranked || unjudged)
            io.err << "warning: " << in.name << ": " << unjudged << " ranked queries without judgments (score 0), "
                   << unranked << " judged queries not ranked (ignored)\n";
        add_dataset(report, in.name, rankings, qrels, a.strict);
    }
    if (!a.out.empty()) {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + a.out);
        f << report.to_json_text();
    }
    io.out << report.summary();
    return kExitOk;
}

}  // namespace

Command register_eval(CLI::App& root) {
    auto args = std::make_shared<EvalArgs>();
    auto* sub = root.add_subcommand("eval", "Compute nDCG@k for run files against graded judgments");
    sub->add_option("--run", args->runs, "Run file (repeatable)")->check(CLI::ExistingFile);
    sub->add_option("--qrels", args->qrels, "Judgment file: one for all runs, or one per run")
        ->check(CLI::ExistingFile);
    sub->add_option("--name", args->names, "Dataset label per run (default: run file stem)");
    sub->add_option("--run-dir", args->run_dir, "Evaluate every <dataset>.run in this directory")
        ->check(CLI::ExistingDirectory);
    sub->add_option("--dataset-root", args->root, "Dataset root supplying qrels for --run-dir")
        ->check(CLI::ExistingDirectory);
    sub->add_option("--k", args->k, "Cutoff")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_flag("--strict", args->strict, "Fail when ranked and judged query sets differ");
    sub->add_option("--out", args->out, "Write the JSON report here");
    return {sub, [args](Streams io) { return run_eval(*args, io); }};
}

}  // namespace rubricrank::cli
