#include <fstream>
#include <memory>
#include <sstream>

#include "common.hpp"

namespace rubricrank::cli {

namespace {

struct CompareArgs {
    std::vector<std::string> reports;
    std::vector<std::string> labels;
    std::string tsv;
};

int run_compare(const CompareArgs& a, Streams io) {
    std::vector<MetricReport> reports;
    for (const auto& path : a.reports) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        reports.push_back(MetricReport::from_json_text(buf.str(), path));
    }
    std::vector<std::string> labels = a.labels;
    if (labels.empty())
        for (const auto& p : a.reports) labels.push_back(fs::path(p).stem().string());
    auto table = compare_runs(reports, labels);
    if (!a.tsv.empty()) {
        std::ofstream f(a.tsv, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + a.tsv);
        f << table.to_tsv();
    }
    io.out << table.to_text();
    return kExitOk;
}

}  // namespace

Command register_compare(CLI::App& root) {
    auto args = std::make_shared<CompareArgs>();
    auto* sub = root.add_subcommand("compare", "Tabulate eval reports side by side with deltas against the first");
    sub->add_option("--report", args->reports, "Report written by eval --out (repeatable, first is the baseline)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--label", args->labels, "Column label per report (default: file stem)");
    sub->add_option("--tsv", args->tsv, "Also write the table as TSV");
    return {sub, [args](Streams io) { return run_compare(*args, io); }};
}

}  // namespace rubricrank::cli
