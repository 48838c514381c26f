#include <chrono>
#include <memory>

#include "common.hpp"
#include "rubricrank/orchestrator.hpp"

namespace rubricrank::cli {

namespace {

struct CurateArgs {
    std::string root;
    std::string dataset;
    std::string samples_file;
    std::string rubrics;
    std::string out;
    bool length_control = true;
    std::uint64_t pair_seed = 0;
    BackendFlags teacher;
};

int run_curate(const CurateArgs& a, Streams io) {
    auto started = std::chrono::steady_clock::now();
    const auto config = a.teacher.config();
    auto rubrics = load_rubrics(a.rubrics);
    const auto ds = load_dataset(DatasetPaths::under(a.root, a.dataset), rubrics);
    auto rubric = ds.rubric;
    rubric.length_control = a.length_control;

    std::vector<TrainingSample> samples;
    if (a.samples_file.empty()) {
        samples = sample_training_pairs(ds, a.pair_seed);
        io.err << "note: no --samples-file; drew " << samples.size()
               << " (query, positive, negative) triples from the judgments\n";
    } else {
        samples = load_training_samples(a.samples_file);
    }
    for (const auto& s : samples) {
        if (!ds.query(s.query_id))
            throw Error(ErrorCode::DanglingReference, "training sample query " + s.query_id + " not in " + a.dataset);
        for (const auto* d : {&s.positive_doc_id, &s.negative_doc_id})
            if (!ds.corpus.contains(*d))
                throw Error(ErrorCode::DanglingReference, "training sample document " + *d + " not in corpus");
    }

    auto backend = build_backend(a.teacher, {&ds});
    fs::create_directories(a.out);
    Manifest manifest(a.out);
    const auto sft_path = fs::path(a.out) / "sft.jsonl";
    JsonlWriter writer(sft_path, kSftHeader);

    std::size_t pairs = 0, dropped = 0, discarded = 0, calls = 0;
    for (const auto& s : samples) {
        const auto* q = ds.query(s.query_id);
        for (const auto* did : {&s.positive_doc_id, &s.negative_doc_id}) {
            ++pairs;
            auto prompt = render_prompt(rubric, q->text, ds.corpus.text(*did));
            auto batch = sample_completions(*backend, prompt, config.samples_per_pair, config, q->query_id, *did);
            calls += batch.backend_calls;
            auto trajectories = batch.trajectories();
            const std::size_t lost = config.samples_per_pair - trajectories.size();
            discarded += lost;
            if (trajectories.empty()) {
                ++dropped;
                continue;
            }
            auto pick = select_sft_trajectory(trajectories);
            writer.write(sft_record(SftTuple{q->query_id, *did, std::move(prompt), std::move(pick.trajectory),
                                             pick.integrated, lost}));
        }
    }
    writer.close();
    manifest.add(sft_path);

    nlohmann::ordered_json summary{{"command", "curate-sft"},
                                   {"dataset", a.dataset},
                                   {"endpoint", config.endpoint_url},
                                   {"model", config.model_name},
                                   {"samples_per_pair", config.samples_per_pair},
                                   {"temperature", config.effective_temperature()},
                                   {"length_control", a.length_control},
                                   {"training_samples", samples.size()},
                                   {"pairs", pairs},
                                   {"records", writer.count()},
                                   {"dropped_pairs", dropped},
                                   {"discarded_trajectories", discarded},
                                   {"backend_calls", calls}};
    const auto summary_path = fs::path(a.out) / "summary.json";
    write_json_file(summary_path, summary);
    manifest.add(summary_path);
    manifest.write();
    io.out << a.dataset << ": " << writer.count() << " SFT records from " << pairs << " pairs, " << dropped
           << " pairs dropped, " << discarded << " trajectories discarded\n"
           << "wall time " << seconds_since(started) << '\n';
    return kExitOk;
}

}  // namespace

Command register_curate_sft(CLI::App& root) {
    auto args = std::make_shared<CurateArgs>();
    auto* sub = root.add_subcommand(
        "curate-sft", "Sample teacher trajectories per training pair and keep the one closest to their mean");
    sub->add_option("--dataset-root", args->root, "Directory holding one subdirectory per dataset")
        ->required()
        ->check(CLI::ExistingDirectory);
    sub->add_option("--dataset", args->dataset, "Dataset name")->required();
    sub->add_option("--samples-file", args->samples_file, "JSONL of {query_id, positive_doc_id, negative_doc_id}")
        ->check(CLI::ExistingFile);
    sub->add_option("--pair-seed", args->pair_seed, "Seed for drawing training pairs when no --samples-file is given")
        ->capture_default_str();
    sub->add_option("--rubrics", args->rubrics, "JSON file overriding the built-in rubrics")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args->out, "Output directory")->required();
    sub->add_flag("--length-control,!--no-length-control", args->length_control,
                  "Ask the teacher to keep its analysis short")
        ->capture_default_str();
    args->teacher.add_to(*sub, "--teacher", 8, 0, "Teacher trajectories per pair");
    return {sub, [args](Streams io) { return run_curate(*args, io); }};
}

}  // namespace rubricrank::cli
