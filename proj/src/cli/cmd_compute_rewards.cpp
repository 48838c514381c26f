#include <memory>

#include "common.hpp"
#include "rubricrank/orchestrator.hpp"

namespace rubricrank::cli {

namespace {

struct RewardArgs {
    std::string rollouts;
    std::string root;
    std::string dataset;
    std::string samples_file;
    std::string rubrics;
    std::string out;
    double alpha = 0.75;
    double tau = 20.0;
    std::uint64_t pair_seed = 0;
    BackendFlags policy;
};

RolloutGroup roll_out(ScoringBackend& backend, const ScoringBackendConfig& config, const Dataset& ds,
                      const RelevanceRubric& rubric, const Query& q, const std::string& did, Label label,
                      std::size_t& calls) {
    auto prompt = render_prompt(rubric, q.text, ds.corpus.text(did));
    auto batch = sample_completions(backend, prompt, config.samples_per_pair, config, q.query_id, did);
    calls += batch.backend_calls;
    RolloutGroup g{q.query_id, did, label, {}};
    for (auto& s : batch.samples) g.trajectories.push_back(Rollout{std::move(s.text), s.score});
    return g;
}

std::vector<RolloutSample> sample_rollouts(const RewardArgs& a, std::size_t& calls) {
    const auto config = a.policy.config();
    auto rubrics = load_rubrics(a.rubrics);
    const auto ds = load_dataset(DatasetPaths::under(a.root, a.dataset), rubrics);
    auto samples = a.samples_file.empty() ? sample_training_pairs(ds, a.pair_seed)
                                          : load_training_samples(a.samples_file);
    auto backend = build_backend(a.policy, {&ds});
    std::vector<RolloutSample> out;
    for (const auto& s : samples) {
        const auto* q = ds.query(s.query_id);
        if (!q) throw Error(ErrorCode::DanglingReference, "training sample query " + s.query_id + " not in " + a.dataset);
        out.push_back({q->query_id,
                       roll_out(*backend, config, ds, ds.rubric, *q, s.positive_doc_id, Label::positive, calls),
                       roll_out(*backend, config, ds, ds.rubric, *q, s.negative_doc_id, Label::negative, calls)});
    }
    return out;
}

int run_rewards(const RewardArgs& a, Streams io) {
    RewardConfig rc{a.alpha, a.tau, a.policy.samples};
    rc.validate();
    if (a.rollouts.empty() == (a.root.empty() || a.dataset.empty()))
        throw Error(ErrorCode::InvalidArgument, "give either --rollouts or --dataset-root with --dataset");

    std::size_t calls = 0;
    auto samples = a.rollouts.empty() ? sample_rollouts(a, calls) : load_rollouts(a.rollouts);

    fs::create_directories(a.out);
    Manifest manifest(a.out);
    const auto path = fs::path(a.out) / "rewards.jsonl";
    JsonlWriter writer(path, kRewardHeader);
    std::size_t groups = 0, pruned = 0, failures = 0, trajectories = 0;
    double composite_sum = 0.0;
    for (auto& s : samples) {
        auto rewards = compute_sample_rewards(s.positive, s.negative, rc);
        for (const auto* r : {&rewards.positive, &rewards.negative}) {
            ++groups;
            pruned += r->intra_pruned ? 1 : 0;
            for (double c : r->composite) composite_sum += c;
            trajectories += r->composite.size();
        }
        for (const auto* g : {&s.positive, &s.negative})
            for (const auto& t : g->trajectories) failures += t.score ? 0 : 1;
        writer.write(reward_record(RewardExport{s.query_id, std::move(s.positive), std::move(s.negative),
                                                std::move(rewards), rc}));
    }
    writer.close();
    manifest.add(path);

    const double pruning_rate = groups ? static_cast<double>(pruned) / static_cast<double>(groups) : 0.0;
    const double mean_composite = trajectories ? composite_sum / static_cast<double>(trajectories) : 0.0;
    nlohmann::ordered_json summary{{"command", "compute-rewards"},
                                   {"alpha", rc.alpha},
                                   {"tau", rc.tau},
                                   {"samples", writer.count()},
                                   {"groups", groups},
                                   {"pruned_groups", pruned},
                                   {"pruning_rate", pruning_rate},
                                   {"format_failures", failures},
                                   {"mean_composite", mean_composite},
                                   {"backend_calls", calls}};
    const auto summary_path = fs::path(a.out) / "summary.json";
    write_json_file(summary_path, summary);
    manifest.add(summary_path);
    manifest.write();
    io.out << writer.count() << " samples, " << groups << " groups, pruning rate " << pruning_rate
           << ", format failures " << failures << ", mean composite " << mean_composite << '\n';
    return kExitOk;
}

}  // namespace

Command register_compute_rewards(CLI::App& root) {
    auto args = std::make_shared<RewardArgs>();
    auto* sub = root.add_subcommand("compute-rewards",
                                    "Per-rollout intra, inter and composite rewards for (query, positive, negative) samples");
    sub->add_option("--rollouts", args->rollouts, "JSONL of scored rollout groups to reward")->check(CLI::ExistingFile);
    sub->add_option("--dataset-root", args->root, "Sample fresh rollouts from this dataset root instead")
        ->check(CLI::ExistingDirectory);
    sub->add_option("--dataset", args->dataset, "Dataset name for fresh rollouts");
    sub->add_option("--samples-file", args->samples_file, "JSONL of {query_id, positive_doc_id, negative_doc_id}")
        ->check(CLI::ExistingFile);
    sub->add_option("--pair-seed", args->pair_seed, "Seed for drawing training pairs when no --samples-file is given")
        ->capture_default_str();
    sub->add_option("--rubrics", args->rubrics, "JSON file overriding the built-in rubrics")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args->out, "Output directory")->required();
    sub->add_option("--alpha", args->alpha, "Weight of the intra reward, strictly between 0 and 1")
        ->capture_default_str();
    sub->add_option("--tau", args->tau, "Minimum deviation from the group mean for a non-zero intra reward")
        ->capture_default_str();
    args->policy.add_to(*sub, "--backend", 8, 0, "Rollouts per document (N)");
    return {sub, [args](Streams io) { return run_rewards(*args, io); }};
}

}  // namespace rubricrank::cli
