#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rubricrank/backend.hpp"
#include "rubricrank/cli.hpp"
#include "rubricrank/data_io.hpp"
#include "rubricrank/error.hpp"

namespace rubricrank::cli {

namespace fs = std::filesystem;

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

// Each subcommand registers itself and leaves a runner behind; run() invokes
// the runner of whichever subcommand was parsed.
using Runner = std::function<int(Streams)>;

struct Command {
    CLI::App* app = nullptr;
    Runner runner;
};

Command register_rerank(CLI::App& root);
Command register_eval(CLI::App& root);
Command register_curate_sft(CLI::App& root);
Command register_compute_rewards(CLI::App& root);
Command register_score_dist(CLI::App& root);
Command register_compare(CLI::App& root);

// Backend flags shared by rerank, curate-sft and compute-rewards.
struct BackendFlags {
    std::string url = "mock://oracle";
    std::string model = "rubricrank-scorer";
    std::optional<double> temperature;
    std::size_t samples = 1;
    std::size_t retries = 2;
    std::size_t concurrency = 8;
    double timeout_s = 120.0;
    std::string weighting = "uniform";
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App& app, const std::string& url_flag, std::size_t default_samples,
                std::size_t default_retries, const std::string& samples_help);
    ScoringBackendConfig config() const;
};

// Builds the backend; mock backends are centred on the dataset's judgments.
std::unique_ptr<ScoringBackend> build_backend(const BackendFlags& flags,
                                              const std::vector<const Dataset*>& datasets);

// Files written by a command, reported in <out>/manifest.json with hashes.
class Manifest {
public:
    explicit Manifest(fs::path out_dir) : dir_(std::move(out_dir)) {}
    void add(const fs::path& file) { files_.push_back(file); }
    void write() const;

private:
    fs::path dir_;
    std::vector<fs::path> files_;
};

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j);

RubricConfig load_rubrics(const std::string& path);

int exit_code_for(ErrorCode code);

std::string seconds_since(std::chrono::steady_clock::time_point start);

}  // namespace rubricrank::cli
