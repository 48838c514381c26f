#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "common.hpp"
#include "rubricrank/digest.hpp"

namespace rubricrank::cli {

void BackendFlags::add_to(CLI::App& app, const std::string& url_flag, std::size_t default_samples,
                          std::size_t default_retries, const std::string& samples_help) {
    samples = default_samples;
    retries = default_retries;
    app.add_option(url_flag, url, "Scoring endpoint: http(s)://host[:port][/path] or mock://name?seed=..")
        ->capture_default_str();
    app.add_option("--model", model, "Model name sent to the endpoint")->capture_default_str();
    app.add_option("--temperature", temperature,
                   "Sampling temperature (default: 1.0 when sampling more than once, else 0)");
    app.add_option("--samples", samples, samples_help)->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--retries", retries, "Retries per failed sample")->capture_default_str();
    app.add_option("--concurrency", concurrency, "Maximum backend calls in flight")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--timeout", timeout_s, "Per-request timeout in seconds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--weighting", weighting, "Score integration: uniform or likelihood")
        ->capture_default_str()
        ->check(CLI::IsMember({"uniform", "likelihood"}));
    app.add_option("--seed", seed, "Seed for the mock backend (overrides the URL's seed)");
}

ScoringBackendConfig BackendFlags::config() const {
    ScoringBackendConfig c;
    c.endpoint_url = url;
    c.model_name = model;
    c.temperature = temperature;
    c.samples_per_pair = samples;
    c.max_retries_per_sample = retries;
    c.concurrency_limit = concurrency;
    c.request_timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
    c.weighting = parse_weighting(weighting);
    c.validate();
    return c;
}

std::unique_ptr<ScoringBackend> build_backend(const BackendFlags& flags,
                                              const std::vector<const Dataset*>& datasets) {
    auto config = flags.config();
    if (!config.is_mock()) return make_backend(config);
    auto options = MockOptions::from_url(config.endpoint_url);
    if (flags.seed) options.seed = *flags.seed;
    auto mock = std::make_unique<MockBackend>(options);
    // the mock's notion of relevance is the judged grade
    for (const auto* ds : datasets) {
        for (const auto& [qid, docs] : ds->qrels.by_query())
            for (const auto& [did, rel] : docs) mock->set_relevance(qid, did, rel);
    }
    return mock;
}

void Manifest::write() const {
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    auto sorted = files_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& f : sorted) {
        files.push_back({{"path", fs::relative(f, dir_).generic_string()},
                         {"bytes", fs::file_size(f)},
                         {"sha256", sha256_file_hex(f)}});
    }
    write_json_file(dir_ / "manifest.json", nlohmann::ordered_json{{"files", files}});
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

RubricConfig load_rubrics(const std::string& path) {
    return path.empty() ? RubricConfig::builtin() : RubricConfig::load(path);
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyField:
        case ErrorCode::InvalidArgument:
        case ErrorCode::AlphaOutOfRange:
        case ErrorCode::MissingWeights:
        case ErrorCode::UnknownQuery:
        case ErrorCode::MismatchedQueries:
        case ErrorCode::ParseError:
        case ErrorCode::DanglingReference:
        case ErrorCode::UnknownDataset:
        case ErrorCode::EmptyGroup:
            return kExitValidation;
        default:
            return kExitRuntime;
    }
}

std::string seconds_since(std::chrono::steady_clock::time_point start) {
    std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << d.count() << "s";
    return os.str();
}

namespace {

constexpr const char* kFooter = R"(Environment:
  RUBRICRANK_API_KEY  bearer token for http(s) endpoints (required for them)

Mock endpoints:
  mock://<name>?seed=N&noise=SD&pos=P&neg=Q&step=S&fail=F
  scores centre on P for judged-relevant pairs (+S per grade above 1) and
  on Q otherwise; F is the fraction of malformed completions.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure)";

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rubric-guided LLM reranking: scoring, evaluation and training-data curation",
                 "rubricrank"};
    app.set_version_flag("--version", "rubricrank 0.1.0");
    app.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
    app.footer(kFooter);
    app.require_subcommand(1);

    std::vector<Command> commands{register_rerank(app),         register_eval(app),
                                  register_curate_sft(app),     register_compute_rewards(app),
                                  register_score_dist(app),     register_compare(app)};

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());  // CLI11 consumes the vector from the back
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        for (auto& c : commands)
            if (c.app->parsed()) return c.runner(Streams{out, err});
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace rubricrank::cli
