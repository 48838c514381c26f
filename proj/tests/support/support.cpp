#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace testing {

fs::path fixture_dir() { return fs::path(RUBRICRANK_TEST_DIR) / "fixtures"; }
fs::path golden_dir() { return fs::path(RUBRICRANK_TEST_DIR) / "golden"; }

TempDir::TempDir() {
    std::random_device rd;
    for (int i = 0; i < 100; ++i) {
        auto p = fs::temp_directory_path() / ("rubricrank-test-" + std::to_string(rd()));
        if (fs::create_directory(p)) {
            path_ = p;
            return;
        }
    }
    throw std::runtime_error("could not create a temp dir");
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

SyntheticBenchmark make_benchmark(std::size_t queries, std::size_t candidates, std::size_t relevant,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SyntheticBenchmark b;
    for (std::size_t q = 0; q < queries; ++q) {
        SyntheticQuery sq;
        sq.query_id = "q" + std::to_string(q);
        sq.text = "synthetic question " + std::to_string(q);
        for (std::size_t d = 0; d < candidates; ++d) {
            std::string did = sq.query_id + "-d" + std::to_string(d);
            sq.candidates.push_back({did, "passage " + std::to_string(d) + " for " + sq.query_id});
            // first `relevant` docs get grades 2,1,2,1,...; the rest are judged 0
            int grade = d < relevant ? (d % 2 == 0 ? 2 : 1) : 0;
            b.judgments.emplace_back(sq.query_id, did, grade);
        }
        std::shuffle(sq.candidates.begin(), sq.candidates.end(), rng);
        b.queries.push_back(std::move(sq));
    }
    return b;
}

void write_dataset(const SyntheticBenchmark& bench, const fs::path& root, const std::string& name) {
    const auto dir = root / name;
    fs::create_directories(dir);
    std::ofstream queries(dir / "queries.jsonl"), corpus(dir / "corpus.jsonl"),
        run(dir / "candidates.run"), qrels(dir / "qrels.txt");
    for (const auto& q : bench.queries) {
        queries << nlohmann::json{{"query_id", q.query_id}, {"text", q.text}}.dump() << '\n';
        std::size_t rank = 1;
        for (const auto& c : q.candidates) {
            corpus << nlohmann::json{{"doc_id", c.doc_id}, {"text", c.text}}.dump() << '\n';
            run << q.query_id << " Q0 " << c.doc_id << ' ' << rank << ' ' << (1000 - rank) << " first\n";
            ++rank;
        }
    }
    for (const auto& [qid, did, grade] : bench.judgments) qrels << qid << " 0 " << did << ' ' << grade << '\n';
}

}  // namespace testing
