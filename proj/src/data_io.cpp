#include "rubricrank/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <set>
#include <sstream>

#include "rubricrank/error.hpp"

namespace rubricrank {

const std::string_view kSftHeader =
    "rubricrank sft v1: one object per (query, doc); fields query_id, doc_id, prompt, response, "
    "score, integrated_score, k, discarded";
const std::string_view kRewardHeader =
    "rubricrank rewards v1: one object per training sample; fields query_id, alpha, tau, "
    "positive, negative (each: doc_id, label, trajectories[text, score], intra, inter, "
    "composite, intra_pruned)";
const std::string_view kAuditHeader =
    "rubricrank audit v1: one object per (query, doc); fields query_id, doc_id, rank, "
    "prompt_sha256, weighting, integrated, failures, calls, trajectories[text, score, weight]";
const std::string_view kRolloutHeader =
    "rubricrank rollouts v1: one object per training sample; fields query_id, positive, negative "
    "(each: doc_id, trajectories[text, score|null])";

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(std::move(tok));
    return out;
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string required_string(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string()) throw nlohmann::json::type_error::create(302, std::string(key) + " must be a string", &j);
    return v.get<std::string>();
}

// Reads "<qid> <x> <docid> ..." style whitespace files line by line.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto cols = split_ws(line);
        if (cols.empty() || cols.front().front() == '#') continue;
        fn(cols, line_no);
    }
}

nlohmann::ordered_json group_json(const RolloutGroup& g) {
    nlohmann::ordered_json j;
    j["doc_id"] = g.doc_id;
    j["label"] = std::string(to_string(g.label));
    auto traj = nlohmann::ordered_json::array();
    for (const auto& r : g.trajectories) {
        nlohmann::ordered_json t;
        t["text"] = r.text;
        t["score"] = r.score ? nlohmann::ordered_json(*r.score) : nlohmann::ordered_json(nullptr);
        traj.push_back(std::move(t));
    }
    j["trajectories"] = std::move(traj);
    return j;
}

RolloutGroup group_from_json(const nlohmann::json& j, const std::string& query_id, Label label) {
    RolloutGroup g;
    g.query_id = query_id;
    g.doc_id = required_string(j, "doc_id");
    g.label = j.contains("label") ? parse_label(j.at("label").get<std::string>()) : label;
    if (g.label != label) throw Error(ErrorCode::InvalidArgument, "group label does not match its slot");
    for (const auto& t : j.at("trajectories")) {
        Rollout r;
        r.text = t.value("text", std::string{});
        if (t.contains("score") && !t.at("score").is_null()) r.score = t.at("score").get<int>();
        g.trajectories.push_back(std::move(r));
    }
    g.validate();
    return g;
}

}  // namespace

// ----- corpus -----------------------------------------------------------------

Corpus::Corpus() = default;
Corpus::Corpus(Corpus&&) noexcept = default;
Corpus& Corpus::operator=(Corpus&&) noexcept = default;
Corpus::~Corpus() = default;

Corpus Corpus::open(const fs::path& path) {
    Corpus c;
    c.path_ = path;
    c.mu_ = std::make_unique<std::mutex>();
    c.in_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*c.in_) throw Error(ErrorCode::IoError, "cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    std::uint64_t offset = 0;
    while (std::getline(*c.in_, line)) {
        ++line_no;
        const std::uint64_t length = line.size();
        const std::uint64_t start = offset;
        offset += length + 1;
        std::string_view body = line;
        if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
        if (body.empty() || body.front() == '#') continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
            const std::string id = required_string(j, "doc_id");
            if (trim_trailing_newline(required_string(j, "text")).empty()) {
                throw ParseError(path.string(), line_no, "document " + id + " has empty text");
            }
            if (!c.index_.emplace(id, Slot{start, length}).second) {
                throw ParseError(path.string(), line_no, "duplicate doc_id " + id);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    c.in_->clear();
    return c;
}

bool Corpus::contains(const std::string& doc_id) const { return index_.count(doc_id) > 0; }

std::string Corpus::text(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    if (it == index_.end()) {
        throw Error(ErrorCode::DanglingReference, "document " + doc_id + " not in corpus");
    }
    std::string line(it->second.length, '\0');
    {
        std::lock_guard lock(*mu_);
        in_->clear();
        in_->seekg(static_cast<std::streamoff>(it->second.offset));
        in_->read(line.data(), static_cast<std::streamsize>(line.size()));
        if (!*in_) throw Error(ErrorCode::IoError, "short read in " + path_.string());
    }
    return trim_trailing_newline(nlohmann::json::parse(line).at("text").get<std::string>());
}

// ----- simple loaders -----------------------------------------------------------

std::vector<Query> load_queries(const fs::path& path) {
    std::vector<Query> out;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        Query q{required_string(j, "query_id"), trim_trailing_newline(required_string(j, "text"))};
        if (q.text.empty()) throw ParseError(path.string(), line, "query " + q.query_id + " has empty text");
        if (!seen.insert(q.query_id).second) {
            throw ParseError(path.string(), line, "duplicate query_id " + q.query_id);
        }
        out.push_back(std::move(q));
    });
    return out;
}

std::vector<CandidateSet> load_candidates(const fs::path& path, std::size_t depth) {
    struct Row {
        long rank;
        CandidateEntry entry;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::vector<std::string> order;
    for_each_line(path, [&](const std::vector<std::string>& cols, std::size_t line) {
        if (cols.size() != 6) throw ParseError(path.string(), line, "expected 6 columns");
        Row r{};
        if (!parse_number(cols[3], r.rank)) throw ParseError(path.string(), line, "bad rank '" + cols[3] + "'");
        if (!parse_number(cols[4], r.entry.first_stage_score)) {
            throw ParseError(path.string(), line, "bad score '" + cols[4] + "'");
        }
        r.entry.doc_id = cols[2];
        auto [it, fresh] = rows.try_emplace(cols[0]);
        if (fresh) order.push_back(cols[0]);
        it->second.push_back(std::move(r));
    });

    std::vector<CandidateSet> out;
    out.reserve(order.size());
    for (const auto& qid : order) {
        auto& list = rows[qid];
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        CandidateSet cs{qid, {}};
        std::set<std::string> seen;
        for (auto& r : list) {
            if (cs.entries.size() >= depth) break;
            if (!seen.insert(r.entry.doc_id).second) {
                throw ParseError(path.string(), 0, "query " + qid + " lists " + r.entry.doc_id + " twice");
            }
            if (!cs.entries.empty() && r.entry.first_stage_score > cs.entries.back().first_stage_score) {
                throw ParseError(path.string(), 0,
                                 "query " + qid + ": first-stage scores increase with rank at " + r.entry.doc_id);
            }
            cs.entries.push_back(std::move(r.entry));
        }
        out.push_back(std::move(cs));
    }
    return out;
}

Qrels load_qrels(const fs::path& path) {
    Qrels q;
    for_each_line(path, [&](const std::vector<std::string>& cols, std::size_t line) {
        if (cols.size() != 4) throw ParseError(path.string(), line, "expected 4 columns");
        int rel = 0;
        if (!parse_number(cols[3], rel)) throw ParseError(path.string(), line, "bad relevance '" + cols[3] + "'");
        try {
            q.add(cols[0], cols[2], rel);
        } catch (const Error& e) {
            throw ParseError(path.string(), line, e.what());
        }
    });
    return q;
}

std::vector<TrainingSample> load_training_samples(const fs::path& path) {
    std::vector<TrainingSample> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        TrainingSample s{required_string(j, "query_id"), required_string(j, "positive_doc_id"),
                         required_string(j, "negative_doc_id")};
        if (s.positive_doc_id == s.negative_doc_id) {
            throw ParseError(path.string(), line, "positive and negative doc are identical");
        }
        out.push_back(std::move(s));
    });
    return out;
}

void write_training_samples(const fs::path& path, std::span<const TrainingSample> samples) {
    JsonlWriter w(path, "");
    for (const auto& s : samples) {
        nlohmann::ordered_json j;
        j["query_id"] = s.query_id;
        j["positive_doc_id"] = s.positive_doc_id;
        j["negative_doc_id"] = s.negative_doc_id;
        w.write(j);
    }
    w.close();
}

// ----- run files ----------------------------------------------------------------

std::string format_run(std::span<const RankedList> rankings, const std::string& tag) {
    if (tag.empty() || tag.find_first_of(" \t\n") != std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "run tag must be a non-empty token");
    }
    std::vector<const RankedList*> order;
    for (const auto& r : rankings) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto* a, const auto* b) { return a->query_id < b->query_id; });
    std::string out;
    for (const auto* r : order) {
        std::size_t rank = 0;
        for (const auto& e : r->entries) {
            out += r->query_id;
            out += " Q0 ";
            out += e.doc_id;
            out += ' ';
            out += std::to_string(++rank);
            out += ' ';
            out += e.failed ? std::string("-1") : format_double(e.score);
            out += ' ';
            out += tag;
            out += '\n';
        }
    }
    return out;
}

void write_run_file(const fs::path& path, std::span<const RankedList> rankings, const std::string& tag) {
    const std::string body = format_run(rankings, tag);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << body;
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<RankedList> load_run_file(const fs::path& path) {
    struct Row {
        long rank;
        RankedEntry entry;
    };
    std::map<std::string, std::vector<Row>> rows;
    for_each_line(path, [&](const std::vector<std::string>& cols, std::size_t line) {
        if (cols.size() != 6) throw ParseError(path.string(), line, "expected 6 columns");
        Row r{};
        double score = 0.0;
        if (!parse_number(cols[3], r.rank)) throw ParseError(path.string(), line, "bad rank '" + cols[3] + "'");
        if (!parse_number(cols[4], score)) throw ParseError(path.string(), line, "bad score '" + cols[4] + "'");
        r.entry.doc_id = cols[2];
        r.entry.failed = score < 0.0;
        r.entry.score = r.entry.failed ? 0.0 : score;
        rows[cols[0]].push_back(std::move(r));
    });
    std::vector<RankedList> out;
    for (auto& [qid, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        RankedList rl{qid, {}};
        for (auto& r : list) rl.entries.push_back(std::move(r.entry));
        out.push_back(std::move(rl));
    }
    return out;
}

// ----- datasets -----------------------------------------------------------------

DatasetPaths DatasetPaths::under(const fs::path& root, const std::string& name) {
    const fs::path dir = root / name;
    return DatasetPaths{name, dir / "queries.jsonl", dir / "corpus.jsonl", dir / "candidates.run",
                        dir / "qrels.txt"};
}

std::vector<std::string> discover_datasets(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw Error(ErrorCode::IoError, "dataset root " + root.string() + " is not a directory");
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "queries.jsonl")) {
            names.push_back(entry.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

const Query* Dataset::query(const std::string& query_id) const {
    auto it = query_index_.find(query_id);
    return it == query_index_.end() ? nullptr : &queries[it->second];
}

Dataset load_dataset(const DatasetPaths& paths, const RubricConfig& rubrics, const LoadOptions& options) {
    Dataset ds;
    ds.name = paths.name;
    ds.rubric = rubrics.at(paths.name);
    ds.queries = load_queries(paths.queries);
    ds.corpus = Corpus::open(paths.corpus);
    ds.qrels = load_qrels(paths.qrels);
    for (std::size_t i = 0; i < ds.queries.size(); ++i) ds.query_index_[ds.queries[i].query_id] = i;

    auto note = [&](const std::string& what) {
        if (options.strict) throw Error(ErrorCode::DanglingReference, what);
        if (ds.dangling.examples.size() < 5) ds.dangling.examples.push_back(what);
    };
    for (auto& cs : load_candidates(paths.candidates, options.depth)) {
        if (!ds.query(cs.query_id)) {
            note("candidate query " + cs.query_id + " not in queries");
            ++ds.dangling.candidate_queries;
            continue;
        }
        CandidateSet kept{cs.query_id, {}};
        for (auto& e : cs.entries) {
            if (!ds.corpus.contains(e.doc_id)) {
                note("candidate doc " + e.doc_id + " (query " + cs.query_id + ") not in corpus");
                ++ds.dangling.candidate_docs;
                continue;
            }
            kept.entries.push_back(std::move(e));
        }
        ds.candidates.push_back(std::move(kept));
    }
    return ds;
}

std::vector<TrainingSample> sample_training_pairs(const Dataset& dataset, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](const std::vector<std::string>& pool) -> const std::string& {
        return pool[static_cast<std::size_t>(rng() % pool.size())];
    };
    std::vector<TrainingSample> out;
    for (const auto& q : dataset.queries) {
        std::vector<std::string> pos, neg;
        if (const auto* judged = dataset.qrels.judgments(q.query_id)) {
            for (const auto& [doc, rel] : *judged) {
                if (!dataset.corpus.contains(doc)) continue;
                (rel > 0 ? pos : neg).push_back(doc);
            }
        }
        for (const auto& cs : dataset.candidates) {
            if (cs.query_id != q.query_id) continue;
            for (const auto& e : cs.entries) {
                if (!dataset.qrels.judged(q.query_id, e.doc_id)) neg.push_back(e.doc_id);
            }
        }
        if (pos.empty() || neg.empty()) continue;
        const std::string& p = pick(pos);
        const std::string& n = pick(neg);
        out.push_back(TrainingSample{q.query_id, p, n});
    }
    return out;
}

// ----- audit ------------------------------------------------------------------

nlohmann::ordered_json audit_record(const ScoredCandidate& s, std::size_t rank) {
    nlohmann::ordered_json j;
    j["query_id"] = s.query_id;
    j["doc_id"] = s.doc_id;
    j["rank"] = rank;
    j["prompt_sha256"] = s.prompt_sha256;
    j["weighting"] = std::string(to_string(s.integrated ? s.integrated->weighting : Weighting::uniform));
    j["integrated"] = s.integrated ? nlohmann::ordered_json(s.integrated->value) : nlohmann::ordered_json(nullptr);
    j["failures"] = s.failure_count;
    j["calls"] = s.backend_calls;
    auto traj = nlohmann::ordered_json::array();
    for (const auto& t : s.trajectories) {
        nlohmann::ordered_json tj;
        tj["text"] = t.text;
        tj["score"] = t.score;
        if (t.weight) tj["weight"] = *t.weight;
        traj.push_back(std::move(tj));
    }
    j["trajectories"] = std::move(traj);
    return j;
}

ScoredCandidate audit_from_json(const nlohmann::json& j) {
    ScoredCandidate s;
    s.query_id = required_string(j, "query_id");
    s.doc_id = required_string(j, "doc_id");
    s.prompt_sha256 = j.value("prompt_sha256", std::string{});
    s.failure_count = j.value("failures", std::size_t{0});
    s.backend_calls = j.value("calls", std::size_t{0});
    for (const auto& tj : j.at("trajectories")) {
        Trajectory t{tj.value("text", std::string{}), tj.at("score").get<int>(), std::nullopt};
        if (tj.contains("weight")) t.weight = tj.at("weight").get<double>();
        s.trajectories.push_back(std::move(t));
    }
    if (!j.at("integrated").is_null()) {
        s.integrated = IntegratedScore{j.at("integrated").get<double>(), s.trajectories.size(),
                                       parse_weighting(j.value("weighting", std::string("uniform")))};
    }
    return s;
}

std::size_t write_audit_file(const fs::path& path, std::span<const RerankResult> results) {
    std::vector<const RerankResult*> order;
    for (const auto& r : results) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        return a->ranking.query_id < b->ranking.query_id;
    });
    JsonlWriter w(path, kAuditHeader);
    for (const auto* r : order) {
        std::map<std::string_view, const ScoredCandidate*> by_doc;
        for (const auto& c : r->candidates) by_doc[c.doc_id] = &c;
        std::size_t rank = 0;
        for (const auto& e : r->ranking.entries) w.write(audit_record(*by_doc.at(e.doc_id), ++rank));
    }
    w.close();
    return w.count();
}

std::vector<ScoredCandidate> load_audit_file(const fs::path& path) {
    std::vector<ScoredCandidate> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) { out.push_back(audit_from_json(j)); });
    return out;
}

// ----- SFT / reward exports -----------------------------------------------------

nlohmann::ordered_json sft_record(const SftTuple& t) {
    nlohmann::ordered_json j;
    j["query_id"] = t.query_id;
    j["doc_id"] = t.doc_id;
    j["prompt"] = t.prompt.text;
    j["response"] = t.trajectory.text;
    j["score"] = t.trajectory.score;
    j["integrated_score"] = t.integrated.value;
    j["k"] = t.integrated.k;
    j["discarded"] = t.discarded;
    return j;
}

SftTuple sft_from_json(const nlohmann::json& j) {
    SftTuple t;
    t.query_id = required_string(j, "query_id");
    t.doc_id = required_string(j, "doc_id");
    t.prompt.text = required_string(j, "prompt");
    t.trajectory.text = required_string(j, "response");
    t.trajectory.score = j.at("score").get<int>();
    t.integrated.value = j.at("integrated_score").get<double>();
    t.integrated.k = j.at("k").get<std::size_t>();
    t.integrated.weighting = Weighting::uniform;
    t.discarded = j.value("discarded", std::size_t{0});
    return t;
}

nlohmann::ordered_json reward_record(const RewardExport& rec) {
    auto side = [](const RolloutGroup& g, const RewardRecord& r) {
        auto j = group_json(g);
        j["intra"] = r.intra;
        j["inter"] = r.inter;
        j["composite"] = r.composite;
        j["intra_pruned"] = r.intra_pruned;
        return j;
    };
    nlohmann::ordered_json j;
    j["query_id"] = rec.query_id;
    j["alpha"] = rec.config.alpha;
    j["tau"] = rec.config.tau;
    j["positive"] = side(rec.positive, rec.rewards.positive);
    j["negative"] = side(rec.negative, rec.rewards.negative);
    return j;
}

RewardExport reward_from_json(const nlohmann::json& j) {
    RewardExport rec;
    rec.query_id = required_string(j, "query_id");
    rec.config.alpha = j.at("alpha").get<double>();
    rec.config.tau = j.at("tau").get<double>();
    rec.positive = group_from_json(j.at("positive"), rec.query_id, Label::positive);
    rec.negative = group_from_json(j.at("negative"), rec.query_id, Label::negative);
    rec.config.n = rec.positive.trajectories.size();
    auto side = [](const nlohmann::json& sj, const RolloutGroup& g) {
        RewardRecord r;
        r.query_id = g.query_id;
        r.doc_id = g.doc_id;
        r.label = g.label;
        r.intra = sj.at("intra").get<std::vector<double>>();
        r.inter = sj.at("inter").get<std::vector<double>>();
        r.composite = sj.at("composite").get<std::vector<double>>();
        r.intra_pruned = sj.value("intra_pruned", false);
        return r;
    };
    rec.rewards.positive = side(j.at("positive"), rec.positive);
    rec.rewards.negative = side(j.at("negative"), rec.negative);
    return rec;
}

nlohmann::ordered_json rollout_record(const RolloutSample& s) {
    nlohmann::ordered_json j;
    j["query_id"] = s.query_id;
    j["positive"] = group_json(s.positive);
    j["negative"] = group_json(s.negative);
    return j;
}

std::vector<RolloutSample> load_rollouts(const fs::path& path) {
    std::vector<RolloutSample> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        RolloutSample s;
        s.query_id = required_string(j, "query_id");
        try {
            s.positive = group_from_json(j.at("positive"), s.query_id, Label::positive);
            s.negative = group_from_json(j.at("negative"), s.query_id, Label::negative);
        } catch (const Error& e) {
            throw ParseError(path.string(), line, e.what());
        }
        out.push_back(std::move(s));
    });
    return out;
}

ExportCounts export_training_artifacts(const fs::path& dir, std::span<const SftTuple> sft,
                                       std::span<const RewardExport> rewards) {
    fs::create_directories(dir);
    ExportCounts counts;
    {
        JsonlWriter w(dir / "sft.jsonl", kSftHeader);
        for (const auto& t : sft) w.write(sft_record(t));
        w.close();
        counts.sft = w.count();
    }
    {
        JsonlWriter w(dir / "rewards.jsonl", kRewardHeader);
        for (const auto& r : rewards) w.write(reward_record(r));
        w.close();
        counts.rewards = w.count();
    }
    return counts;
}

}  // namespace rubricrank
