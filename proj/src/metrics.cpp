#include "rubricrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "rubricrank/error.hpp"

namespace rubricrank {

namespace {

double gain(int relevance) { return std::ldexp(1.0, relevance) - 1.0; }

double discount(std::size_t rank) { return std::log2(static_cast<double>(rank) + 1.0); }

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double mean_of(const std::map<std::string, double>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [_, v] : values) sum += v;
    return sum / static_cast<double>(values.size());
}

void recompute_macro(MetricReport& report) {
    if (report.datasets.empty()) {
        report.macro_average = 0.0;
        return;
    }
    double sum = 0.0;
    for (const auto& [_, d] : report.datasets) sum += d.mean;
    report.macro_average = sum / static_cast<double>(report.datasets.size());
}

}  // namespace

void Qrels::add(const std::string& query_id, const std::string& doc_id, int relevance) {
    if (relevance < 0) {
        throw Error(ErrorCode::InvalidArgument, "negative relevance for (" + query_id + ", " + doc_id + ")");
    }
    auto [it, inserted] = data_[query_id].emplace(doc_id, relevance);
    if (!inserted) {
        throw Error(ErrorCode::ParseError, "duplicate judgment for (" + query_id + ", " + doc_id + ")");
    }
}

int Qrels::relevance(const std::string& query_id, const std::string& doc_id) const {
    auto q = data_.find(query_id);
    if (q == data_.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool Qrels::judged(const std::string& query_id, const std::string& doc_id) const {
    auto q = data_.find(query_id);
    return q != data_.end() && q->second.count(doc_id) > 0;
}

bool Qrels::has_query(const std::string& query_id) const { return data_.count(query_id) > 0; }

const std::map<std::string, int>* Qrels::judgments(const std::string& query_id) const {
    auto q = data_.find(query_id);
    return q == data_.end() ? nullptr : &q->second;
}

std::size_t Qrels::size() const {
    std::size_t n = 0;
    for (const auto& [_, docs] : data_) n += docs.size();
    return n;
}

double ndcg_at_k(const RankedList& ranking, const Qrels& qrels, std::size_t k, bool strict) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "nDCG cutoff k must be >= 1");
    const auto* judged = qrels.judgments(ranking.query_id);
    if (judged == nullptr) {
        if (strict) {
            throw Error(ErrorCode::UnknownQuery, "no judgments for query " + ranking.query_id);
        }
        return 0.0;
    }

    std::vector<int> ideal;
    ideal.reserve(judged->size());
    for (const auto& [_, rel] : *judged) ideal.push_back(rel);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) idcg += gain(ideal[r]) / discount(r + 1);
    if (idcg == 0.0) return 0.0;

    // A document retrieved twice only counts at its first rank.
    std::unordered_set<std::string_view> seen;
    double dcg = 0.0;
    std::size_t rank = 0;
    for (const auto& e : ranking.entries) {
        if (!seen.insert(e.doc_id).second) continue;
        if (++rank > k) break;
        auto it = judged->find(e.doc_id);
        if (it != judged->end()) dcg += gain(it->second) / discount(rank);
    }
    return dcg / idcg;
}

void add_dataset(MetricReport& report, const std::string& dataset,
                 std::span<const RankedList> rankings, const Qrels& qrels, bool strict) {
    DatasetMetrics dm;
    for (const auto& r : rankings) {
        if (dm.per_query.count(r.query_id)) {
            throw Error(ErrorCode::InvalidArgument, "query " + r.query_id + " ranked twice in " + dataset);
        }
        dm.per_query[r.query_id] = ndcg_at_k(r, qrels, report.k, strict);
        const auto* judged = qrels.judgments(r.query_id);
        const bool any_relevant =
            judged && std::any_of(judged->begin(), judged->end(), [](const auto& kv) { return kv.second > 0; });
        if (!any_relevant) dm.zero_relevant_queries.push_back(r.query_id);
    }
    dm.mean = mean_of(dm.per_query);
    report.datasets[dataset] = std::move(dm);
    recompute_macro(report);
}

std::string MetricReport::to_json_text() const {
    nlohmann::ordered_json j;
    j["metric"] = "ndcg@" + std::to_string(k);
    j["k"] = k;
    j["macro_average"] = macro_average;
    j["datasets"] = nlohmann::ordered_json::object();
    for (const auto& [name, d] : datasets) {
        nlohmann::ordered_json dj;
        dj["mean"] = d.mean;
        dj["queries"] = d.per_query.size();
        dj["zero_relevant_queries"] = d.zero_relevant_queries;
        dj["per_query"] = nlohmann::ordered_json::object();
        for (const auto& [q, v] : d.per_query) dj["per_query"][q] = v;
        j["datasets"][name] = std::move(dj);
    }
    return j.dump(2) + "\n";
}

MetricReport MetricReport::from_json_text(const std::string& text, const std::string& origin) {
    MetricReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        r.k = j.at("k").get<std::size_t>();
        for (const auto& [name, dj] : j.at("datasets").items()) {
            DatasetMetrics d;
            for (const auto& [q, v] : dj.at("per_query").items()) d.per_query[q] = v.get<double>();
            d.zero_relevant_queries = dj.value("zero_relevant_queries", std::vector<std::string>{});
            d.mean = mean_of(d.per_query);
            r.datasets[name] = std::move(d);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin, 0, e.what());
    }
    recompute_macro(r);
    return r;
}

std::string MetricReport::summary() const {
    std::ostringstream os;
    os << "nDCG@" << k << "\n";
    std::size_t width = 7;
    for (const auto& [name, _] : datasets) width = std::max(width, name.size());
    auto pad = [&](const std::string& s) { return s + std::string(width - s.size() + 2, ' '); };
    os << pad("dataset") << "queries  zero-rel  mean\n";
    for (const auto& [name, d] : datasets) {
        const std::string q = std::to_string(d.per_query.size());
        const std::string z = std::to_string(d.zero_relevant_queries.size());
        os << pad(name) << q << std::string(9 - std::min<std::size_t>(q.size(), 8), ' ') << z
           << std::string(10 - std::min<std::size_t>(z.size(), 9), ' ') << fixed(d.mean, 4) << "\n";
    }
    os << pad("avg") << std::string(19, ' ') << fixed(macro_average, 4) << "\n";
    return os.str();
}

ComparisonTable compare_runs(std::span<const MetricReport> runs, std::span<const std::string> labels) {
    if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to compare");
    if (!labels.empty() && labels.size() != runs.size()) {
        throw Error(ErrorCode::InvalidArgument, "one label per run required");
    }
    const auto& base = runs.front();
    for (std::size_t i = 1; i < runs.size(); ++i) {
        const auto& other = runs[i];
        if (other.k != base.k) {
            throw Error(ErrorCode::MismatchedQueries, "runs use different cutoffs");
        }
        if (other.datasets.size() != base.datasets.size()) {
            throw Error(ErrorCode::MismatchedQueries, "runs cover different datasets");
        }
        for (const auto& [name, d] : base.datasets) {
            auto it = other.datasets.find(name);
            if (it == other.datasets.end()) {
                throw Error(ErrorCode::MismatchedQueries, "dataset " + name + " missing from run " +
                                                              std::to_string(i));
            }
            const auto& od = it->second.per_query;
            const bool same = od.size() == d.per_query.size() &&
                              std::equal(od.begin(), od.end(), d.per_query.begin(),
                                         [](const auto& a, const auto& b) { return a.first == b.first; });
            if (!same) {
                throw Error(ErrorCode::MismatchedQueries,
                            "dataset " + name + " has a different query set in run " + std::to_string(i));
            }
        }
    }

    ComparisonTable table;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        table.run_labels.push_back(labels.empty() ? "run" + std::to_string(i) : labels[i]);
    }
    auto add_row = [&](const std::string& name, auto value_of) {
        ComparisonRow row;
        row.dataset = name;
        for (const auto& r : runs) row.values.push_back(value_of(r));
        for (double v : row.values) row.deltas.push_back(v - row.values.front());
        table.rows.push_back(std::move(row));
    };
    for (const auto& [name, _] : base.datasets) {
        add_row(name, [&](const MetricReport& r) { return r.datasets.at(name).mean; });
    }
    add_row("avg", [](const MetricReport& r) { return r.macro_average; });
    return table;
}

std::string ComparisonTable::to_tsv() const {
    std::ostringstream os;
    os << "dataset";
    for (const auto& l : run_labels) os << '\t' << l;
    for (std::size_t i = 1; i < run_labels.size(); ++i) os << "\tdelta_" << run_labels[i];
    os << '\n';
    for (const auto& row : rows) {
        os << row.dataset;
        for (double v : row.values) os << '\t' << fixed(v, 6);
        for (std::size_t i = 1; i < row.deltas.size(); ++i) os << '\t' << fixed(row.deltas[i], 6);
        os << '\n';
    }
    return os.str();
}

std::string ComparisonTable::to_text() const {
    std::size_t w = 7;
    for (const auto& r : rows) w = std::max(w, r.dataset.size());
    std::size_t cw = 9;
    for (const auto& l : run_labels) cw = std::max(cw, l.size() + 6);
    auto cell = [](const std::string& s, std::size_t width) {
        return s.size() >= width ? s + " " : std::string(width - s.size(), ' ') + s;
    };
    std::ostringstream os;
    os << std::string(w - 7 + 0, ' ') << "dataset";
    for (const auto& l : run_labels) os << cell(l, cw);
    for (std::size_t i = 1; i < run_labels.size(); ++i) os << cell("d(" + run_labels[i] + ")", cw);
    os << '\n';
    for (const auto& row : rows) {
        os << std::string(w - row.dataset.size(), ' ') << row.dataset;
        for (double v : row.values) os << cell(fixed(v, 4), cw);
        for (std::size_t i = 1; i < row.deltas.size(); ++i) {
            os << cell((row.deltas[i] >= 0 ? "+" : "") + fixed(row.deltas[i], 4), cw);
        }
        os << '\n';
    }
    return os.str();
}

std::size_t ScoreDistribution::positive_total() const {
    std::size_t n = 0;
    for (auto c : positive) n += c;
    return n;
}

std::size_t ScoreDistribution::negative_total() const {
    std::size_t n = 0;
    for (auto c : negative) n += c;
    return n;
}

std::string ScoreDistribution::to_tsv() const {
    std::ostringstream os;
    os << "bucket_low\tbucket_high\tclass\tcount\n";
    for (const auto* cls : {"positive", "negative"}) {
        const auto& counts = std::string_view(cls) == "positive" ? positive : negative;
        for (std::size_t b = 0; b < counts.size(); ++b) {
            os << b * bucket_width << '\t' << (b + 1) * bucket_width << '\t' << cls << '\t'
               << counts[b] << '\n';
        }
    }
    return os.str();
}

ScoreDistribution score_distribution(std::span<const ScoredPairView> scored, const Qrels& qrels,
                                     int bucket_width) {
    if (bucket_width <= 0 || bucket_width > 100 || 100 % bucket_width != 0) {
        throw Error(ErrorCode::InvalidArgument,
                    "bucket width must divide 100, got " + std::to_string(bucket_width));
    }
    ScoreDistribution dist;
    dist.bucket_width = bucket_width;
    const std::size_t buckets = static_cast<std::size_t>(100 / bucket_width);
    dist.positive.assign(buckets, 0);
    dist.negative.assign(buckets, 0);
    for (const auto& s : scored) {
        if (!s.integrated) {
            ++dist.skipped_failed;
            continue;
        }
        if (!qrels.judged(s.query_id, s.doc_id)) {
            ++dist.skipped_unjudged;
            continue;
        }
        const double v = std::clamp(*s.integrated, 0.0, 100.0);
        const auto b = std::min(buckets - 1, static_cast<std::size_t>(v / bucket_width));
        auto& counts = qrels.relevance(s.query_id, s.doc_id) > 0 ? dist.positive : dist.negative;
        ++counts[b];
    }
    return dist;
}

SeparationSummary separation_summary(std::span<const ScoredPairView> scored, const Qrels& qrels,
                                     double high, double low) {
    SeparationSummary out;
    std::size_t above = 0, below = 0;
    for (const auto& s : scored) {
        if (!s.integrated || !qrels.judged(s.query_id, s.doc_id)) continue;
        if (qrels.relevance(s.query_id, s.doc_id) > 0) {
            ++out.positives;
            above += *s.integrated > high ? 1 : 0;
        } else {
            ++out.negatives;
            below += *s.integrated < low ? 1 : 0;
        }
    }
    if (out.positives) out.positive_above = double(above) / double(out.positives);
    if (out.negatives) out.negative_below = double(below) / double(out.negatives);
    return out;
}

}  // namespace rubricrank
