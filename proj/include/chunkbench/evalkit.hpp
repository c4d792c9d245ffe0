#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chunkbench/error.hpp"
#include "chunkbench/hashing.hpp"

namespace chunkbench {

// ---------------------------------------------------------------------------
// Qrels: graded relevance judgments on a 0/1/2 scale
// ---------------------------------------------------------------------------

struct Qrels {
    // query_id -> chunk_id -> grade
    std::map<std::string, std::map<std::string, int>> grades;

    int grade_of(const std::string& query_id, const std::string& chunk_id) const {
        auto q = grades.find(query_id);
        if (q == grades.end())
            return 0;
        auto c = q->second.find(chunk_id);
        return c == q->second.end() ? 0 : c->second;
    }

    bool has_query(const std::string& query_id) const { return grades.count(query_id) > 0; }

    void add(const std::string& query_id, const std::string& chunk_id, int grade) {
        if (grade < 0 || grade > 2)
            throw Error("relevance grade out of range {0,1,2}: " + std::to_string(grade));
        auto [it, inserted] = grades[query_id].emplace(chunk_id, grade);
        if (!inserted)
            throw Error("duplicate qrels pair (" + query_id + ", " + chunk_id + ")");
    }
};

namespace detail {

inline std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

inline bool parse_int(const std::string& s, long& value) {
    if (s.empty())
        return false;
    size_t pos = 0;
    try {
        value = std::stol(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

inline bool parse_double(const std::string& s, double& value) {
    if (s.empty())
        return false;
    size_t pos = 0;
    try {
        value = std::stod(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

inline std::string format_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

template <typename Fn>
inline void for_each_line(const std::string& text, Fn&& fn) {
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos)
            eol = text.size();
        ++line_no;
        fn(std::string_view(text.data() + pos, eol - pos), line_no);
        pos = eol + 1;
    }
}

} // namespace detail

// Four whitespace-separated columns: query_id, the literal "0", chunk_id, grade.
inline Qrels parse_qrels(const std::string& text) {
    Qrels qrels;
    detail::for_each_line(text, [&](std::string_view line, size_t line_no) {
        auto cols = detail::split_ws(line);
        if (cols.empty())
            return;  // blank line
        if (cols.size() != 4)
            throw Error("qrels line " + std::to_string(line_no) + ": expected 4 columns, got " +
                        std::to_string(cols.size()));
        if (cols[1] != "0")
            throw Error("qrels line " + std::to_string(line_no) +
                        ": second column must be the literal \"0\"");
        long grade = 0;
        if (!detail::parse_int(cols[3], grade) || grade < 0 || grade > 2)
            throw Error("qrels line " + std::to_string(line_no) + ": grade must be 0, 1 or 2");
        try {
            qrels.add(cols[0], cols[2], static_cast<int>(grade));
        } catch (const Error& e) {
            throw Error("qrels line " + std::to_string(line_no) + ": " + e.what());
        }
    });
    return qrels;
}

// Canonical order: (query_id, chunk_id) ascending.
inline std::string write_qrels(const Qrels& qrels) {
    std::string out;
    for (const auto& [query_id, chunks] : qrels.grades) {
        for (const auto& [chunk_id, grade] : chunks) {
            out += query_id;
            out += " 0 ";
            out += chunk_id;
            out += ' ';
            out += std::to_string(grade);
            out.push_back('\n');
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run: per-query ranked retrieval output, TREC 6-column layout
// ---------------------------------------------------------------------------

struct RunEntry {
    std::string chunk_id;
    double score = 0.0;
};

struct Run {
    std::string run_tag;
    // query_id -> entries ordered by rank (rank 1 first)
    std::map<std::string, std::vector<RunEntry>> ranking;
};

// Six columns: query_id Q0 chunk_id rank score tag. Ranks must be contiguous
// from 1 per query, chunk_ids unique per query, scores non-increasing.
inline Run parse_run(const std::string& text) {
    struct Item {
        long rank;
        std::string chunk_id;
        double score;
        size_t line_no;
    };
    Run run;
    std::map<std::string, std::vector<Item>> items;
    detail::for_each_line(text, [&](std::string_view line, size_t line_no) {
        auto cols = detail::split_ws(line);
        if (cols.empty())
            return;
        if (cols.size() != 6)
            throw Error("run line " + std::to_string(line_no) + ": expected 6 columns, got " +
                        std::to_string(cols.size()));
        long rank = 0;
        double score = 0;
        if (!detail::parse_int(cols[3], rank))
            throw Error("run line " + std::to_string(line_no) + ": rank is not an integer");
        if (!detail::parse_double(cols[4], score))
            throw Error("run line " + std::to_string(line_no) + ": score is not a number");
        if (run.run_tag.empty())
            run.run_tag = cols[5];
        else if (run.run_tag != cols[5])
            throw Error("run line " + std::to_string(line_no) + ": tag \"" + cols[5] +
                        "\" differs from \"" + run.run_tag + "\"");
        items[cols[0]].push_back({rank, cols[2], score, line_no});
    });
    for (auto& [query_id, list] : items) {
        std::stable_sort(list.begin(), list.end(),
                         [](const Item& a, const Item& b) { return a.rank < b.rank; });
        std::set<std::string> seen;
        std::vector<RunEntry> entries;
        for (size_t i = 0; i < list.size(); ++i) {
            if (list[i].rank != static_cast<long>(i) + 1)
                throw Error("run line " + std::to_string(list[i].line_no) + ": rank " +
                            std::to_string(list[i].rank) + " for query " + query_id +
                            " breaks 1..n contiguity");
            if (!seen.insert(list[i].chunk_id).second)
                throw Error("run line " + std::to_string(list[i].line_no) + ": duplicate chunk " +
                            list[i].chunk_id + " for query " + query_id);
            if (i > 0 && list[i].score > list[i - 1].score)
                throw Error("run line " + std::to_string(list[i].line_no) +
                            ": scores increase with rank for query " + query_id);
            entries.push_back({list[i].chunk_id, list[i].score});
        }
        run.ranking[query_id] = std::move(entries);
    }
    return run;
}

inline std::string write_run(const Run& run) {
    std::string out;
    for (const auto& [query_id, entries] : run.ranking) {
        for (size_t i = 0; i < entries.size(); ++i) {
            out += query_id;
            out += " Q0 ";
            out += entries[i].chunk_id;
            out += ' ';
            out += std::to_string(i + 1);
            out += ' ';
            out += detail::format_score(entries[i].score);
            out += ' ';
            out += run.run_tag;
            out.push_back('\n');
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

struct PoolConfig {
    size_t depth = 10;

    void validate() const {
        if (depth < 1)
            throw Error("pool depth must be >= 1");
    }
};

// Union of each run's top-depth chunk_ids per query, deduplicated, sorted.
inline std::vector<std::pair<std::string, std::string>>
pool_runs(const std::vector<Run>& runs, const PoolConfig& cfg) {
    cfg.validate();
    if (runs.empty())
        throw Error("pooling requires at least one run");
    std::map<std::string, std::set<std::string>> pool;
    for (const Run& run : runs) {
        for (const auto& [query_id, entries] : run.ranking) {
            auto& bucket = pool[query_id];
            for (size_t i = 0; i < entries.size() && i < cfg.depth; ++i)
                bucket.insert(entries[i].chunk_id);
        }
    }
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [query_id, chunks] : pool)
        for (const auto& chunk_id : chunks)
            out.emplace_back(query_id, chunk_id);
    return out;
}

inline std::string write_pool(const std::vector<std::pair<std::string, std::string>>& pool) {
    std::string out;
    for (const auto& [q, c] : pool) {
        out += q;
        out.push_back('\t');
        out += c;
        out.push_back('\n');
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graded relevance metrics
// ---------------------------------------------------------------------------

struct EvalConfig {
    std::vector<size_t> cutoffs = {3, 5};
    int relevance_threshold = 1;  // minimum grade counted relevant for MRR/MAP/F1

    void validate() const {
        if (cutoffs.empty())
            throw Error("eval cutoffs must be non-empty");
        for (size_t i = 0; i < cutoffs.size(); ++i) {
            if (cutoffs[i] == 0)
                throw Error("eval cutoffs must be positive");
            if (i > 0 && cutoffs[i] <= cutoffs[i - 1])
                throw Error("eval cutoffs must be strictly increasing");
        }
        if (relevance_threshold < 1 || relevance_threshold > 2)
            throw Error("relevance threshold must be 1 or 2");
    }
};

inline double dcg_gain(int grade) {
    return std::pow(2.0, static_cast<double>(grade)) - 1.0;
}

// DCG@k with exponential gain over log2(rank+1) discount; IDCG from the best
// ordering of all judged grades. 0 when IDCG is 0. Unjudged ranks carry
// grade 0 in `ranked`.
inline double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& judged,
                        size_t k) {
    if (k < 1)
        throw Error("ndcg cutoff must be >= 1");
    double dcg = 0;
    for (size_t i = 0; i < ranked.size() && i < k; ++i)
        dcg += dcg_gain(ranked[i]) / std::log2(static_cast<double>(i) + 2.0);
    std::vector<int> ideal(judged);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0;
    for (size_t i = 0; i < ideal.size() && i < k; ++i)
        idcg += dcg_gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
    if (idcg == 0)
        return 0;
    return dcg / idcg;
}

// 1/rank of the first grade >= threshold, 0 when none retrieved.
inline double reciprocal_rank(const std::vector<int>& ranked, int threshold) {
    for (size_t i = 0; i < ranked.size(); ++i)
        if (ranked[i] >= threshold)
            return 1.0 / static_cast<double>(i + 1);
    return 0;
}

// AP@k = sum of Precision@i over relevant positions i <= k, over min(R, k).
// R is the total number of relevant judgments for the query.
inline double map_at_k(const std::vector<int>& ranked, size_t total_relevant, size_t k,
                       int threshold) {
    if (k < 1)
        throw Error("map cutoff must be >= 1");
    if (total_relevant == 0)
        throw Error("map is undefined for queries with no relevant judgments");
    double sum = 0;
    size_t hits = 0;
    for (size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (ranked[i] >= threshold) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(std::min(total_relevant, k));
}

inline double f1_at_k(const std::vector<int>& ranked, size_t total_relevant, size_t k,
                      int threshold) {
    if (k < 1)
        throw Error("f1 cutoff must be >= 1");
    if (total_relevant == 0)
        throw Error("f1 is undefined for queries with no relevant judgments");
    size_t hits = 0;
    for (size_t i = 0; i < ranked.size() && i < k; ++i)
        if (ranked[i] >= threshold)
            ++hits;
    const double precision = static_cast<double>(hits) / static_cast<double>(k);
    const double recall = static_cast<double>(hits) / static_cast<double>(total_relevant);
    if (precision + recall == 0)
        return 0;
    return 2.0 * precision * recall / (precision + recall);
}

// ---------------------------------------------------------------------------
// Per-run evaluation
// ---------------------------------------------------------------------------

struct MetricReport {
    std::vector<std::string> columns;  // "MRR", "NDCG@3", ... in report order
    std::map<std::string, std::map<std::string, double>> per_query;
    std::map<std::string, double> means;
    size_t evaluated = 0;
    size_t skipped = 0;  // queries with no judgments or no relevant judgments
};

inline std::vector<std::string> metric_columns(const EvalConfig& cfg) {
    std::vector<std::string> cols = {"MRR"};
    for (const char* name : {"NDCG", "MAP", "F1"})
        for (size_t k : cfg.cutoffs)
            cols.push_back(std::string(name) + "@" + std::to_string(k));
    return cols;
}

// Queries with no relevant judgments (grade >= threshold) are skipped and
// counted; unjudged retrieved chunks count as grade 0.
inline MetricReport evaluate(const Run& run, const Qrels& qrels, const EvalConfig& cfg) {
    cfg.validate();
    MetricReport report;
    report.columns = metric_columns(cfg);

    for (const auto& [query_id, entries] : run.ranking) {
        auto judged_it = qrels.grades.find(query_id);
        if (judged_it == qrels.grades.end()) {
            ++report.skipped;
            continue;
        }
        std::vector<int> judged;
        size_t total_relevant = 0;
        for (const auto& [chunk_id, grade] : judged_it->second) {
            judged.push_back(grade);
            if (grade >= cfg.relevance_threshold)
                ++total_relevant;
        }
        if (total_relevant == 0) {
            ++report.skipped;
            continue;
        }
        std::vector<int> ranked;
        ranked.reserve(entries.size());
        for (const auto& e : entries)
            ranked.push_back(qrels.grade_of(query_id, e.chunk_id));

        auto& row = report.per_query[query_id];
        row["MRR"] = reciprocal_rank(ranked, cfg.relevance_threshold);
        for (size_t k : cfg.cutoffs) {
            row["NDCG@" + std::to_string(k)] = ndcg_at_k(ranked, judged, k);
            row["MAP@" + std::to_string(k)] =
                map_at_k(ranked, total_relevant, k, cfg.relevance_threshold);
            row["F1@" + std::to_string(k)] =
                f1_at_k(ranked, total_relevant, k, cfg.relevance_threshold);
        }
        ++report.evaluated;
    }

    for (const auto& col : report.columns) {
        double sum = 0;
        for (const auto& [query_id, row] : report.per_query)
            sum += row.at(col);
        report.means[col] =
            report.evaluated == 0 ? 0.0 : sum / static_cast<double>(report.evaluated);
    }
    return report;
}

inline std::string write_metric_csv(const MetricReport& report) {
    std::string out = "# evaluated=" + std::to_string(report.evaluated) +
                      " skipped=" + std::to_string(report.skipped) + "\n";
    out += "query_id";
    for (const auto& col : report.columns)
        out += "," + col;
    out.push_back('\n');
    for (const auto& [query_id, row] : report.per_query) {
        out += query_id;
        for (const auto& col : report.columns)
            out += "," + detail::format_score(row.at(col));
        out.push_back('\n');
    }
    out += "mean";
    for (const auto& col : report.columns)
        out += "," + detail::format_score(report.means.at(col));
    out.push_back('\n');
    return out;
}

// ---------------------------------------------------------------------------
// Fisher's randomization test over paired per-query differences
// ---------------------------------------------------------------------------

struct SigTestConfig {
    double alpha = 0.05;
    enum class Mode { Auto, Exact, MonteCarlo } mode = Mode::Auto;
    size_t mc_rounds = 100000;
    uint64_t rng_seed = 0;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw Error("alpha must be in (0,1)");
        if (mc_rounds < 1000)
            throw Error("mc_rounds must be >= 1000");
    }
};

struct SigResult {
    double p_value = 1.0;
    bool significant = false;
};

// Two-sided test on |mean(a-b)| under random sign assignment of the paired
// differences. Exact mode enumerates all 2^n assignments; Monte Carlo samples
// mc_rounds assignments of which the first is the identity, so p is never 0.
inline SigResult fisher_randomization(const std::vector<double>& per_query_a,
                                      const std::vector<double>& per_query_b,
                                      const SigTestConfig& cfg) {
    cfg.validate();
    if (per_query_a.size() != per_query_b.size())
        throw Error("fisher test requires equal-length paired lists");
    const size_t n = per_query_a.size();
    if (n == 0)
        throw Error("fisher test requires at least one paired value");

    std::vector<double> diff(n);
    for (size_t i = 0; i < n; ++i)
        diff[i] = per_query_a[i] - per_query_b[i];
    double observed = 0;
    for (double d : diff)
        observed += d;
    observed = std::abs(observed);  // |sum| comparisons are |mean| comparisons

    const bool exact = cfg.mode == SigTestConfig::Mode::Exact ||
                       (cfg.mode == SigTestConfig::Mode::Auto && n <= 20);

    uint64_t hits = 0;
    uint64_t total = 0;
    if (exact) {
        total = uint64_t{1} << n;
        for (uint64_t mask = 0; mask < total; ++mask) {
            double s = 0;
            for (size_t i = 0; i < n; ++i)
                s += (mask >> i) & 1 ? -diff[i] : diff[i];
            if (std::abs(s) >= observed)
                ++hits;
        }
    } else {
        total = cfg.mc_rounds;
        hits = 1;  // round 0 is the identity assignment
        for (uint64_t round = 1; round < total; ++round) {
            // Per-round sign bits derive from (seed, round); independent of
            // execution order.
            double s = 0;
            uint64_t word = 0;
            for (size_t i = 0; i < n; ++i) {
                if (i % 64 == 0)
                    word = mix64(mix64(cfg.rng_seed, round), i / 64);
                s += (word >> (i % 64)) & 1 ? -diff[i] : diff[i];
            }
            if (std::abs(s) >= observed)
                ++hits;
        }
    }
    SigResult result;
    result.p_value = static_cast<double>(hits) / static_cast<double>(total);
    result.significant = result.p_value < cfg.alpha;
    return result;
}

struct SigRow {
    std::string system_a;
    std::string system_b;
    std::string metric;
    double p_value;
    bool significant;
};

inline std::string write_significance_csv(const std::vector<SigRow>& rows) {
    std::string out = "system_a,system_b,metric,p_value,significant\n";
    for (const auto& r : rows) {
        out += r.system_a + "," + r.system_b + "," + r.metric + "," +
               detail::format_score(r.p_value) + "," + (r.significant ? "true" : "false") + "\n";
    }
    return out;
}

} // namespace chunkbench
