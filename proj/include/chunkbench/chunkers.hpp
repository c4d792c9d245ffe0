#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "chunkbench/docmodel.hpp"
#include "chunkbench/embedding.hpp"
#include "chunkbench/error.hpp"
#include "chunkbench/utf8.hpp"

namespace chunkbench {

namespace strategy {
inline constexpr const char* kFixed = "fixed";
inline constexpr const char* kRecursive = "recursive";
inline constexpr const char* kSemantic = "semantic";
inline constexpr const char* kStruct = "struct";
inline const std::vector<std::string>& all() {
    static const std::vector<std::string> tags = {kFixed, kRecursive, kSemantic, kStruct};
    return tags;
}
} // namespace strategy

struct Chunk {
    std::string chunk_id;  // doc_id ":" strategy ":" zero-padded ordinal
    std::string doc_id;
    std::string strategy;
    size_t ordinal = 0;
    std::string text;
    CharSpan span;  // into the serialized source document, scalar offsets
    std::vector<std::string> header_path;
};

inline std::string make_chunk_id(const std::string& doc_id, const std::string& strategy,
                                 size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", ordinal);
    return doc_id + ":" + strategy + ":" + buf;
}

struct FixedConfig {
    size_t chunk_size = 512;
    size_t overlap = 128;

    void validate() const {
        if (chunk_size == 0 || overlap >= chunk_size)
            throw Error("fixed chunker requires 0 <= overlap < chunk_size");
    }
};

struct RecursiveConfig {
    std::vector<std::string> separators = {"\n\n", "\n", " ", ""};
    size_t chunk_size = 1024;
    size_t overlap = 100;

    void validate() const {
        if (separators.empty() || !separators.back().empty())
            throw Error("recursive chunker separator list must end with the empty string");
        if (chunk_size == 0 || overlap >= chunk_size)
            throw Error("recursive chunker requires 0 <= overlap < chunk_size");
    }
};

struct SemanticConfig {
    double percentile = 0.8;

    void validate() const {
        if (!(percentile > 0.0 && percentile < 1.0))
            throw Error("semantic chunker percentile must be in (0,1)");
    }
};

struct StructureConfig {
    int max_header_level = 3;

    void validate() const {
        if (max_header_level < 1 || max_header_level > 3)
            throw Error("max_header_level must be in [1,3]");
    }
};

// ---------------------------------------------------------------------------
// Fixed-size sliding window
// ---------------------------------------------------------------------------

// Windows of chunk_size at stride (chunk_size - overlap) over the serialized
// document. Emission stops once a window reaches the document end, so a
// document of exactly chunk_size yields one chunk.
inline std::vector<Chunk> chunk_fixed(const StructuredDocument& doc, const FixedConfig& cfg) {
    cfg.validate();
    const std::u32string text = utf8_decode(serialize_markdown(doc));
    const size_t n = text.size();
    std::vector<Chunk> chunks;
    if (n == 0)
        return chunks;
    const size_t stride = cfg.chunk_size - cfg.overlap;
    for (size_t start = 0;; start += stride) {
        size_t end = std::min(start + cfg.chunk_size, n);
        Chunk c;
        c.doc_id = doc.doc_id;
        c.strategy = strategy::kFixed;
        c.ordinal = chunks.size();
        c.chunk_id = make_chunk_id(doc.doc_id, c.strategy, c.ordinal);
        c.span = {start, end};
        c.text = utf8_encode(std::u32string_view(text).substr(start, end - start));
        chunks.push_back(std::move(c));
        if (end == n)
            break;
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Recursive splitting
// ---------------------------------------------------------------------------

namespace detail {

struct Piece {
    size_t begin = 0;
    size_t end = 0;
    size_t length() const { return end - begin; }
};

// Splits [begin,end) of `text` on the first separator in seps[from..] that
// occurs in it, retaining the separator at piece ends; pieces still longer
// than max_len are split again with the remaining separators. The final ""
// separator splits into single characters, so every piece fits.
inline void refine_pieces(const std::u32string& text, size_t begin, size_t end,
                          const std::vector<std::u32string>& seps, size_t from, size_t max_len,
                          std::vector<Piece>& out) {
    if (end - begin <= max_len) {
        out.push_back({begin, end});
        return;
    }
    size_t sep_idx = seps.size();
    for (size_t i = from; i < seps.size(); ++i) {
        if (seps[i].empty()) {
            sep_idx = i;
            break;
        }
        // the separator must occur fully inside [begin,end)
        size_t pos = text.find(seps[i], begin);
        if (pos != std::u32string::npos && pos + seps[i].size() <= end) {
            sep_idx = i;
            break;
        }
    }
    if (sep_idx == seps.size() || seps[sep_idx].empty()) {
        // character fallback
        for (size_t i = begin; i < end; ++i)
            out.push_back({i, i + 1});
        return;
    }
    const std::u32string& sep = seps[sep_idx];
    size_t piece_begin = begin;
    while (piece_begin < end) {
        size_t pos = text.find(sep, piece_begin);
        size_t piece_end = (pos == std::u32string::npos || pos + sep.size() > end)
                               ? end
                               : pos + sep.size();
        if (piece_end - piece_begin <= max_len)
            out.push_back({piece_begin, piece_end});
        else
            refine_pieces(text, piece_begin, piece_end, seps, sep_idx + 1, max_len, out);
        piece_begin = piece_end;
    }
}

} // namespace detail

// Splits on the first separator present, refines oversized pieces with the
// remaining separators, then greedily packs pieces into chunks. A chunk
// closes when adding the next piece would reach chunk_size; the longest
// suffix of whole previous pieces totaling <= overlap characters is prepended
// to each chunk after the first, so chunks never exceed chunk_size + overlap.
inline std::vector<Chunk> chunk_recursive(const StructuredDocument& doc,
                                          const RecursiveConfig& cfg) {
    cfg.validate();
    const std::u32string text = utf8_decode(serialize_markdown(doc));
    const size_t n = text.size();
    std::vector<Chunk> chunks;
    if (n == 0)
        return chunks;

    auto emit = [&](size_t begin, size_t end) {
        Chunk c;
        c.doc_id = doc.doc_id;
        c.strategy = strategy::kRecursive;
        c.ordinal = chunks.size();
        c.chunk_id = make_chunk_id(doc.doc_id, c.strategy, c.ordinal);
        c.span = {begin, end};
        c.text = utf8_encode(std::u32string_view(text).substr(begin, end - begin));
        chunks.push_back(std::move(c));
    };

    if (n <= cfg.chunk_size) {
        emit(0, n);
        return chunks;
    }

    std::vector<std::u32string> seps;
    seps.reserve(cfg.separators.size());
    for (const auto& s : cfg.separators)
        seps.push_back(utf8_decode(s));

    std::vector<detail::Piece> pieces;
    detail::refine_pieces(text, 0, n, seps, 0, cfg.chunk_size, pieces);

    // Greedy merge into bodies: piece index ranges [body_first, body_last].
    struct Body {
        size_t first_piece;
        size_t begin;
        size_t end;
    };
    std::vector<Body> bodies;
    size_t cur_first = 0;
    size_t cur_len = pieces.empty() ? 0 : pieces[0].length();
    for (size_t i = 1; i < pieces.size(); ++i) {
        if (cur_len + pieces[i].length() >= cfg.chunk_size) {
            bodies.push_back({cur_first, pieces[cur_first].begin, pieces[i - 1].end});
            cur_first = i;
            cur_len = pieces[i].length();
        } else {
            cur_len += pieces[i].length();
        }
    }
    bodies.push_back({cur_first, pieces[cur_first].begin, pieces.back().end});

    for (size_t b = 0; b < bodies.size(); ++b) {
        size_t begin = bodies[b].begin;
        if (b > 0 && cfg.overlap > 0) {
            size_t budget = cfg.overlap;
            size_t p = bodies[b].first_piece;
            while (p > 0 && pieces[p - 1].length() <= budget) {
                --p;
                budget -= pieces[p].length();
            }
            begin = pieces[p].begin;
        }
        emit(begin, bodies[b].end);
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Sentence splitting and percentile (semantic chunker building blocks)
// ---------------------------------------------------------------------------

struct Sentence {
    std::string text;
    CharSpan span;
};

// A sentence ends after '.', '!' or '?' followed by whitespace and then an
// uppercase letter or digit, or at a paragraph break (a whitespace run with
// two or more newlines). Spans exclude surrounding whitespace.
inline std::vector<Sentence> split_sentences(std::string_view text) {
    const std::u32string u = utf8_decode(text);
    const size_t n = u.size();
    auto is_space = [](char32_t c) {
        return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r';
    };
    auto is_terminal = [](char32_t c) { return c == U'.' || c == U'!' || c == U'?'; };
    auto is_upper_or_digit = [](char32_t c) {
        return (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9');
    };

    std::vector<Sentence> out;
    size_t i = 0;
    while (i < n) {
        while (i < n && is_space(u[i]))
            ++i;
        if (i >= n)
            break;
        const size_t start = i;
        size_t end = 0;
        while (i < n) {
            if (!is_space(u[i])) {
                ++i;
                continue;
            }
            size_t j = i;
            size_t newlines = 0;
            while (j < n && is_space(u[j])) {
                if (u[j] == U'\n')
                    ++newlines;
                ++j;
            }
            const bool paragraph_break = newlines >= 2;
            const bool punct_break =
                is_terminal(u[i - 1]) && j < n && is_upper_or_digit(u[j]);
            if (paragraph_break || punct_break || j >= n) {
                end = i;
                i = j;
                break;
            }
            i = j;  // internal whitespace
        }
        if (end == 0)
            end = i;  // ran off the end of the text
        Sentence s;
        s.span = {start, end};
        s.text = utf8_encode(std::u32string_view(u).substr(start, end - start));
        out.push_back(std::move(s));
    }
    return out;
}

// Linear interpolation between closest ranks: index = p * (n - 1).
inline double percentile(std::vector<double> values, double p) {
    if (values.empty())
        throw Error("percentile of empty list");
    if (p < 0.0 || p > 1.0)
        throw Error("percentile fraction must be in [0,1]");
    std::sort(values.begin(), values.end());
    const double idx = p * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(idx));
    const size_t hi = static_cast<size_t>(std::ceil(idx));
    const double frac = idx - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------------------
// Breakpoint-based semantic chunking
// ---------------------------------------------------------------------------

// Embeds consecutive sentences, takes the cosine distance between neighbors,
// and breaks wherever the distance strictly exceeds the configured percentile
// of all distances in the document. All-equal distances give one chunk.
inline std::vector<Chunk> chunk_semantic(const StructuredDocument& doc, const SemanticConfig& cfg,
                                         Embedder& embedder) {
    cfg.validate();
    const std::string serialized = serialize_markdown(doc);
    const std::vector<Sentence> sentences = split_sentences(serialized);
    std::vector<Chunk> chunks;
    if (sentences.empty())
        return chunks;

    std::vector<size_t> breaks;  // break after sentence index
    if (sentences.size() > 1) {
        std::vector<std::string> texts;
        texts.reserve(sentences.size());
        for (const auto& s : sentences)
            texts.push_back(s.text);
        const std::vector<EmbeddingVector> embs = embedder.embed_batch(texts);
        std::vector<double> distances(sentences.size() - 1);
        for (size_t i = 0; i + 1 < sentences.size(); ++i)
            distances[i] = 1.0 - cosine_similarity(embs[i], embs[i + 1]);
        const double threshold = percentile(distances, cfg.percentile);
        for (size_t i = 0; i < distances.size(); ++i)
            if (distances[i] > threshold)
                breaks.push_back(i);
    }

    const std::u32string u = utf8_decode(serialized);
    size_t run_start = 0;
    size_t next_break = 0;
    for (size_t i = 0; i < sentences.size(); ++i) {
        const bool is_break = next_break < breaks.size() && breaks[next_break] == i;
        if (is_break || i + 1 == sentences.size()) {
            Chunk c;
            c.doc_id = doc.doc_id;
            c.strategy = strategy::kSemantic;
            c.ordinal = chunks.size();
            c.chunk_id = make_chunk_id(doc.doc_id, c.strategy, c.ordinal);
            c.span = {sentences[run_start].span.begin, sentences[i].span.end};
            c.text = utf8_encode(
                std::u32string_view(u).substr(c.span.begin, c.span.end - c.span.begin));
            chunks.push_back(std::move(c));
            run_start = i + 1;
            if (is_break)
                ++next_break;
        }
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Structure-aware chunking
// ---------------------------------------------------------------------------

// Cuts at every heading of level <= max_header_level. Each chunk covers one
// section: its heading plus all blocks until the next qualifying heading.
// The chunk text is the breadcrumb of open headings ("H1 > H2") followed by
// the section body; sections with no body emit nothing. Content before the
// first heading becomes a preamble chunk with an empty header path.
inline std::vector<Chunk> chunk_structure(const StructuredDocument& doc,
                                          const StructureConfig& cfg) {
    cfg.validate();
    std::vector<Chunk> chunks;

    struct Section {
        std::vector<std::string> path;  // open headings, own heading last
        size_t span_begin = 0;
        size_t span_end = 0;
        std::vector<const Block*> body;
        bool is_preamble = false;
    };

    auto emit = [&](const Section& s) {
        if (s.body.empty())
            return;  // heading with no content
        StructuredDocument body_doc;
        for (const Block* b : s.body)
            body_doc.blocks.push_back(*b);
        std::string text;
        if (!s.path.empty()) {
            for (size_t i = 0; i < s.path.size(); ++i) {
                if (i > 0)
                    text += " > ";
                text += s.path[i];
            }
            text.push_back('\n');
        }
        text += serialize_markdown(body_doc);
        Chunk c;
        c.doc_id = doc.doc_id;
        c.strategy = strategy::kStruct;
        c.ordinal = chunks.size();
        c.chunk_id = make_chunk_id(doc.doc_id, c.strategy, c.ordinal);
        c.span = {s.span_begin, s.span_end};
        c.text = std::move(text);
        c.header_path = s.path;
        chunks.push_back(std::move(c));
    };

    std::vector<std::pair<int, std::string>> stack;  // (level, heading text)
    Section current;
    current.is_preamble = true;

    for (const Block& b : doc.blocks) {
        if (b.kind == Block::Kind::Heading && b.level <= cfg.max_header_level) {
            emit(current);
            while (!stack.empty() && stack.back().first >= b.level)
                stack.pop_back();
            stack.emplace_back(b.level, b.text);
            current = Section{};
            for (const auto& [lvl, txt] : stack)
                current.path.push_back(txt);
            current.span_begin = b.span.begin;
            current.span_end = b.span.end;
        } else {
            if (current.body.empty() && current.is_preamble)
                current.span_begin = b.span.begin;
            current.body.push_back(&b);
            current.span_end = b.span.end;
        }
    }
    emit(current);
    return chunks;
}

// ---------------------------------------------------------------------------
// Chunk store (JSON Lines, fixed field order, no floats)
// ---------------------------------------------------------------------------

inline std::string write_chunks_jsonl(const std::vector<Chunk>& chunks) {
    std::string out;
    for (const Chunk& c : chunks) {
        nlohmann::ordered_json j;
        j["chunk_id"] = c.chunk_id;
        j["doc_id"] = c.doc_id;
        j["strategy"] = c.strategy;
        j["ordinal"] = c.ordinal;
        j["span_begin"] = c.span.begin;
        j["span_end"] = c.span.end;
        j["header_path"] = c.header_path;
        j["text"] = c.text;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

inline std::vector<Chunk> parse_chunks_jsonl(const std::string& text) {
    std::vector<Chunk> chunks;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos)
            eol = text.size();
        ++line_no;
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty())
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("chunk store line " + std::to_string(line_no) + ": " + e.what());
        }
        Chunk c;
        try {
            c.chunk_id = j.at("chunk_id").get<std::string>();
            c.doc_id = j.at("doc_id").get<std::string>();
            c.strategy = j.at("strategy").get<std::string>();
            c.ordinal = j.at("ordinal").get<size_t>();
            c.span.begin = j.at("span_begin").get<size_t>();
            c.span.end = j.at("span_end").get<size_t>();
            c.header_path = j.at("header_path").get<std::vector<std::string>>();
            c.text = j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error("chunk store line " + std::to_string(line_no) + ": " + e.what());
        }
        chunks.push_back(std::move(c));
    }
    return chunks;
}

} // namespace chunkbench
