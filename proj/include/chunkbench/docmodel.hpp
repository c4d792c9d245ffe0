#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "chunkbench/error.hpp"
#include "chunkbench/utf8.hpp"

namespace chunkbench {

enum class DocumentCategory { TextHeavy, TableHeavy, DiagramRef };

inline std::string to_string(DocumentCategory c) {
    switch (c) {
    case DocumentCategory::TextHeavy: return "text_heavy";
    case DocumentCategory::TableHeavy: return "table_heavy";
    case DocumentCategory::DiagramRef: return "diagram_ref";
    }
    throw Error("invalid document category");
}

inline DocumentCategory category_from_string(std::string_view s) {
    if (s == "text_heavy") return DocumentCategory::TextHeavy;
    if (s == "table_heavy") return DocumentCategory::TableHeavy;
    if (s == "diagram_ref") return DocumentCategory::DiagramRef;
    throw Error("unknown document category: " + std::string(s));
}

// Half-open [begin, end) in Unicode scalar values.
struct CharSpan {
    size_t begin = 0;
    size_t end = 0;

    size_t length() const { return end - begin; }
    bool contains(const CharSpan& other) const {
        return begin <= other.begin && other.end <= end;
    }
    bool overlaps(const CharSpan& other) const {
        return begin < other.end && other.begin < end;
    }
    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Block {
    enum class Kind { Heading, Paragraph, Table, FigureRef };

    Kind kind = Kind::Paragraph;
    int level = 0;                               // headings only, 1..3
    std::string text;                            // heading text / paragraph text / figure caption
    std::vector<std::vector<std::string>> rows;  // tables only; row 0 is the header
    CharSpan span;                               // position in the text this block was parsed from

    static Block heading(int level, std::string text) {
        Block b;
        b.kind = Kind::Heading;
        b.level = level;
        b.text = std::move(text);
        return b;
    }
    static Block paragraph(std::string text) {
        Block b;
        b.kind = Kind::Paragraph;
        b.text = std::move(text);
        return b;
    }
    static Block table(std::vector<std::vector<std::string>> rows) {
        Block b;
        b.kind = Kind::Table;
        b.rows = std::move(rows);
        return b;
    }
    static Block figure(std::string caption) {
        Block b;
        b.kind = Kind::FigureRef;
        b.text = std::move(caption);
        return b;
    }
};

// Content equality, ignoring spans (spans depend on the surrounding text).
inline bool same_block(const Block& a, const Block& b) {
    return a.kind == b.kind && a.level == b.level && a.text == b.text && a.rows == b.rows;
}

struct StructuredDocument {
    std::string doc_id;
    DocumentCategory category = DocumentCategory::TextHeavy;
    std::vector<Block> blocks;
};

inline bool same_blocks(const StructuredDocument& a, const StructuredDocument& b) {
    if (a.blocks.size() != b.blocks.size())
        return false;
    for (size_t i = 0; i < a.blocks.size(); ++i)
        if (!same_block(a.blocks[i], b.blocks[i]))
            return false;
    return true;
}

namespace detail {

struct Line {
    std::u32string text;
    size_t begin = 0;  // scalar offset of first char
    size_t end = 0;    // scalar offset one past last char (excludes the newline)
};

inline std::vector<Line> split_lines(const std::u32string& text) {
    std::vector<Line> lines;
    size_t start = 0;
    for (size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == U'\n') {
            lines.push_back({text.substr(start, i - start), start, i});
            start = i + 1;
        }
    }
    return lines;
}

inline bool is_blank(const std::u32string& s) {
    for (char32_t c : s)
        if (c != U' ' && c != U'\t')
            return false;
    return true;
}

// ATX heading: 1..3 '#' then a space. Four or more '#' is plain text.
inline int heading_level(const std::u32string& s) {
    size_t n = 0;
    while (n < s.size() && s[n] == U'#')
        ++n;
    if (n >= 1 && n <= 3 && n < s.size() && s[n] == U' ')
        return static_cast<int>(n);
    return 0;
}

inline bool is_pipe_line(const std::u32string& s) {
    return !s.empty() && s[0] == U'|';
}

inline std::u32string trim(const std::u32string& s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == U' ' || s[b] == U'\t'))
        ++b;
    while (e > b && (s[e - 1] == U' ' || s[e - 1] == U'\t'))
        --e;
    return s.substr(b, e - b);
}

inline bool starts_with(const std::u32string& s, std::u32string_view prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

// "![caption](target)" image reference.
inline bool parse_image_ref(const std::u32string& s, std::u32string& caption) {
    if (!starts_with(s, U"!["))
        return false;
    size_t close = s.find(U"](", 2);
    if (close == std::u32string::npos)
        return false;
    std::u32string rest = trim(s.substr(close + 2));
    if (rest.empty() || rest.back() != U')')
        return false;
    caption = s.substr(2, close - 2);
    return true;
}

inline bool parse_figure_line(const std::u32string& s, std::u32string& caption) {
    if (starts_with(s, U"Figure:")) {
        caption = s.substr(7);
        if (!caption.empty() && caption.front() == U' ')
            caption.erase(caption.begin());
        return true;
    }
    return parse_image_ref(s, caption);
}

// Splits "| a | b |" into trimmed cells. Returns false if the row does not
// start and end with a pipe.
inline bool split_table_row(const std::u32string& s, std::vector<std::u32string>& cells) {
    cells.clear();
    if (s.size() < 2 || s.front() != U'|' || trim(s).back() != U'|')
        return false;
    std::u32string body = trim(s);
    size_t start = 1;
    for (size_t i = 1; i < body.size(); ++i) {
        if (body[i] == U'|') {
            cells.push_back(trim(body.substr(start, i - start)));
            start = i + 1;
        }
    }
    return !cells.empty();
}

inline bool is_delimiter_cell(const std::u32string& cell) {
    if (cell.empty())
        return false;
    size_t b = 0, e = cell.size();
    if (cell[b] == U':')
        ++b;
    if (e > b && cell[e - 1] == U':')
        --e;
    if (b >= e)
        return false;
    for (size_t i = b; i < e; ++i)
        if (cell[i] != U'-')
            return false;
    return true;
}

inline bool is_delimiter_row(const std::u32string& s) {
    std::vector<std::u32string> cells;
    if (!split_table_row(s, cells))
        return false;
    for (const auto& c : cells)
        if (!is_delimiter_cell(c))
            return false;
    return true;
}

} // namespace detail

// Parses the markdown subset: ATX headings H1..H3, pipe tables with a
// delimiter row, figure references, and paragraphs of contiguous lines.
// Block spans index into `text` in Unicode scalar values.
inline StructuredDocument parse_markdown(std::string_view text) {
    using namespace detail;
    StructuredDocument doc;
    const std::u32string u = utf8_decode(text);
    const std::vector<Line> lines = split_lines(u);

    size_t i = 0;
    while (i < lines.size()) {
        const Line& line = lines[i];
        if (is_blank(line.text)) {
            ++i;
            continue;
        }

        if (int level = heading_level(line.text); level > 0) {
            Block b = Block::heading(level, utf8_encode(line.text.substr(level + 1)));
            b.span = {line.begin, line.end};
            doc.blocks.push_back(std::move(b));
            ++i;
            continue;
        }

        std::u32string caption;
        if (parse_figure_line(line.text, caption)) {
            Block b = Block::figure(utf8_encode(caption));
            b.span = {line.begin, line.end};
            doc.blocks.push_back(std::move(b));
            ++i;
            continue;
        }

        if (is_pipe_line(line.text) && i + 1 < lines.size() &&
            is_delimiter_row(lines[i + 1].text)) {
            // Table: header row, delimiter row, then data rows until the run
            // of pipe lines ends. All rows must share the header's width.
            std::vector<std::u32string> cells;
            if (!split_table_row(line.text, cells))
                throw Error("malformed table row at line " + std::to_string(i + 1));
            const size_t width = cells.size();
            std::vector<std::vector<std::string>> rows;
            rows.emplace_back();
            for (auto& c : cells)
                rows.back().push_back(utf8_encode(c));

            std::vector<std::u32string> delim;
            split_table_row(lines[i + 1].text, delim);
            if (delim.size() != width)
                throw Error("ragged table: line " + std::to_string(i + 2) + " has " +
                            std::to_string(delim.size()) + " columns, expected " +
                            std::to_string(width));

            size_t j = i + 2;
            while (j < lines.size() && is_pipe_line(lines[j].text)) {
                std::vector<std::u32string> row;
                if (!split_table_row(lines[j].text, row))
                    throw Error("malformed table row at line " + std::to_string(j + 1));
                if (row.size() != width)
                    throw Error("ragged table: line " + std::to_string(j + 1) + " has " +
                                std::to_string(row.size()) + " columns, expected " +
                                std::to_string(width));
                rows.emplace_back();
                for (auto& c : row)
                    rows.back().push_back(utf8_encode(c));
                ++j;
            }
            Block b = Block::table(std::move(rows));
            b.span = {line.begin, lines[j - 1].end};
            doc.blocks.push_back(std::move(b));
            i = j;
            continue;
        }

        // Paragraph: contiguous lines until a blank line or another block kind.
        size_t j = i;
        std::u32string para;
        while (j < lines.size()) {
            const std::u32string& lt = lines[j].text;
            if (is_blank(lt) || heading_level(lt) > 0)
                break;
            std::u32string cap;
            if (parse_figure_line(lt, cap))
                break;
            if (is_pipe_line(lt) && j + 1 < lines.size() && is_delimiter_row(lines[j + 1].text))
                break;
            if (j > i)
                para.push_back(U'\n');
            para += lt;
            ++j;
        }
        Block b = Block::paragraph(utf8_encode(para));
        b.span = {lines[i].begin, lines[j - 1].end};
        doc.blocks.push_back(std::move(b));
        i = j;
    }
    return doc;
}

namespace detail {

inline void check_paragraph_serializable(const std::string& text) {
    std::u32string u = utf8_decode(text);
    for (const Line& line : split_lines(u)) {
        if (is_blank(line.text))
            throw Error("paragraph contains a blank line; it would not round-trip");
        if (heading_level(line.text) > 0 || is_pipe_line(line.text))
            throw Error("paragraph line would parse as structural markup: " +
                        utf8_encode(line.text));
        std::u32string cap;
        if (parse_figure_line(line.text, cap))
            throw Error("paragraph line would parse as a figure reference: " +
                        utf8_encode(line.text));
    }
}

inline void render_block(const Block& b, std::string& out) {
    switch (b.kind) {
    case Block::Kind::Heading:
        if (b.level < 1 || b.level > 3)
            throw Error("heading level out of range: " + std::to_string(b.level));
        out.append(static_cast<size_t>(b.level), '#');
        out.push_back(' ');
        out += b.text;
        break;
    case Block::Kind::Paragraph:
        check_paragraph_serializable(b.text);
        out += b.text;
        break;
    case Block::Kind::Table: {
        if (b.rows.empty())
            throw Error("table has no rows");
        const size_t width = b.rows.front().size();
        if (width == 0)
            throw Error("table row has no columns");
        auto render_row = [&out](const std::vector<std::string>& row) {
            out.push_back('|');
            for (const auto& cell : row) {
                if (cell.find('|') != std::string::npos || cell.find('\n') != std::string::npos)
                    throw Error("table cell contains '|' or newline: " + cell);
                out.push_back(' ');
                out += cell;
                out += " |";
            }
        };
        for (size_t r = 0; r < b.rows.size(); ++r) {
            if (b.rows[r].size() != width)
                throw Error("ragged table: row " + std::to_string(r) + " has " +
                            std::to_string(b.rows[r].size()) + " columns, expected " +
                            std::to_string(width));
            render_row(b.rows[r]);
            if (r == 0) {
                out.push_back('\n');
                out.push_back('|');
                for (size_t c = 0; c < width; ++c)
                    out += " --- |";
            }
            if (r + 1 < b.rows.size())
                out.push_back('\n');
        }
        break;
    }
    case Block::Kind::FigureRef:
        out += "Figure: ";
        out += b.text;
        break;
    }
}

} // namespace detail

// Canonical form: blocks joined by one blank line, no trailing newline.
// parse_markdown(serialize_markdown(d)) reproduces d's blocks.
inline std::string serialize_markdown(const StructuredDocument& doc) {
    std::string out;
    for (size_t i = 0; i < doc.blocks.size(); ++i) {
        if (i > 0)
            out += "\n\n";
        detail::render_block(doc.blocks[i], out);
    }
    return out;
}

// Re-derives block spans so they index the canonical serialization.
inline void canonicalize_spans(StructuredDocument& doc) {
    StructuredDocument reparsed = parse_markdown(serialize_markdown(doc));
    if (!same_blocks(doc, reparsed))
        throw Error("document does not round-trip through its serialization: " + doc.doc_id);
    for (size_t i = 0; i < doc.blocks.size(); ++i)
        doc.blocks[i].span = reparsed.blocks[i].span;
}

} // namespace chunkbench
