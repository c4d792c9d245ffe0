#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iterator>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "chunkbench/binio.hpp"
#include "chunkbench/docmodel.hpp"
#include "chunkbench/hashing.hpp"

namespace chunkbench {

struct ManifestEntry {
    std::string doc_id;
    DocumentCategory category = DocumentCategory::TextHeavy;
    std::string path;  // relative to the manifest file
};

struct CorpusManifest {
    std::optional<uint64_t> seed;
    std::vector<ManifestEntry> entries;
};

inline std::string write_manifest_json(const CorpusManifest& m) {
    nlohmann::ordered_json j;
    if (m.seed)
        j["seed"] = *m.seed;
    else
        j["seed"] = nullptr;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : m.entries) {
        nlohmann::ordered_json je;
        je["doc_id"] = e.doc_id;
        je["category"] = to_string(e.category);
        je["path"] = e.path;
        j["entries"].push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

inline CorpusManifest parse_manifest_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("manifest is not valid JSON: ") + e.what());
    }
    CorpusManifest m;
    if (j.contains("seed") && !j["seed"].is_null())
        m.seed = j["seed"].get<uint64_t>();
    if (!j.contains("entries") || !j["entries"].is_array())
        throw Error("manifest has no entries array");
    std::set<std::string> seen;
    for (const auto& je : j["entries"]) {
        ManifestEntry e;
        e.doc_id = je.at("doc_id").get<std::string>();
        e.category = category_from_string(je.at("category").get<std::string>());
        e.path = je.at("path").get<std::string>();
        if (!seen.insert(e.doc_id).second)
            throw Error("duplicate doc_id in manifest: " + e.doc_id);
        m.entries.push_back(std::move(e));
    }
    return m;
}

// Loads documents in manifest order; paths resolve relative to the manifest.
inline std::vector<StructuredDocument> load_corpus(const std::string& manifest_path) {
    CorpusManifest m = parse_manifest_json(read_file(manifest_path));
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    std::vector<StructuredDocument> docs;
    docs.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        std::filesystem::path p = base / e.path;
        if (!std::filesystem::exists(p))
            throw Error("corpus file missing: " + p.string());
        StructuredDocument doc = parse_markdown(read_file(p.string()));
        doc.doc_id = e.doc_id;
        doc.category = e.category;
        docs.push_back(std::move(doc));
    }
    return docs;
}

// Writes each document next to the manifest, file content identical to
// serialize_markdown so char offsets in the file match in-memory offsets.
inline void save_corpus(const CorpusManifest& manifest,
                        const std::vector<StructuredDocument>& docs, const std::string& dir) {
    if (manifest.entries.size() != docs.size())
        throw Error("manifest entry count does not match document count");
    std::filesystem::create_directories(dir);
    for (size_t i = 0; i < docs.size(); ++i) {
        std::filesystem::path p = std::filesystem::path(dir) / manifest.entries[i].path;
        write_file(p.string(), serialize_markdown(docs[i]));
    }
    write_file((std::filesystem::path(dir) / "manifest.json").string(),
               write_manifest_json(manifest));
}

// ---------------------------------------------------------------------------
// Synthetic corpus generation
//
// Prose comes from a seeded first-order Markov chain over themed word lists.
// Each section of a document draws from one theme, so sentences within a
// section share vocabulary while consecutive sections do not. That gives
// bag-of-words embeddings the within-section > cross-section similarity the
// semantic chunker needs to find boundaries.
// ---------------------------------------------------------------------------

namespace synth {

inline const std::vector<std::vector<std::string>>& theme_words() {
    static const std::vector<std::vector<std::string>> themes = {
        {"pressure", "relief", "valve", "gauge", "barg", "overpressure", "setpoint", "vent",
         "rupture", "disc", "transmitter", "pilot", "spring", "reseat", "blowdown", "header",
         "flare", "capacity", "sizing", "inlet", "margin", "tolerance", "lift", "chatter"},
        {"pump", "impeller", "seal", "bearing", "vibration", "cavitation", "suction",
         "discharge", "flow", "coupling", "alignment", "lubrication", "motor", "casing",
         "wear", "shaft", "thrust", "priming", "strainer", "duty", "standby", "runout",
         "gland", "sleeve"},
        {"permit", "hazard", "isolation", "lockout", "tagout", "incident", "induction",
         "barrier", "evacuation", "muster", "alarm", "drill", "responder", "toolbox",
         "briefing", "escort", "watch", "rescue", "detector", "exposure", "bund", "spill",
         "firewater", "harness"},
        {"corrosion", "thickness", "ultrasonic", "weld", "coating", "pitting", "anomaly",
         "dent", "gouge", "crack", "fitness", "erosion", "probe", "radiography", "particle",
         "scaffold", "interval", "remnant", "lamination", "blister", "holiday", "passivation",
         "cladding", "overlay"},
        {"separator", "vessel", "level", "interface", "demister", "slug", "catcher", "weir",
         "retention", "boot", "skimming", "degassing", "emulsion", "carryover", "foaming",
         "baffle", "nozzle", "drain", "gravity", "residence", "phase", "diverter",
         "coalescer", "downcomer"},
        {"compressor", "stage", "antisurge", "recycle", "scrubber", "aftercooler", "rotor",
         "diaphragm", "surge", "choke", "throughput", "polytropic", "knockout", "drum",
         "governor", "turbine", "driver", "train", "unloading", "settle", "speed", "stonewall",
         "seal", "balance"},
        {"pipeline", "pigging", "launcher", "receiver", "cathodic", "anode", "trench",
         "backfill", "crossing", "marker", "patrol", "leak", "survey", "kilometre", "station",
         "hydrotest", "dewatering", "drying", "commissioning", "sleeper", "tie", "span",
         "wrap", "girth"},
        {"metering", "orifice", "plate", "prover", "skid", "totaliser", "uncertainty",
         "calibration", "density", "viscosity", "sample", "analyser", "chromatograph",
         "allocation", "custody", "transfer", "pulse", "signal", "correction", "factor",
         "trail", "repeatability", "deviation", "footprint"},
        {"switchgear", "breaker", "relay", "busbar", "transformer", "earthing", "insulation",
         "megger", "cable", "hazardous", "zone", "rating", "trip", "overload", "feeder",
         "substation", "battery", "charger", "lighting", "circuit", "conduit", "enclosure",
         "interlock", "solenoid"},
        {"contract", "vendor", "procurement", "tender", "clause", "milestone", "invoice",
         "warranty", "liability", "scope", "variation", "deliverable", "acceptance",
         "retention", "penalty", "arbitration", "registry", "approval", "signature",
         "revision", "amendment", "schedule", "novation", "escrow"},
    };
    return themes;
}

inline const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> filler = {
        "the",    "of",     "and",    "to",      "in",     "for",    "is",     "shall",
        "must",   "with",   "on",     "by",      "be",     "as",     "at",     "all",
        "any",    "each",   "its",    "this",    "that",   "before", "after",  "during",
        "where",  "when",   "work",   "system",  "unit",   "value",  "record", "report",
        "check",  "verify", "confirm", "ensure", "review", "note",   "section", "item",
        "case",   "result", "change", "process", "status", "action", "team",   "site",
        "plant",  "field",  "under",  "within",  "against", "between", "remains", "required",
    };
    return filler;
}

// First-order Markov chain per theme over (theme words + filler). Transition
// candidates are fixed by the corpus seed; the per-document RNG picks among
// them at generation time.
class ProseModel {
public:
    explicit ProseModel(uint64_t corpus_seed) {
        const auto& themes = theme_words();
        const auto& filler = filler_words();
        chains_.resize(themes.size());
        for (size_t t = 0; t < themes.size(); ++t) {
            std::mt19937_64 rng(mix64(corpus_seed, 0xC0FFEEULL + t));
            const size_t theme_n = themes[t].size();
            const size_t pool_n = theme_n + filler.size();
            chains_[t].resize(pool_n);
            for (size_t w = 0; w < pool_n; ++w) {
                for (size_t s = 0; s < kSuccessors; ++s) {
                    // Bias toward theme words so sections keep their vocabulary.
                    bool from_theme = s < 3;
                    size_t idx = from_theme ? rand_below(rng, theme_n)
                                            : theme_n + rand_below(rng, filler.size());
                    chains_[t][w][s] = static_cast<uint16_t>(idx);
                }
            }
        }
    }

    const std::string& word(size_t theme, size_t idx) const {
        const auto& tw = theme_words()[theme];
        if (idx < tw.size())
            return tw[idx];
        return filler_words()[idx - tw.size()];
    }

    // `anchors` are theme-word indices recurring through a section; every
    // sentence carries two of them, so consecutive sentences of one section
    // overlap in vocabulary while sentences across a section boundary do not.
    std::string sentence(std::mt19937_64& rng, size_t theme, size_t min_words,
                         size_t max_words, const std::vector<size_t>& anchors = {}) const {
        const size_t n_words = min_words + rand_below(rng, max_words - min_words + 1);
        size_t cur;
        if (!anchors.empty())
            cur = anchors[rand_below(rng, anchors.size())];
        else
            cur = rand_below(rng, theme_words()[theme].size());
        const size_t second_anchor_at = 1 + rand_below(rng, n_words > 2 ? n_words - 2 : 1);
        std::string out = capitalize(word(theme, cur));
        for (size_t i = 1; i < n_words; ++i) {
            out.push_back(' ');
            if (!anchors.empty() && i == second_anchor_at) {
                cur = anchors[rand_below(rng, anchors.size())];
                out += word(theme, cur);
            } else if (rand_below(rng, 100) < 10) {
                out += std::to_string(10 + rand_below(rng, 990));
            } else {
                cur = chains_[theme][cur][rand_below(rng, kSuccessors)];
                out += word(theme, cur);
            }
        }
        out.push_back(rand_below(rng, 100) < 8 ? '?' : '.');
        return out;
    }

    // Four distinct theme-word indices to reuse across one section.
    std::vector<size_t> pick_anchors(std::mt19937_64& rng, size_t theme) const {
        const size_t n = theme_words()[theme].size();
        std::vector<size_t> anchors;
        while (anchors.size() < 4) {
            size_t idx = rand_below(rng, n);
            if (std::find(anchors.begin(), anchors.end(), idx) == anchors.end())
                anchors.push_back(idx);
        }
        return anchors;
    }

    // Short word sequence for headings and captions, first word capitalized.
    std::string phrase(std::mt19937_64& rng, size_t theme, size_t n_words,
                       size_t first_word = SIZE_MAX) const {
        size_t cur =
            first_word != SIZE_MAX ? first_word : rand_below(rng, theme_words()[theme].size());
        std::string out = capitalize(word(theme, cur));
        for (size_t i = 1; i < n_words; ++i) {
            cur = chains_[theme][cur][rand_below(rng, kSuccessors)];
            out.push_back(' ');
            out += word(theme, cur);
        }
        return out;
    }

    std::string paragraph(std::mt19937_64& rng, size_t theme, size_t n_sentences,
                          const std::vector<size_t>& anchors = {}, size_t min_words = 7,
                          size_t max_words = 14) const {
        std::string out;
        for (size_t i = 0; i < n_sentences; ++i) {
            if (i > 0)
                out.push_back(' ');
            out += sentence(rng, theme, min_words, max_words, anchors);
        }
        return out;
    }

    static std::string capitalize(std::string w) {
        if (!w.empty() && w[0] >= 'a' && w[0] <= 'z')
            w[0] = static_cast<char>(w[0] - 'a' + 'A');
        return w;
    }

private:
    static constexpr size_t kSuccessors = 5;
    std::vector<std::vector<std::array<uint16_t, kSuccessors>>> chains_;
};

// Instrument-style identifier, e.g. "PT-1042" or "V-203A".
inline std::string make_tag(std::mt19937_64& rng) {
    static const char* prefixes[] = {"PT",  "FT",  "TT",  "LT", "FIC", "PIC", "LIC",
                                     "PSV", "ESD", "XV",  "V",  "P",   "K",   "E"};
    std::string tag = prefixes[rand_below(rng, std::size(prefixes))];
    tag.push_back('-');
    tag += std::to_string(100 + rand_below(rng, 9900));
    if (rand_below(rng, 100) < 25)
        tag.push_back(static_cast<char>('A' + rand_below(rng, 3)));
    return tag;
}

// Shuffled theme order; consecutive sections always change theme.
inline std::vector<size_t> theme_cycle(std::mt19937_64& rng) {
    std::vector<size_t> order(theme_words().size());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    for (size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[rand_below(rng, i + 1)]);
    return order;
}

inline size_t rendered_length(const Block& b) {
    StructuredDocument tmp;
    tmp.blocks.push_back(b);
    return utf8_length(serialize_markdown(tmp));
}

inline StructuredDocument make_text_heavy(const ProseModel& prose, std::mt19937_64& rng) {
    StructuredDocument doc;
    doc.category = DocumentCategory::TextHeavy;
    auto themes = theme_cycle(rng);
    size_t theme_i = 0;
    auto next_theme = [&] { return themes[theme_i++ % themes.size()]; };

    size_t title_theme = next_theme();
    doc.blocks.push_back(Block::heading(1, prose.phrase(rng, title_theme, 3)));

    size_t sentences = 0;
    size_t section = 0;
    while (sentences < 155 || section < 12) {
        size_t theme = next_theme();
        int level;
        if (section == 0)
            level = 2;
        else if (section == 1)
            level = 3;
        else {
            size_t r = rand_below(rng, 100);
            level = r < 15 ? 1 : (r < 70 ? 2 : 3);
        }
        auto anchors = prose.pick_anchors(rng, theme);
        doc.blocks.push_back(Block::heading(
            level, prose.phrase(rng, theme, 2 + rand_below(rng, 3), anchors[0])));
        size_t paras = 3 + rand_below(rng, 3);
        for (size_t p = 0; p < paras; ++p) {
            size_t n = 3 + rand_below(rng, 4);
            doc.blocks.push_back(Block::paragraph(prose.paragraph(rng, theme, n, anchors)));
            sentences += n;
        }
        ++section;
    }
    return doc;
}

inline std::vector<std::vector<std::string>> make_table(const ProseModel& prose,
                                                        std::mt19937_64& rng, size_t theme,
                                                        size_t n_rows) {
    static const char* units[] = {"barg", "degC", "mm", "kPa", "m3h", "rpm", "mV", "percent"};
    static const char* statuses[] = {"ok", "review", "hold", "closed", "open"};
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Tag", "Parameter", "Value", "Unit", "Status"});
    for (size_t r = 0; r < n_rows; ++r) {
        std::vector<std::string> row;
        row.push_back(make_tag(rng));
        row.push_back(prose.phrase(rng, theme, 1 + rand_below(rng, 2)));
        row.push_back(std::to_string(rand_below(rng, 5000)) + "." +
                      std::to_string(rand_below(rng, 10)));
        row.push_back(units[rand_below(rng, std::size(units))]);
        row.push_back(statuses[rand_below(rng, std::size(statuses))]);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline StructuredDocument make_table_heavy(const ProseModel& prose, std::mt19937_64& rng) {
    StructuredDocument doc;
    doc.category = DocumentCategory::TableHeavy;
    auto themes = theme_cycle(rng);
    size_t theme_i = 0;
    auto next_theme = [&] { return themes[theme_i++ % themes.size()]; };

    doc.blocks.push_back(Block::heading(1, prose.phrase(rng, next_theme(), 3)));
    size_t sections = 5 + rand_below(rng, 3);
    size_t last_table = 0;
    size_t table_theme = 0;
    for (size_t s = 0; s < sections; ++s) {
        size_t theme = next_theme();
        auto anchors = prose.pick_anchors(rng, theme);
        doc.blocks.push_back(
            Block::heading(2, prose.phrase(rng, theme, 2 + rand_below(rng, 2), anchors[0])));
        doc.blocks.push_back(
            Block::paragraph(prose.paragraph(rng, theme, 2 + rand_below(rng, 2), anchors)));
        size_t tables = 1 + rand_below(rng, 2);
        for (size_t t = 0; t < tables; ++t) {
            doc.blocks.push_back(
                Block::table(make_table(prose, rng, theme, 8 + rand_below(rng, 7))));
            last_table = doc.blocks.size() - 1;
            table_theme = theme;
        }
    }

    // Top up rows until tables dominate the document by character count.
    auto table_ratio = [&doc] {
        size_t table_chars = 0, total = 0;
        for (const auto& b : doc.blocks) {
            size_t len = rendered_length(b);
            total += len;
            if (b.kind == Block::Kind::Table)
                table_chars += len;
        }
        return static_cast<double>(table_chars) / static_cast<double>(total);
    };
    while (table_ratio() < 0.65) {
        auto more = make_table(prose, rng, table_theme, 6);
        auto& rows = doc.blocks[last_table].rows;
        rows.insert(rows.end(), more.begin() + 1, more.end());
    }
    return doc;
}

inline StructuredDocument make_diagram_ref(const ProseModel& prose, std::mt19937_64& rng) {
    StructuredDocument doc;
    doc.category = DocumentCategory::DiagramRef;
    auto themes = theme_cycle(rng);
    size_t theme_i = 0;
    auto next_theme = [&] { return themes[theme_i++ % themes.size()]; };

    size_t title_theme = next_theme();
    doc.blocks.push_back(
        Block::heading(1, "Drawing set " + std::to_string(100 + rand_below(rng, 900)) + " " +
                              prose.phrase(rng, title_theme, 2)));

    size_t sentences = 0;
    size_t sheets = 2 + rand_below(rng, 2);
    for (size_t s = 0; s < sheets; ++s) {
        size_t theme = next_theme();
        auto anchors = prose.pick_anchors(rng, theme);
        doc.blocks.push_back(Block::heading(2, "Sheet " + std::to_string(s + 1) + " " +
                                                   prose.phrase(rng, theme, 2, anchors[0])));
        doc.blocks.push_back(
            Block::figure("Drawing D-" + std::to_string(1000 + rand_below(rng, 9000)) +
                          " sheet " + std::to_string(s + 1) + " " + prose.phrase(rng, theme, 2)));
        size_t paras = 1 + rand_below(rng, 2);
        for (size_t p = 0; p < paras && sentences < 20; ++p) {
            std::string para;
            size_t n = 1 + rand_below(rng, 2);
            for (size_t i = 0; i < n; ++i) {
                if (i > 0)
                    para.push_back(' ');
                switch (rand_below(rng, 3)) {
                case 0:
                    para += "Line " + make_tag(rng) + " routes from " + make_tag(rng) + " to " +
                            make_tag(rng) + ".";
                    break;
                case 1:
                    para += "Tag " + make_tag(rng) + " trips the " +
                            prose.word(theme, rand_below(rng, 24)) + " " +
                            prose.word(theme, rand_below(rng, 24)) + " loop.";
                    break;
                default:
                    para += prose.sentence(rng, theme, 5, 9, anchors);
                    break;
                }
                ++sentences;
            }
            doc.blocks.push_back(Block::paragraph(para));
        }
    }
    return doc;
}

} // namespace synth

// Deterministic synthetic corpus: `per_category` documents in each of the
// three categories, quotas guaranteed for every seed.
inline std::pair<CorpusManifest, std::vector<StructuredDocument>>
generate_corpus(uint64_t seed, size_t per_category) {
    if (per_category == 0)
        throw Error("per_category must be >= 1");
    synth::ProseModel prose(seed);
    CorpusManifest manifest;
    manifest.seed = seed;
    std::vector<StructuredDocument> docs;

    const DocumentCategory cats[] = {DocumentCategory::TextHeavy, DocumentCategory::TableHeavy,
                                     DocumentCategory::DiagramRef};
    for (size_t c = 0; c < 3; ++c) {
        for (size_t i = 0; i < per_category; ++i) {
            std::mt19937_64 rng(mix64(seed, c * 1000003ULL + i));
            StructuredDocument doc;
            switch (cats[c]) {
            case DocumentCategory::TextHeavy: doc = synth::make_text_heavy(prose, rng); break;
            case DocumentCategory::TableHeavy: doc = synth::make_table_heavy(prose, rng); break;
            case DocumentCategory::DiagramRef: doc = synth::make_diagram_ref(prose, rng); break;
            }
            char buf[32];
            std::snprintf(buf, sizeof(buf), "-%03u", static_cast<unsigned>(i));
            doc.doc_id = to_string(cats[c]) + buf;
            canonicalize_spans(doc);
            manifest.entries.push_back({doc.doc_id, cats[c], doc.doc_id + ".md"});
            docs.push_back(std::move(doc));
        }
    }
    return {std::move(manifest), std::move(docs)};
}

} // namespace chunkbench
