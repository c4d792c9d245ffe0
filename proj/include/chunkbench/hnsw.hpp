#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chunkbench/binio.hpp"
#include "chunkbench/embedding.hpp"
#include "chunkbench/error.hpp"
#include "chunkbench/hashing.hpp"

namespace chunkbench {

struct HnswParams {
    size_t m = 16;                // max neighbors per node per layer (2m at layer 0)
    size_t ef_construction = 200;
    size_t ef_search = 100;
    uint64_t level_seed = 0;

    void validate() const {
        if (m < 2)
            throw Error("hnsw m must be >= 2");
        if (ef_construction < m)
            throw Error("hnsw ef_construction must be >= m");
        if (ef_search < 1)
            throw Error("hnsw ef_search must be >= 1");
    }
};

struct SearchHit {
    std::string chunk_id;
    double score;  // cosine similarity
};

using SearchResult = std::vector<SearchHit>;

// In-process HNSW over unit vectors, cosine metric (plain inner product).
// Construction is fully deterministic in (insertion order, params): node
// levels come from level_seed and all internal orderings tie-break on node
// index. Results tie-break on chunk_id so downstream IR metrics are stable.
class VectorIndex {
public:
    VectorIndex() = default;

    static VectorIndex build(const std::vector<std::pair<std::string, EmbeddingVector>>& items,
                             const HnswParams& params) {
        params.validate();
        VectorIndex idx;
        idx.params_ = params;
        if (items.empty())
            return idx;

        idx.dim_ = items.front().second.dim();
        std::set<std::string> seen;
        for (const auto& [id, vec] : items) {
            if (vec.dim() != idx.dim_)
                throw Error("vector dimension mismatch for " + id + ": " +
                            std::to_string(vec.dim()) + " vs " + std::to_string(idx.dim_));
            if (std::abs(vec.norm() - 1.0) > 1e-6)
                throw Error("vector for " + id + " is not unit norm");
            if (!seen.insert(id).second)
                throw Error("duplicate chunk_id: " + id);
        }

        idx.ids_.reserve(items.size());
        idx.data_.reserve(items.size() * idx.dim_);
        idx.levels_.reserve(items.size());
        std::mt19937_64 level_rng(mix64(params.level_seed, 0x484E5357ULL));
        const double ml = 1.0 / std::log(static_cast<double>(params.m));
        for (const auto& [id, vec] : items) {
            idx.ids_.push_back(id);
            idx.data_.insert(idx.data_.end(), vec.values.begin(), vec.values.end());
            double u = rand_unit(level_rng);
            if (u <= 0.0)
                u = 0x1.0p-53;
            uint32_t level = static_cast<uint32_t>(std::min(-std::log(u) * ml, 32.0));
            idx.levels_.push_back(level);
        }
        idx.links_.resize(items.size());
        for (size_t i = 0; i < items.size(); ++i)
            idx.links_[i].resize(idx.levels_[i] + 1);

        for (uint32_t i = 0; i < items.size(); ++i)
            idx.insert(i);
        idx.repair_connectivity();
        return idx;
    }

    size_t size() const { return ids_.size(); }
    size_t dim() const { return dim_; }
    const HnswParams& params() const { return params_; }
    const std::vector<std::string>& chunk_ids() const { return ids_; }

    EmbeddingVector vector_at(size_t i) const {
        return EmbeddingVector{{data_.begin() + static_cast<long>(i * dim_),
                                data_.begin() + static_cast<long>((i + 1) * dim_)}};
    }

    // HNSW descent plus a layer-0 beam of width max(ef_search, k).
    SearchResult search_knn(const EmbeddingVector& query, size_t k, size_t ef_search = 0) const {
        check_query(query, k);
        if (ids_.empty())
            return {};
        if (ef_search == 0)
            ef_search = params_.ef_search;
        const size_t ef = std::max(ef_search, k);

        uint32_t ep = entry_;
        for (uint32_t lc = levels_[entry_]; lc > 0; --lc)
            ep = greedy_closest(query.values.data(), ep, lc);
        auto beam = search_layer(query.values.data(), ep, ef, 0);
        SearchResult hits;
        hits.reserve(beam.size());
        for (const auto& [neg_score, node] : beam)
            hits.push_back({ids_[node], -neg_score});
        return finalize(std::move(hits), k);
    }

    // Exact full scan with the same scoring and tie-break rule.
    SearchResult search_exact(const EmbeddingVector& query, size_t k) const {
        check_query(query, k);
        SearchResult hits;
        hits.reserve(ids_.size());
        for (size_t i = 0; i < ids_.size(); ++i)
            hits.push_back({ids_[i], dot(query.values.data(), i)});
        return finalize(std::move(hits), k);
    }

    bool layer0_connected() const {
        if (ids_.empty())
            return true;
        return reachable_from_entry().size() == ids_.size();
    }

    size_t max_degree(uint32_t layer) const { return layer == 0 ? 2 * params_.m : params_.m; }

    const std::vector<std::vector<uint32_t>>& links_of(size_t node) const { return links_[node]; }

    // ------------------------------------------------------------------
    // CBIX format: magic "CBIX", version, params, dim, node table (id,
    // level, f32 vector), adjacency lists, crc32 of everything before the
    // checksum. Little-endian fixed-width fields.
    // ------------------------------------------------------------------

    std::string serialize() const {
        ByteWriter w;
        w.bytes("CBIX", 4);
        w.u32(kFormatVersion);
        w.u32(static_cast<uint32_t>(params_.m));
        w.u32(static_cast<uint32_t>(params_.ef_construction));
        w.u32(static_cast<uint32_t>(params_.ef_search));
        w.u64(params_.level_seed);
        w.u32(static_cast<uint32_t>(dim_));
        w.u64(ids_.size());
        w.u32(entry_);
        for (size_t i = 0; i < ids_.size(); ++i) {
            w.str(ids_[i]);
            w.u32(levels_[i]);
            for (size_t d = 0; d < dim_; ++d)
                w.f32(static_cast<float>(data_[i * dim_ + d]));
        }
        for (size_t i = 0; i < ids_.size(); ++i) {
            for (const auto& layer : links_[i]) {
                w.u32(static_cast<uint32_t>(layer.size()));
                for (uint32_t n : layer)
                    w.u32(n);
            }
        }
        uint32_t crc = crc32(w.data().data(), w.size());
        w.u32(crc);
        return w.take();
    }

    static VectorIndex deserialize(const std::string& bytes) {
        if (bytes.size() < 8)
            throw Error("index file truncated: too short for checksum");
        uint32_t stored = 0;
        for (int i = 0; i < 4; ++i)
            stored |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[bytes.size() - 4 + i]))
                      << (8 * i);
        uint32_t actual = crc32(bytes.data(), bytes.size() - 4);
        if (stored != actual)
            throw Error("index checksum mismatch (file corrupt or truncated)");

        ByteReader r(std::string_view(bytes.data(), bytes.size() - 4));
        char magic[4];
        for (auto& c : magic)
            c = static_cast<char>(r.u8());
        if (std::string_view(magic, 4) != "CBIX")
            throw Error("not a CBIX index file");
        uint32_t version = r.u32();
        if (version != kFormatVersion)
            throw Error("unsupported CBIX version: " + std::to_string(version));

        VectorIndex idx;
        idx.params_.m = r.u32();
        idx.params_.ef_construction = r.u32();
        idx.params_.ef_search = r.u32();
        idx.params_.level_seed = r.u64();
        idx.dim_ = r.u32();
        uint64_t count = r.u64();
        idx.entry_ = r.u32();
        idx.ids_.reserve(count);
        idx.levels_.reserve(count);
        idx.data_.reserve(count * idx.dim_);
        for (uint64_t i = 0; i < count; ++i) {
            idx.ids_.push_back(r.str());
            idx.levels_.push_back(r.u32());
            for (size_t d = 0; d < idx.dim_; ++d)
                idx.data_.push_back(static_cast<double>(r.f32()));
        }
        idx.links_.resize(count);
        for (uint64_t i = 0; i < count; ++i) {
            idx.links_[i].resize(idx.levels_[i] + 1);
            for (auto& layer : idx.links_[i]) {
                uint32_t deg = r.u32();
                layer.reserve(deg);
                for (uint32_t d = 0; d < deg; ++d)
                    layer.push_back(r.u32());
            }
        }
        if (r.remaining() != 0)
            throw Error("index file has trailing bytes");
        return idx;
    }

private:
    static constexpr uint32_t kFormatVersion = 1;

    void check_query(const EmbeddingVector& query, size_t k) const {
        if (k < 1)
            throw Error("k must be >= 1");
        if (!ids_.empty() && query.dim() != dim_)
            throw Error("query dimension mismatch: " + std::to_string(query.dim()) + " vs " +
                        std::to_string(dim_));
    }

    double dot(const double* q, size_t node) const {
        const double* v = data_.data() + node * dim_;
        double s = 0;
        for (size_t i = 0; i < dim_; ++i)
            s += q[i] * v[i];
        return s;
    }

    static SearchResult finalize(SearchResult hits, size_t k) {
        std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
            if (a.score != b.score)
                return a.score > b.score;
            return a.chunk_id < b.chunk_id;
        });
        if (hits.size() > k)
            hits.resize(k);
        return hits;
    }

    uint32_t greedy_closest(const double* q, uint32_t start, uint32_t layer) const {
        uint32_t cur = start;
        double best = -dot(q, cur);
        bool improved = true;
        while (improved) {
            improved = false;
            for (uint32_t n : links_[cur][layer]) {
                double d = -dot(q, n);
                if (d < best) {
                    best = d;
                    cur = n;
                    improved = true;
                }
            }
        }
        return cur;
    }

    // Beam search within one layer. Entries are (negated dot, node index) so
    // smaller is closer; ties fall back to node index for determinism.
    std::vector<std::pair<double, uint32_t>> search_layer(const double* q, uint32_t entry,
                                                          size_t ef, uint32_t layer) const {
        using Entry = std::pair<double, uint32_t>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> candidates;
        std::priority_queue<Entry> best;  // max-heap: worst of the ef best on top
        std::vector<uint8_t> visited(ids_.size(), 0);

        double d0 = -dot(q, entry);
        candidates.emplace(d0, entry);
        best.emplace(d0, entry);
        visited[entry] = 1;

        while (!candidates.empty()) {
            auto [d, node] = candidates.top();
            if (d > best.top().first && best.size() >= ef)
                break;
            candidates.pop();
            for (uint32_t n : links_[node][layer]) {
                if (visited[n])
                    continue;
                visited[n] = 1;
                double dn = -dot(q, n);
                if (best.size() < ef || dn < best.top().first) {
                    candidates.emplace(dn, n);
                    best.emplace(dn, n);
                    if (best.size() > ef)
                        best.pop();
                }
            }
        }
        std::vector<Entry> out(best.size());
        for (size_t i = out.size(); i-- > 0;) {
            out[i] = best.top();
            best.pop();
        }
        return out;
    }

    void insert(uint32_t node) {
        const uint32_t level = levels_[node];
        if (entry_ == kNoEntry) {
            entry_ = node;
            return;
        }
        const double* q = data_.data() + node * dim_;
        uint32_t top = levels_[entry_];
        uint32_t ep = entry_;
        for (uint32_t lc = top; lc > level; --lc)
            ep = greedy_closest(q, ep, lc);

        for (uint32_t lc = std::min(top, level);; --lc) {
            auto cand = search_layer(q, ep, params_.ef_construction, lc);
            // Simple closest-M selection.
            size_t take = std::min(params_.m, cand.size());
            for (size_t i = 0; i < take; ++i) {
                uint32_t n = cand[i].second;
                links_[node][lc].push_back(n);
                links_[n][lc].push_back(node);
                prune(n, lc);
            }
            if (!cand.empty())
                ep = cand.front().second;
            if (lc == 0)
                break;
        }
        if (level > top)
            entry_ = node;
    }

    // Keep only the closest max_degree neighbors of `node`.
    void prune(uint32_t node, uint32_t layer) {
        auto& nbrs = links_[node][layer];
        const size_t cap = max_degree(layer);
        if (nbrs.size() <= cap)
            return;
        const double* v = data_.data() + node * dim_;
        std::vector<std::pair<double, uint32_t>> scored;
        scored.reserve(nbrs.size());
        for (uint32_t n : nbrs)
            scored.emplace_back(-dot(v, n), n);
        std::sort(scored.begin(), scored.end());
        nbrs.clear();
        for (size_t i = 0; i < cap; ++i)
            nbrs.push_back(scored[i].second);
    }

    std::vector<uint32_t> reachable_from_entry() const {
        std::vector<uint8_t> seen(ids_.size(), 0);
        std::vector<uint32_t> order;
        order.push_back(entry_);
        seen[entry_] = 1;
        for (size_t i = 0; i < order.size(); ++i) {
            for (uint32_t n : links_[order[i]][0]) {
                if (!seen[n]) {
                    seen[n] = 1;
                    order.push_back(n);
                }
            }
        }
        return order;
    }

    // Closest-M pruning can orphan a node in rare cases; reattach each
    // orphan to its nearest reachable node, keeping degree bounds intact.
    void repair_connectivity() {
        if (ids_.empty())
            return;
        for (size_t guard = 0; guard <= ids_.size(); ++guard) {
            auto order = reachable_from_entry();
            if (order.size() == ids_.size())
                return;
            std::vector<uint8_t> reachable(ids_.size(), 0);
            for (uint32_t n : order)
                reachable[n] = 1;
            uint32_t u = 0;
            while (reachable[u])
                ++u;
            const double* uv = data_.data() + u * dim_;
            double best = 2.0;
            uint32_t v = entry_;
            for (uint32_t c : order) {
                double d = -dot(uv, c);
                if (d < best) {
                    best = d;
                    v = c;
                }
            }
            links_[u][0].push_back(v);
            links_[v][0].push_back(u);
            prune_keep(u, 0, v);
            prune_keep(v, 0, u);
        }
        throw Error("layer-0 connectivity repair did not converge");
    }

    // Prune to the degree cap but never drop `keep`.
    void prune_keep(uint32_t node, uint32_t layer, uint32_t keep) {
        auto& nbrs = links_[node][layer];
        const size_t cap = max_degree(layer);
        if (nbrs.size() <= cap)
            return;
        const double* v = data_.data() + node * dim_;
        std::vector<std::pair<double, uint32_t>> scored;
        for (uint32_t n : nbrs)
            if (n != keep)
                scored.emplace_back(-dot(v, n), n);
        std::sort(scored.begin(), scored.end());
        nbrs.clear();
        nbrs.push_back(keep);
        for (size_t i = 0; i + 1 < cap && i < scored.size(); ++i)
            nbrs.push_back(scored[i].second);
    }

    static constexpr uint32_t kNoEntry = 0xFFFFFFFFu;

    HnswParams params_;
    size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<double> data_;        // row-major, size() * dim_
    std::vector<uint32_t> levels_;
    std::vector<std::vector<std::vector<uint32_t>>> links_;  // [node][layer]
    uint32_t entry_ = kNoEntry;
};

} // namespace chunkbench
