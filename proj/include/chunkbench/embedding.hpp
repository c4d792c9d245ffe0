#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "chunkbench/binio.hpp"
#include "chunkbench/error.hpp"
#include "chunkbench/hashing.hpp"

namespace chunkbench {

// Unit-norm dense vector. Everything downstream (semantic chunking, the
// index) assumes unit vectors, so cosine similarity is a plain dot product.
struct EmbeddingVector {
    std::vector<double> values;

    size_t dim() const { return values.size(); }

    double norm() const {
        double s = 0;
        for (double v : values)
            s += v * v;
        return std::sqrt(s);
    }
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw Error("cosine dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
    double s = 0;
    for (size_t i = 0; i < a.values.size(); ++i)
        s += a.values[i] * b.values[i];
    return s;
}

inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return 1.0 - cosine_similarity(a, b);
}

struct LocalSpec {
    size_t dim = 256;
    uint64_t hash_seed = 0;

    void validate() const {
        if (dim < 8)
            throw Error("local embedder dim must be >= 8");
    }
};

struct RemoteSpec {
    std::string endpoint;  // e.g. "http://localhost:8080"
    std::string model;
    std::string api_key;
    double timeout_s = 30.0;
    size_t batch_size = 16;
    size_t concurrency = 4;  // in-flight batches
    int max_attempts = 3;
    int backoff_ms = 100;

    void validate() const {
        if (endpoint.empty())
            throw Error("remote embedder endpoint must be set");
        if (batch_size == 0 || concurrency == 0)
            throw Error("remote embedder batch size and concurrency must be >= 1");
    }
};

struct EmbedderSpec {
    enum class Kind { Local, Remote } kind = Kind::Local;
    LocalSpec local;
    RemoteSpec remote;
    bool cache_enabled = false;
    std::string cache_path;
};

// Signed feature hashing over lowercased alphanumeric tokens. Deterministic
// in (text, dim, hash_seed); cosine between outputs grows with vocabulary
// overlap, which is all the harness needs from an embedding.
inline EmbeddingVector embed_local(std::string_view text, const LocalSpec& spec) {
    spec.validate();
    std::vector<double> acc(spec.dim, 0.0);
    const uint64_t seed = mix64(0x1000193, spec.hash_seed);
    std::string token;
    size_t tokens = 0;
    uint64_t first_hash = 0;
    auto flush = [&] {
        if (token.empty())
            return;
        uint64_t h = fnv1a64(token, seed);
        if (tokens == 0)
            first_hash = h;
        ++tokens;
        size_t idx = static_cast<size_t>(h % spec.dim);
        acc[idx] += (h >> 63) ? -1.0 : 1.0;
        token.clear();
    };
    for (char c : text) {
        if (c >= 'A' && c <= 'Z')
            token.push_back(static_cast<char>(c - 'A' + 'a'));
        else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
            token.push_back(c);
        else
            flush();
    }
    flush();
    if (tokens == 0)
        throw Error("unembeddable text: no alphanumeric tokens");

    double norm = 0;
    for (double v : acc)
        norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        // All signed counts cancelled (hash collision of opposite signs).
        acc[static_cast<size_t>(first_hash % spec.dim)] = 1.0;
        norm = 1.0;
    }
    for (double& v : acc)
        v /= norm;
    return EmbeddingVector{std::move(acc)};
}

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual size_t dim() const = 0;

    // Identifies the model for cache keys, e.g. "local:d256:s42".
    virtual std::string model_id() const = 0;

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) {
        calls_ += texts.size();
        return do_embed(texts);
    }

    EmbeddingVector embed(const std::string& text) {
        return embed_batch(std::vector<std::string>{text}).front();
    }

    // Number of texts requested so far (cache hits included).
    uint64_t texts_embedded() const { return calls_.load(); }

protected:
    virtual std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) = 0;

private:
    std::atomic<uint64_t> calls_{0};
};

class LocalEmbedder final : public Embedder {
public:
    explicit LocalEmbedder(LocalSpec spec) : spec_(spec) { spec_.validate(); }

    size_t dim() const override { return spec_.dim; }

    std::string model_id() const override {
        return "local:d" + std::to_string(spec_.dim) + ":s" + std::to_string(spec_.hash_seed);
    }

protected:
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts)
            out.push_back(embed_local(t, spec_));
        return out;
    }

private:
    LocalSpec spec_;
};

// ---------------------------------------------------------------------------
// On-disk embedding cache: append-only log of fixed-format records
//   [32-byte digest][u32 dim][dim x f64][u32 crc32 of the preceding fields]
// On open, the valid prefix is loaded and the file is truncated at the first
// corrupt or incomplete record, so interrupted writes heal on reopen.
// ---------------------------------------------------------------------------

class EmbeddingCache {
public:
    using Digest = std::array<unsigned char, 32>;

    explicit EmbeddingCache(std::string path) : path_(std::move(path)) { load(); }

    static Digest key(std::string_view model_id, std::string_view text) {
        Sha256 h;
        h.update(model_id);
        h.update("\x1f", 1);
        h.update(text);
        return h.finish();
    }

    std::optional<EmbeddingVector> lookup(const Digest& digest) const {
        std::shared_lock lock(mu_);
        auto it = entries_.find(digest);
        if (it == entries_.end())
            return std::nullopt;
        return it->second;
    }

    void store(const Digest& digest, const EmbeddingVector& vec) {
        std::unique_lock lock(mu_);
        entries_[digest] = vec;
        ByteWriter w;
        w.bytes(digest.data(), digest.size());
        w.u32(static_cast<uint32_t>(vec.dim()));
        for (double v : vec.values)
            w.f64(v);
        uint32_t crc = crc32(w.data().data(), w.size());
        w.u32(crc);
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out)
            throw Error("cannot open cache for append: " + path_);
        out.write(w.data().data(), static_cast<std::streamsize>(w.size()));
        out.flush();
    }

    size_t size() const {
        std::shared_lock lock(mu_);
        return entries_.size();
    }

private:
    void load() {
        std::ifstream in(path_, std::ios::binary);
        if (!in)
            return;  // no cache yet
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string data = ss.str();
        size_t valid_end = 0;
        ByteReader r(data);
        while (r.remaining() > 0) {
            size_t record_start = r.pos();
            try {
                Digest digest;
                for (auto& b : digest)
                    b = r.u8();
                uint32_t dim = r.u32();
                if (dim == 0 || dim > (1u << 20))
                    break;
                EmbeddingVector vec;
                vec.values.reserve(dim);
                for (uint32_t i = 0; i < dim; ++i)
                    vec.values.push_back(r.f64());
                uint32_t stored_crc = r.u32();
                uint32_t actual =
                    crc32(data.data() + record_start, r.pos() - 4 - record_start);
                if (stored_crc != actual)
                    break;  // corrupt record: drop it and everything after
                entries_[digest] = std::move(vec);
                valid_end = r.pos();
            } catch (const Error&) {
                break;  // truncated tail
            }
        }
        if (valid_end != data.size()) {
            std::filesystem::resize_file(path_, valid_end);
        }
    }

    std::string path_;
    mutable std::shared_mutex mu_;
    std::map<Digest, EmbeddingVector> entries_;
};

// Decorator that serves repeated texts from the cache.
class CachingEmbedder final : public Embedder {
public:
    CachingEmbedder(std::unique_ptr<Embedder> inner, std::string cache_path)
        : inner_(std::move(inner)), cache_(std::move(cache_path)) {}

    size_t dim() const override { return inner_->dim(); }
    std::string model_id() const override { return inner_->model_id(); }

    EmbeddingCache& cache() { return cache_; }

protected:
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out(texts.size());
        std::vector<size_t> miss_idx;
        std::vector<std::string> miss_texts;
        const std::string id = model_id();
        for (size_t i = 0; i < texts.size(); ++i) {
            auto hit = cache_.lookup(EmbeddingCache::key(id, texts[i]));
            if (hit) {
                out[i] = std::move(*hit);
            } else {
                miss_idx.push_back(i);
                miss_texts.push_back(texts[i]);
            }
        }
        if (!miss_texts.empty()) {
            auto fresh = inner_->embed_batch(miss_texts);
            for (size_t j = 0; j < miss_idx.size(); ++j) {
                cache_.store(EmbeddingCache::key(id, miss_texts[j]), fresh[j]);
                out[miss_idx[j]] = std::move(fresh[j]);
            }
        }
        return out;
    }

private:
    std::unique_ptr<Embedder> inner_;
    EmbeddingCache cache_;
};

} // namespace chunkbench
