#pragma once

// A tiny pre-norm causal transformer used as a live, deterministic source of
// attention maps. Only attention is consumed, so there is no unembedding.
//
// Parameters come from SplitMix64 seeded with ToyConfig::seed and are drawn
// uniformly (no transcendental functions), so the same seed yields
// bitwise-identical parameters on any platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "icr/attention.hpp"
#include "icr/error.hpp"
#include "icr/rng.hpp"

namespace icr {

struct ToyConfig {
    std::uint32_t layers = 2;
    std::uint32_t heads = 2;
    std::uint32_t model_dim = 32;
    std::uint32_t vocab_size = 4096;
    std::uint32_t max_len = 4096;
    std::uint64_t seed = 0;

    void check() const {
        if (layers == 0 || heads == 0 || model_dim == 0 || vocab_size == 0 || max_len == 0)
            fail(ErrorCode::InvalidConfig, "toy config fields must be positive");
        if (model_dim % heads != 0)
            fail(ErrorCode::InvalidConfig, "model_dim " + std::to_string(model_dim) +
                                               " not divisible by heads " + std::to_string(heads));
    }
};

/// Per-layer keys and values for every processed position, plus the ids they
/// were computed from. A later pass whose ids share a prefix with these can
/// skip recomputing that prefix.
struct KvCache {
    std::vector<std::int32_t> ids;
    std::vector<std::vector<float>> keys;    // [layer][pos * d + c]
    std::vector<std::vector<float>> values;  // [layer][pos * d + c]
};

struct ForwardResult {
    AttentionSlice attention;
    KvCache cache;
    std::size_t reused_tokens = 0;
};

class ToyModel {
public:
    explicit ToyModel(const ToyConfig& config) : cfg_(config) {
        cfg_.check();
        SplitMix64 rng(cfg_.seed);
        const std::size_t d = cfg_.model_dim;
        auto fill = [&rng](std::vector<float>& w, std::size_t n, double scale) {
            w.resize(n);
            for (auto& x : w) x = static_cast<float>(rng.uniform(-scale, scale));
        };
        fill(token_embedding_, std::size_t{cfg_.vocab_size} * d, 1.0);
        fill(position_embedding_, std::size_t{cfg_.max_len} * d, 0.5);
        const double attn_scale = 2.0 * std::sqrt(3.0 / static_cast<double>(d));
        const double mlp_scale = std::sqrt(3.0 / static_cast<double>(d));
        blocks_.resize(cfg_.layers);
        for (auto& b : blocks_) {
            fill(b.wq, d * d, attn_scale);
            fill(b.wk, d * d, attn_scale);
            fill(b.wv, d * d, mlp_scale);
            fill(b.wo, d * d, mlp_scale);
            fill(b.w1, 4 * d * d, mlp_scale);
            fill(b.w2, 4 * d * d, mlp_scale * 0.5);
        }
    }

    const ToyConfig& config() const noexcept { return cfg_; }

    /// 64-bit FNV-1a over the bit patterns of every parameter.
    std::uint64_t checksum() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        auto mix = [&h](const std::vector<float>& w) {
            for (float f : w) {
                std::uint32_t bits;
                std::memcpy(&bits, &f, sizeof bits);
                for (int i = 0; i < 4; ++i) {
                    h ^= (bits >> (8 * i)) & 0xffu;
                    h *= 0x100000001b3ull;
                }
            }
        };
        mix(token_embedding_);
        mix(position_embedding_);
        for (const auto& b : blocks_) {
            mix(b.wq); mix(b.wk); mix(b.wv); mix(b.wo); mix(b.w1); mix(b.w2);
        }
        return h;
    }

    /// Runs the causal forward pass and records attention for the requested
    /// rows (ascending token indices). If `reuse` is given, keys and values
    /// for the longest shared id prefix (bounded by the first requested row)
    /// are taken from it instead of recomputed; the result is bitwise
    /// identical either way.
    ForwardResult forward(std::span<const std::int32_t> ids, std::span<const std::uint32_t> rows,
                          const KvCache* reuse = nullptr) const {
        const std::size_t T = ids.size();
        if (T > cfg_.max_len)
            fail(ErrorCode::ContextOverflow,
                 std::to_string(T) + " tokens exceed max_len " + std::to_string(cfg_.max_len));
        for (auto id : ids)
            if (id < 0 || static_cast<std::uint32_t>(id) >= cfg_.vocab_size)
                fail(ErrorCode::InvalidConfig, "token id " + std::to_string(id) + " outside vocabulary");

        const std::size_t d = cfg_.model_dim;
        const std::size_t H = cfg_.heads;
        const std::size_t dh = d / H;
        const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));

        std::size_t prefix = 0;
        if (reuse) {
            const std::size_t limit = std::min({reuse->ids.size(), T,
                                                rows.empty() ? T : static_cast<std::size_t>(rows.front())});
            while (prefix < limit && reuse->ids[prefix] == ids[prefix]) ++prefix;
        }

        ForwardResult out;
        out.reused_tokens = prefix;
        out.cache.ids.assign(ids.begin(), ids.end());
        out.cache.keys.resize(cfg_.layers);
        out.cache.values.resize(cfg_.layers);
        std::vector<float> attn_values(std::size_t{cfg_.layers} * H * rows.size() * T, 0.0f);

        // Map token index -> slot in `rows`, or -1.
        std::vector<std::int64_t> row_slot(T, -1);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r] >= T) fail(ErrorCode::RowOutOfRange, "requested row beyond input");
            if (r > 0 && rows[r] <= rows[r - 1]) fail(ErrorCode::NonAscendingRows, "requested rows");
            row_slot[rows[r]] = static_cast<std::int64_t>(r);
        }

        // Hidden states for positions >= prefix only.
        const std::size_t n_new = T - prefix;
        std::vector<float> hidden(n_new * d);
        for (std::size_t i = 0; i < n_new; ++i) {
            const std::size_t pos = prefix + i;
            const float* te = &token_embedding_[static_cast<std::size_t>(ids[pos]) * d];
            const float* pe = &position_embedding_[pos * d];
            for (std::size_t c = 0; c < d; ++c) hidden[i * d + c] = te[c] + pe[c];
        }

        std::vector<float> normed(d), q(d), mixed(d), proj(d), up(4 * d), probs(T);
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            const Block& b = blocks_[l];
            auto& K = out.cache.keys[l];
            auto& V = out.cache.values[l];
            K.assign(T * d, 0.0f);
            V.assign(T * d, 0.0f);
            if (prefix > 0) {
                std::copy_n(reuse->keys[l].begin(), prefix * d, K.begin());
                std::copy_n(reuse->values[l].begin(), prefix * d, V.begin());
            }
            for (std::size_t i = 0; i < n_new; ++i) {
                const std::size_t pos = prefix + i;
                layer_norm({&hidden[i * d], d}, normed);
                matvec(b.wk, normed, {&K[pos * d], d});
                matvec(b.wv, normed, {&V[pos * d], d});
            }
            for (std::size_t i = 0; i < n_new; ++i) {
                const std::size_t pos = prefix + i;
                std::span<float> h{&hidden[i * d], d};
                layer_norm(h, normed);
                matvec(b.wq, normed, q);
                for (std::size_t head = 0; head < H; ++head) {
                    const std::size_t off = head * dh;
                    float max_logit = -INFINITY;
                    for (std::size_t j = 0; j <= pos; ++j) {
                        float dot = 0.0f;
                        for (std::size_t c = 0; c < dh; ++c) dot += q[off + c] * K[j * d + off + c];
                        probs[j] = dot * inv_sqrt_dh;
                        max_logit = std::max(max_logit, probs[j]);
                    }
                    double z = 0.0;
                    for (std::size_t j = 0; j <= pos; ++j) {
                        probs[j] = std::exp(probs[j] - max_logit);
                        z += probs[j];
                    }
                    const double inv_z = 1.0 / z;
                    for (std::size_t j = 0; j <= pos; ++j)
                        probs[j] = static_cast<float>(static_cast<double>(probs[j]) * inv_z);
                    for (std::size_t c = 0; c < dh; ++c) {
                        float acc = 0.0f;
                        for (std::size_t j = 0; j <= pos; ++j) acc += probs[j] * V[j * d + off + c];
                        mixed[off + c] = acc;
                    }
                    if (row_slot[pos] >= 0) {
                        const std::size_t slot = static_cast<std::size_t>(row_slot[pos]);
                        float* dst = &attn_values[((l * H + head) * rows.size() + slot) * T];
                        std::copy_n(probs.begin(), pos + 1, dst);
                    }
                }
                matvec(b.wo, mixed, proj);
                for (std::size_t c = 0; c < d; ++c) h[c] += proj[c];
                layer_norm(h, normed);
                matvec(b.w1, normed, up);
                for (auto& u : up) u = gelu(u);
                matvec(b.w2, up, proj);
                for (std::size_t c = 0; c < d; ++c) h[c] += proj[c];
            }
        }

        std::vector<std::uint32_t> row_vec(rows.begin(), rows.end());
        out.attention = AttentionSlice(cfg_.layers, cfg_.heads, static_cast<std::uint32_t>(T),
                                       std::move(row_vec), std::move(attn_values));
        return out;
    }

private:
    struct Block {
        std::vector<float> wq, wk, wv, wo;  // d x d, row-major (out x in)
        std::vector<float> w1;              // 4d x d
        std::vector<float> w2;              // d x 4d
    };

    static void matvec(const std::vector<float>& w, std::span<const float> x, std::span<float> y) {
        const std::size_t in = x.size();
        for (std::size_t o = 0; o < y.size(); ++o) {
            float acc = 0.0f;
            const float* row = &w[o * in];
            for (std::size_t c = 0; c < in; ++c) acc += row[c] * x[c];
            y[o] = acc;
        }
    }

    static void layer_norm(std::span<const float> x, std::span<float> y) {
        float mean = 0.0f;
        for (float v : x) mean += v;
        mean /= static_cast<float>(x.size());
        float var = 0.0f;
        for (float v : x) var += (v - mean) * (v - mean);
        var /= static_cast<float>(x.size());
        const float inv = 1.0f / std::sqrt(var + 1e-5f);
        for (std::size_t c = 0; c < x.size(); ++c) y[c] = (x[c] - mean) * inv;
    }

    static float gelu(float x) {
        return 0.5f * x * (1.0f + std::tanh(0.7978845608f * (x + 0.044715f * x * x * x)));
    }

    ToyConfig cfg_;
    std::vector<float> token_embedding_;
    std::vector<float> position_embedding_;
    std::vector<Block> blocks_;
};

inline ToyModel init_toy_model(const ToyConfig& config) { return ToyModel(config); }

/// Every row of the L x H x T x T tensor, as a slice whose stored rows are
/// 0..T-1.
inline AttentionSlice forward_attention(const ToyModel& model, std::span<const std::int32_t> ids) {
    std::vector<std::uint32_t> rows(ids.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    return model.forward(ids, rows).attention;
}

}  // namespace icr
