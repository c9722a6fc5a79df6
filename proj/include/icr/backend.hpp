#pragma once

// Sources of attention for the two scoring passes. Each backend counts its
// attention acquisitions (one per forward pass or dump read) so callers can
// check the two-pass contract.

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icr/attention.hpp"
#include "icr/error.hpp"
#include "icr/icra.hpp"
#include "icr/layout_json.hpp"
#include "icr/prompt_layout.hpp"
#include "icr/synth.hpp"
#include "icr/toy_model.hpp"

namespace icr {

struct QueryJob {
    std::string qid;
    const PromptLayout& layout;
    const PromptLayout& cal_layout;
    std::span<const std::string> retriever_order;
};

struct AttentionPair {
    AttentionSlice query;
    AttentionSlice calibration;
    /// Tokens of the calibration pass served from the query pass's cache.
    std::size_t reused_prefix_tokens = 0;
    /// Set when the backend supplies its own spans (dumps exported with a
    /// model's tokenizer); they replace the locally built layouts.
    std::optional<PromptLayout> layout;
    std::optional<PromptLayout> cal_layout;
};

class AttentionBackend {
public:
    virtual ~AttentionBackend() = default;

    virtual std::string name() const = 0;
    /// Markers, L, H and the tokenizer used to build prompts for this backend.
    virtual const ModelProfile& profile() const = 0;
    virtual AttentionPair acquire(const QueryJob& job) const = 0;

    virtual std::size_t acquisitions() const noexcept { return acquisitions_.load(); }

protected:
    void count_acquisition() const noexcept { acquisitions_.fetch_add(1); }

private:
    mutable std::atomic<std::size_t> acquisitions_{0};
};

/// Runs the toy transformer. The calibration pass reuses the query pass's
/// key/value cache for the shared prompt prefix.
class ToyBackend final : public AttentionBackend {
public:
    explicit ToyBackend(const ToyConfig& config, bool reuse_prefix = true)
        : model_(config), reuse_prefix_(reuse_prefix) {
        profile_.name = "toy";
        profile_.prefix_marker = "[INST] ";
        profile_.suffix_marker = " [/INST]";
        profile_.layers = config.layers;
        profile_.heads = config.heads;
        profile_.tokenizer = std::make_shared<WhitespaceTokenizer>(config.vocab_size);
    }

    std::string name() const override { return "toy"; }
    const ModelProfile& profile() const override { return profile_; }
    const ToyModel& model() const noexcept { return model_; }

    AttentionPair acquire(const QueryJob& job) const override {
        AttentionPair out;
        const auto q_ids = job.layout.token_ids();
        const auto q_rows = job.layout.query_rows();
        auto q = model_.forward(q_ids, q_rows);
        count_acquisition();
        const auto c_ids = job.cal_layout.token_ids();
        const auto c_rows = job.cal_layout.query_rows();
        auto c = model_.forward(c_ids, c_rows, reuse_prefix_ ? &q.cache : nullptr);
        count_acquisition();
        out.query = std::move(q.attention);
        out.calibration = std::move(c.attention);
        out.reused_prefix_tokens = c.reused_tokens;
        return out;
    }

private:
    ToyModel model_;
    bool reuse_prefix_;
    ModelProfile profile_;
};

/// Planted-signal attention. The target is the document at a fixed
/// retriever rank (1-based; 0 means the last candidate).
struct PlantTemplate {
    std::size_t target_rank = 0;
    double boost = 0.0;
    std::vector<double> position_bias;
    double floor = 1.0;
};

class PlantedBackend final : public AttentionBackend {
public:
    PlantedBackend(std::uint32_t layers, std::uint32_t heads, PlantTemplate plant, std::uint32_t vocab_size = 32000)
        : plant_(std::move(plant)) {
        profile_.name = "planted";
        profile_.prefix_marker = "[INST] ";
        profile_.suffix_marker = " [/INST]";
        profile_.layers = layers;
        profile_.heads = heads;
        profile_.tokenizer = std::make_shared<WhitespaceTokenizer>(vocab_size);
        profile_.check();
    }

    std::string name() const override { return "planted"; }
    const ModelProfile& profile() const override { return profile_; }

    std::string target_for(std::span<const std::string> retriever_order) const {
        if (retriever_order.empty()) fail(ErrorCode::EmptyCandidateSet, "no candidates");
        const std::size_t r = plant_.target_rank == 0 ? retriever_order.size() : plant_.target_rank;
        if (r > retriever_order.size())
            fail(ErrorCode::UnknownTargetDoc, "target rank " + std::to_string(r) + " beyond candidate list");
        return retriever_order[r - 1];
    }

    AttentionPair acquire(const QueryJob& job) const override {
        PlantSpec planted{target_for(job.retriever_order), plant_.boost, plant_.position_bias, plant_.floor};
        AttentionPair out;
        out.query = synth_attention(job.layout, planted, profile_.layers, profile_.heads);
        count_acquisition();
        out.calibration = synth_attention(job.cal_layout, planted, profile_.layers, profile_.heads);
        count_acquisition();
        return out;
    }

private:
    PlantTemplate plant_;
    ModelProfile profile_;
};

/// Reads `{qid}.q.icra` / `{qid}.cal.icra` from a directory. When
/// `{qid}.q.layout.json` / `{qid}.cal.layout.json` sit next to them, their
/// spans are used instead of the locally built ones.
class DumpBackend final : public AttentionBackend {
public:
    explicit DumpBackend(std::filesystem::path dir, std::uint32_t vocab_size = 32000) : dir_(std::move(dir)) {
        if (!std::filesystem::is_directory(dir_))
            fail(ErrorCode::BackendUnavailable, "dump directory " + dir_.string() + " does not exist");
        profile_.name = "dump";
        profile_.prefix_marker = "[INST] ";
        profile_.suffix_marker = " [/INST]";
        profile_.tokenizer = std::make_shared<WhitespaceTokenizer>(vocab_size);
    }

    std::string name() const override { return "dump"; }
    const ModelProfile& profile() const override { return profile_; }

    AttentionPair acquire(const QueryJob& job) const override {
        const auto q_path = query_dump_path(dir_, job.qid);
        const auto c_path = calibration_dump_path(dir_, job.qid);
        if (!std::filesystem::exists(q_path)) fail(ErrorCode::MissingQueryDump, q_path.string());
        if (!std::filesystem::exists(c_path)) fail(ErrorCode::MissingCalibrationDump, c_path.string());
        AttentionPair out;
        out.query = read_dump_file(q_path).slice;
        count_acquisition();
        out.calibration = read_dump_file(c_path).slice;
        count_acquisition();
        const auto ql = layout_json_path(dir_, job.qid, PassKind::query);
        const auto cl = layout_json_path(dir_, job.qid, PassKind::calibration);
        if (std::filesystem::exists(ql) && std::filesystem::exists(cl)) {
            out.layout = layout_from_json(read_json_file(ql));
            out.cal_layout = layout_from_json(read_json_file(cl));
        }
        return out;
    }

private:
    std::filesystem::path dir_;
    ModelProfile profile_;
};

}  // namespace icr
