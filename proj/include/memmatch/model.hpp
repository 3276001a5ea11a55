#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <string>

#include "memmatch/encoder.hpp"
#include "memmatch/memory_layer.hpp"
#include "memmatch/seqformat.hpp"
#include "memmatch/vocab.hpp"

namespace memmatch {

struct ModelConfig {
    int d_ctx = 32;
    int d_emb = 16;
    int vocab_size = 2048;
    int filters = 64;
    int blocks = 2;
    std::array<int, 3> max_len = {50, 100, 150};
    uint64_t seed = 1;

    int d_input() const { return d_ctx + d_emb; }
    int max_positions() const { return std::max(max_len[0], std::max(max_len[1], max_len[2])); }
};

struct LevelParams {
    Matrix embed;                // d_emb x V
    Matrix conv_w;               // M x (d_emb + d_ctx)
    std::vector<double> conv_b;  // M
};

struct LevelGrads {
    Matrix embed, conv_w;
    std::vector<double> conv_b;
};

struct ModelGrads {
    EncoderGrads enc;
    std::array<LevelGrads, 3> level;
    void init_like(const struct Model& model);
    void zero();
};

/// Everything forward/backward needs about one encoded sequence.
struct SequenceForward {
    TokenSequence seq;
    EncoderActivations enc_acts;
    EncoderOutput ctx;
    Matrix level_in;  // D x N
    FeatureMaps maps;
    MemoryVector pooled;
    int level = 0;
};

/// The shared encoder plus the three per-level embedding tables and
/// memory layers. Forward passes are const and thread-safe; updates are
/// single-writer.
struct Model {
    ModelConfig cfg;
    EncoderParams enc;
    std::array<LevelParams, 3> level;
    mutable std::atomic<uint64_t> encode_calls{0};

    Model() = default;
    Model(const Model& o) { *this = o; }
    Model& operator=(const Model& o);

    static Model init(const ModelConfig& cfg);

    /// Tokenize + encode + level input + memory layer for one formatted
    /// sequence. keep_maps retains feature maps (needed for alignment);
    /// capture retains encoder activations (needed for backward).
    SequenceForward forward(int level, const std::string& text, const Vocabulary& vocab,
                            bool capture = false, bool keep_maps = false) const;

    /// Pooled f32 vector as stored in search memory stores.
    std::vector<float> memory_f32(int level, const std::string& text, const Vocabulary& vocab) const;

    /// dg flows back through the memory layer, the level embedding and —
    /// unless skip_encoder — the shared encoder.
    void backward(const SequenceForward& fwd, const std::vector<double>& dg, ModelGrads& grads,
                  bool skip_encoder = false, bool skip_memory = false) const;

    void sgd_step(const ModelGrads& grads, double lr_encoder, double lr_memory, bool encoder_frozen,
                  bool memory_frozen);

    std::string serialize() const;
    static Model deserialize(const std::string& buf);
    void save(const std::string& path) const;
    static Model load(const std::string& path);

    uint64_t checksum() const;
    long total_params() const;
};

}  // namespace memmatch
