#pragma once

#include <vector>

#include "memmatch/nn.hpp"
#include "memmatch/tokenizer.hpp"

namespace memmatch {

/// Contextual states per token, d_ctx x N. Padded tail columns hold the
/// designated pad state (the zero vector).
struct EncoderOutput {
    Matrix states;
    int n_real = 0;
};

struct AttentionBlock {
    Matrix wq, wk, wv, wo;  // each d_ctx x d_ctx
};

struct EncoderParams {
    Matrix tok_embed;  // d_ctx x V
    Matrix pos_embed;  // d_ctx x max_positions
    std::vector<AttentionBlock> blocks;
    Matrix out_w;               // d_ctx x d_ctx
    std::vector<double> out_b;  // d_ctx

    int d_ctx() const { return tok_embed.rows; }
    int vocab_size() const { return tok_embed.cols; }
    int max_positions() const { return pos_embed.cols; }
    size_t param_count() const;
};

/// Embeddings uniform in [-0.05, 0.05]; attention and output weights
/// uniform in +-1/sqrt(fan_in). Tensor fill order is fixed.
EncoderParams init_encoder(int d_ctx, int vocab_size, int max_positions, int n_blocks, Rng& rng);

/// Per-block intermediates kept for the backward pass.
struct EncoderActivations {
    std::vector<int> ids;  // real-token ids
    int n_real = 0;
    struct BlockActs {
        Matrix x;     // block input, d_ctx x n
        Matrix q, k, v;
        Matrix attn;  // softmax weights over keys, n x n (column per query)
        Matrix ctxv;  // v * attn
    };
    std::vector<BlockActs> blocks;
    Matrix top;  // input of the final linear map
};

EncoderOutput encode(const EncoderParams& params, const TokenSequence& seq,
                     EncoderActivations* acts = nullptr);

struct EncoderGrads {
    Matrix tok_embed, pos_embed;
    std::vector<AttentionBlock> blocks;
    Matrix out_w;
    std::vector<double> out_b;

    void init_like(const EncoderParams& p);
    void zero();
};

/// dY has d_ctx rows; only its first acts.n_real columns are read.
void encode_backward(const EncoderParams& params, const EncoderActivations& acts, const Matrix& dY,
                     EncoderGrads& grads);

/// Column n of the result is concat(level_embedding[:, token_n], ctx[:, n]).
Matrix level_input(const EncoderOutput& ctx, const TokenSequence& seq, const Matrix& level_embed);

/// Splits dX (D x N) into the level-embedding rows (scatter-added into
/// d_embed by token id) and the contextual rows (written to d_ctx_out).
void level_input_backward(const Matrix& dX, const TokenSequence& seq, int n_real, int d_emb,
                          Matrix& d_embed, Matrix& d_ctx_out);

/// (d_emb + d_ctx) * M + d_emb * V, the per-level count excluding bias.
long memory_layer_param_count(int d_emb, int d_ctx, int filters, int vocab_size);
long total_memory_param_count(int d_emb, int d_ctx, int filters, int vocab_size);

}  // namespace memmatch
