#include "memmatch/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace memmatch {

size_t EncoderParams::param_count() const {
    size_t n = tok_embed.size() + pos_embed.size() + out_w.size() + out_b.size();
    for (const auto& b : blocks) n += b.wq.size() + b.wk.size() + b.wv.size() + b.wo.size();
    return n;
}

namespace {

Matrix init_linear(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    fill_uniform(m, rng, -bound, bound);
    return m;
}

}  // namespace

EncoderParams init_encoder(int d_ctx, int vocab_size, int max_positions, int n_blocks, Rng& rng) {
    if (d_ctx < 1 || vocab_size < 2 || max_positions < 1 || n_blocks < 1)
        throw std::invalid_argument("bad encoder dimensions");
    EncoderParams p;
    p.tok_embed = Matrix(d_ctx, vocab_size);
    fill_uniform(p.tok_embed, rng, -0.05, 0.05);
    p.pos_embed = Matrix(d_ctx, max_positions);
    fill_uniform(p.pos_embed, rng, -0.05, 0.05);
    for (int b = 0; b < n_blocks; ++b) {
        AttentionBlock blk;
        blk.wq = init_linear(d_ctx, d_ctx, rng);
        blk.wk = init_linear(d_ctx, d_ctx, rng);
        blk.wv = init_linear(d_ctx, d_ctx, rng);
        blk.wo = init_linear(d_ctx, d_ctx, rng);
        p.blocks.push_back(std::move(blk));
    }
    p.out_w = init_linear(d_ctx, d_ctx, rng);
    p.out_b.assign(static_cast<size_t>(d_ctx), 0.0);
    return p;
}

EncoderOutput encode(const EncoderParams& params, const TokenSequence& seq, EncoderActivations* acts) {
    const int d = params.d_ctx();
    const int n = seq.n_real;
    if (seq.length() > params.max_positions())
        throw std::invalid_argument("sequence longer than the positional table");
    for (int i = 0; i < n; ++i)
        if (seq.ids[static_cast<size_t>(i)] < 0 || seq.ids[static_cast<size_t>(i)] >= params.vocab_size())
            throw std::out_of_range("token id outside the vocabulary");

    EncoderOutput out;
    out.states = Matrix(d, seq.length());
    out.n_real = n;
    if (acts) {
        acts->ids.assign(seq.ids.begin(), seq.ids.begin() + n);
        acts->n_real = n;
        acts->blocks.clear();
    }
    if (n == 0) return out;  // all-padding: every column stays the pad state

    Matrix x(d, n);
    for (int j = 0; j < n; ++j) {
        const int id = seq.ids[static_cast<size_t>(j)];
        for (int r = 0; r < d; ++r) x.at(r, j) = params.tok_embed.at(r, id) + params.pos_embed.at(r, j);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (const auto& blk : params.blocks) {
        EncoderActivations::BlockActs ba;
        ba.x = x;
        matmul(blk.wq, x, ba.q);
        matmul(blk.wk, x, ba.k);
        matmul(blk.wv, x, ba.v);

        // attn[i][j]: weight of key i for query j, softmax over keys.
        ba.attn = Matrix(n, n);
        for (int j = 0; j < n; ++j) {
            double maxs = -1e300;
            std::vector<double> scores(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int r = 0; r < d; ++r) s += ba.k.at(r, i) * ba.q.at(r, j);
                s *= scale;
                scores[static_cast<size_t>(i)] = s;
                maxs = std::max(maxs, s);
            }
            double z = 0.0;
            for (int i = 0; i < n; ++i) {
                double e = std::exp(scores[static_cast<size_t>(i)] - maxs);
                ba.attn.at(i, j) = e;
                z += e;
            }
            for (int i = 0; i < n; ++i) ba.attn.at(i, j) /= z;
        }

        matmul(ba.v, ba.attn, ba.ctxv);
        Matrix proj;
        matmul(blk.wo, ba.ctxv, proj);
        for (size_t t = 0; t < x.a.size(); ++t) x.a[t] += proj.a[t];  // residual
        if (acts) acts->blocks.push_back(std::move(ba));
    }

    if (acts) acts->top = x;
    Matrix y;
    matmul(params.out_w, x, y);
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < d; ++r) out.states.at(r, j) = y.at(r, j) + params.out_b[static_cast<size_t>(r)];
    return out;
}

void EncoderGrads::init_like(const EncoderParams& p) {
    tok_embed = Matrix(p.tok_embed.rows, p.tok_embed.cols);
    pos_embed = Matrix(p.pos_embed.rows, p.pos_embed.cols);
    blocks.clear();
    for (const auto& b : p.blocks) {
        AttentionBlock g;
        g.wq = Matrix(b.wq.rows, b.wq.cols);
        g.wk = Matrix(b.wk.rows, b.wk.cols);
        g.wv = Matrix(b.wv.rows, b.wv.cols);
        g.wo = Matrix(b.wo.rows, b.wo.cols);
        blocks.push_back(std::move(g));
    }
    out_w = Matrix(p.out_w.rows, p.out_w.cols);
    out_b.assign(p.out_b.size(), 0.0);
}

void EncoderGrads::zero() {
    tok_embed.zero();
    pos_embed.zero();
    for (auto& b : blocks) {
        b.wq.zero();
        b.wk.zero();
        b.wv.zero();
        b.wo.zero();
    }
    out_w.zero();
    std::fill(out_b.begin(), out_b.end(), 0.0);
}

void encode_backward(const EncoderParams& params, const EncoderActivations& acts, const Matrix& dY,
                     EncoderGrads& grads) {
    const int d = params.d_ctx();
    const int n = acts.n_real;
    if (n == 0) return;

    // Final linear map.
    Matrix dy(d, n);
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < d; ++r) dy.at(r, j) = dY.at(r, j);
    matmul_nt_acc(dy, acts.top, grads.out_w);
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < d; ++r) grads.out_b[static_cast<size_t>(r)] += dy.at(r, j);
    Matrix dx(d, n);
    matmul_tn_acc(params.out_w, dy, dx);

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int b = static_cast<int>(params.blocks.size()) - 1; b >= 0; --b) {
        const auto& blk = params.blocks[static_cast<size_t>(b)];
        const auto& ba = acts.blocks[static_cast<size_t>(b)];
        auto& g = grads.blocks[static_cast<size_t>(b)];

        // x_out = x + wo * ctxv
        Matrix dproj = dx;  // gradient of the wo branch; residual handled below
        matmul_nt_acc(dproj, ba.ctxv, g.wo);
        Matrix dctxv(d, n);
        matmul_tn_acc(blk.wo, dproj, dctxv);

        // ctxv = v * attn
        Matrix dv(d, n);
        matmul_nt_acc(dctxv, ba.attn, dv);
        Matrix dattn(n, n);
        matmul_tn_acc(ba.v, dctxv, dattn);

        // Column-wise softmax backward.
        Matrix dscores(n, n);
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += ba.attn.at(i, j) * dattn.at(i, j);
            for (int i = 0; i < n; ++i)
                dscores.at(i, j) = ba.attn.at(i, j) * (dattn.at(i, j) - dot);
        }

        // scores[i][j] = scale * k_i . q_j
        Matrix dq(d, n), dk(d, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double ds = dscores.at(i, j) * scale;
                if (ds == 0.0) continue;
                for (int r = 0; r < d; ++r) {
                    dq.at(r, j) += ds * ba.k.at(r, i);
                    dk.at(r, i) += ds * ba.q.at(r, j);
                }
            }

        matmul_nt_acc(dq, ba.x, g.wq);
        matmul_nt_acc(dk, ba.x, g.wk);
        matmul_nt_acc(dv, ba.x, g.wv);

        Matrix dx_in(d, n);
        matmul_tn_acc(blk.wq, dq, dx_in);
        matmul_tn_acc(blk.wk, dk, dx_in);
        matmul_tn_acc(blk.wv, dv, dx_in);
        for (size_t t = 0; t < dx.a.size(); ++t) dx_in.a[t] += dx.a[t];  // residual path
        dx = std::move(dx_in);
    }

    for (int j = 0; j < n; ++j) {
        const int id = acts.ids[static_cast<size_t>(j)];
        for (int r = 0; r < d; ++r) {
            grads.tok_embed.at(r, id) += dx.at(r, j);
            grads.pos_embed.at(r, j) += dx.at(r, j);
        }
    }
}

Matrix level_input(const EncoderOutput& ctx, const TokenSequence& seq, const Matrix& level_embed) {
    const int d_emb = level_embed.rows;
    const int d_ctx = ctx.states.rows;
    const int n_cols = ctx.states.cols;
    if (n_cols != seq.length()) throw std::invalid_argument("level_input: ctx/seq length mismatch");
    Matrix x(d_emb + d_ctx, n_cols);
    for (int j = 0; j < n_cols; ++j) {
        const int id = seq.ids[static_cast<size_t>(j)];
        if (id < 0 || id >= level_embed.cols) throw std::out_of_range("token id outside embedding table");
        for (int r = 0; r < d_emb; ++r) x.at(r, j) = level_embed.at(r, id);
        for (int r = 0; r < d_ctx; ++r) x.at(d_emb + r, j) = ctx.states.at(r, j);
    }
    return x;
}

void level_input_backward(const Matrix& dX, const TokenSequence& seq, int n_real, int d_emb,
                          Matrix& d_embed, Matrix& d_ctx_out) {
    const int d_ctx = dX.rows - d_emb;
    d_ctx_out = Matrix(d_ctx, n_real);
    for (int j = 0; j < n_real; ++j) {
        const int id = seq.ids[static_cast<size_t>(j)];
        for (int r = 0; r < d_emb; ++r) d_embed.at(r, id) += dX.at(r, j);
        for (int r = 0; r < d_ctx; ++r) d_ctx_out.at(r, j) = dX.at(d_emb + r, j);
    }
}

long memory_layer_param_count(int d_emb, int d_ctx, int filters, int vocab_size) {
    return static_cast<long>(d_emb + d_ctx) * filters + static_cast<long>(d_emb) * vocab_size;
}

long total_memory_param_count(int d_emb, int d_ctx, int filters, int vocab_size) {
    return 3 * memory_layer_param_count(d_emb, d_ctx, filters, vocab_size);
}

}  // namespace memmatch
