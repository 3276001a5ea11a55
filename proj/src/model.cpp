#include "memmatch/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "memmatch/io.hpp"

namespace memmatch {

Model& Model::operator=(const Model& o) {
    cfg = o.cfg;
    enc = o.enc;
    level = o.level;
    encode_calls.store(o.encode_calls.load());
    return *this;
}

Model Model::init(const ModelConfig& cfg) {
    Model model;
    model.cfg = cfg;
    Rng rng(cfg.seed);
    Rng enc_rng = rng.fork(1);
    model.enc = init_encoder(cfg.d_ctx, cfg.vocab_size, cfg.max_positions(), cfg.blocks, enc_rng);
    for (int l = 0; l < 3; ++l) {
        Rng lvl_rng = rng.fork(static_cast<uint64_t>(10 + l));
        LevelParams& lp = model.level[static_cast<size_t>(l)];
        lp.embed = Matrix(cfg.d_emb, cfg.vocab_size);
        fill_uniform(lp.embed, lvl_rng, -0.05, 0.05);
        lp.conv_w = Matrix(cfg.filters, cfg.d_input());
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_input()));
        fill_uniform(lp.conv_w, lvl_rng, -bound, bound);
        lp.conv_b.assign(static_cast<size_t>(cfg.filters), 0.0);
    }
    return model;
}

SequenceForward Model::forward(int level, const std::string& text, const Vocabulary& vocab,
                               bool capture, bool keep_maps) const {
    if (level < 1 || level > 3) throw std::invalid_argument("model forward: level must be 1..3");
    encode_calls.fetch_add(1, std::memory_order_relaxed);
    SequenceForward fwd;
    fwd.level = level;
    fwd.seq = tokenize(text, vocab, cfg.max_len[static_cast<size_t>(level - 1)]);
    fwd.ctx = encode(enc, fwd.seq, capture ? &fwd.enc_acts : nullptr);
    const LevelParams& lp = this->level[static_cast<size_t>(level - 1)];
    Matrix x = level_input(fwd.ctx, fwd.seq, lp.embed);
    FeatureMaps maps = feature_maps(x, lp.conv_w, lp.conv_b, fwd.seq.n_real);
    fwd.pooled = memory_vector(maps);
    fwd.pooled.level = level;
    if (capture || keep_maps) fwd.level_in = std::move(x);
    if (keep_maps) fwd.maps = std::move(maps);
    if (!capture) fwd.ctx.states = Matrix();  // drop bulky states unless needed
    return fwd;
}

std::vector<float> Model::memory_f32(int level, const std::string& text, const Vocabulary& vocab) const {
    return to_f32(forward(level, text, vocab).pooled.g);
}

void Model::backward(const SequenceForward& fwd, const std::vector<double>& dg, ModelGrads& grads,
                     bool skip_encoder, bool skip_memory) const {
    const int l = fwd.level - 1;
    const LevelParams& lp = level[static_cast<size_t>(l)];
    LevelGrads& lg = grads.level[static_cast<size_t>(l)];

    Matrix dX;
    if (skip_memory) {
        // Gradients still flow through the (frozen) filters to the input.
        Matrix unusedW(lp.conv_w.rows, lp.conv_w.cols);
        std::vector<double> unusedB(lp.conv_b.size(), 0.0);
        dX = Matrix(fwd.level_in.rows, fwd.level_in.cols);
        memory_backward(dg, fwd.pooled, fwd.level_in, lp.conv_w, unusedW, unusedB, dX);
    } else {
        dX = Matrix(fwd.level_in.rows, fwd.level_in.cols);
        memory_backward(dg, fwd.pooled, fwd.level_in, lp.conv_w, lg.conv_w, lg.conv_b, dX);
    }

    Matrix d_ctx_states;
    if (skip_memory) {
        Matrix unusedEmb(lp.embed.rows, lp.embed.cols);
        level_input_backward(dX, fwd.seq, fwd.seq.n_real, cfg.d_emb, unusedEmb, d_ctx_states);
    } else {
        level_input_backward(dX, fwd.seq, fwd.seq.n_real, cfg.d_emb, lg.embed, d_ctx_states);
    }

    if (!skip_encoder) encode_backward(enc, fwd.enc_acts, d_ctx_states, grads.enc);
}

void ModelGrads::init_like(const Model& model) {
    enc.init_like(model.enc);
    for (int l = 0; l < 3; ++l) {
        const LevelParams& lp = model.level[static_cast<size_t>(l)];
        LevelGrads& lg = level[static_cast<size_t>(l)];
        lg.embed = Matrix(lp.embed.rows, lp.embed.cols);
        lg.conv_w = Matrix(lp.conv_w.rows, lp.conv_w.cols);
        lg.conv_b.assign(lp.conv_b.size(), 0.0);
    }
}

void ModelGrads::zero() {
    enc.zero();
    for (auto& lg : level) {
        lg.embed.zero();
        lg.conv_w.zero();
        std::fill(lg.conv_b.begin(), lg.conv_b.end(), 0.0);
    }
}

namespace {

void axpy(Matrix& p, const Matrix& g, double a) {
    for (size_t i = 0; i < p.a.size(); ++i) p.a[i] += a * g.a[i];
}

}  // namespace

void Model::sgd_step(const ModelGrads& grads, double lr_encoder, double lr_memory, bool encoder_frozen,
                     bool memory_frozen) {
    if (!encoder_frozen) {
        axpy(enc.tok_embed, grads.enc.tok_embed, -lr_encoder);
        axpy(enc.pos_embed, grads.enc.pos_embed, -lr_encoder);
        for (size_t b = 0; b < enc.blocks.size(); ++b) {
            axpy(enc.blocks[b].wq, grads.enc.blocks[b].wq, -lr_encoder);
            axpy(enc.blocks[b].wk, grads.enc.blocks[b].wk, -lr_encoder);
            axpy(enc.blocks[b].wv, grads.enc.blocks[b].wv, -lr_encoder);
            axpy(enc.blocks[b].wo, grads.enc.blocks[b].wo, -lr_encoder);
        }
        axpy(enc.out_w, grads.enc.out_w, -lr_encoder);
        for (size_t i = 0; i < enc.out_b.size(); ++i) enc.out_b[i] -= lr_encoder * grads.enc.out_b[i];
    }
    if (!memory_frozen) {
        for (int l = 0; l < 3; ++l) {
            LevelParams& lp = level[static_cast<size_t>(l)];
            const LevelGrads& lg = grads.level[static_cast<size_t>(l)];
            axpy(lp.embed, lg.embed, -lr_memory);
            axpy(lp.conv_w, lg.conv_w, -lr_memory);
            for (size_t i = 0; i < lp.conv_b.size(); ++i) lp.conv_b[i] -= lr_memory * lg.conv_b[i];
        }
    }
}

// ---- checkpoint format ----------------------------------------------------
// magic "MMCK", u32 version, u32 d_ctx, u32 d_emb, u32 vocab_size,
// u32 filters, u32 blocks, u32 max_len[3], u64 seed, then named tensors in
// fixed order, each as (u32 name_len, name, u32 rows, u32 cols, rows*cols
// little-endian f32 row-major).

namespace {

constexpr char kMagic[4] = {'M', 'M', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_tensor(std::string& out, const std::string& name, const Matrix& m) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(m.rows));
    put_u32(out, static_cast<uint32_t>(m.cols));
    for (double v : m.a) put_f32(out, static_cast<float>(v));
}

void put_vector(std::string& out, const std::string& name, const std::vector<double>& v) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, 1);
    put_u32(out, static_cast<uint32_t>(v.size()));
    for (double x : v) put_f32(out, static_cast<float>(x));
}

Matrix get_tensor(BinReader& r, const std::string& want_name) {
    const uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    if (name != want_name)
        throw std::runtime_error("checkpoint tensor order mismatch: expected " + want_name + ", found " + name);
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    Matrix m(rows, cols);
    for (auto& v : m.a) v = static_cast<double>(r.f32());
    return m;
}

std::vector<double> get_vector(BinReader& r, const std::string& want_name) {
    Matrix m = get_tensor(r, want_name);
    if (m.rows != 1) throw std::runtime_error("checkpoint vector has unexpected shape: " + want_name);
    return m.a;
}

}  // namespace

std::string Model::serialize() const {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(cfg.d_ctx));
    put_u32(out, static_cast<uint32_t>(cfg.d_emb));
    put_u32(out, static_cast<uint32_t>(cfg.vocab_size));
    put_u32(out, static_cast<uint32_t>(cfg.filters));
    put_u32(out, static_cast<uint32_t>(cfg.blocks));
    for (int l = 0; l < 3; ++l) put_u32(out, static_cast<uint32_t>(cfg.max_len[static_cast<size_t>(l)]));
    put_u64(out, cfg.seed);

    put_tensor(out, "encoder.tok_embed", enc.tok_embed);
    put_tensor(out, "encoder.pos_embed", enc.pos_embed);
    for (size_t b = 0; b < enc.blocks.size(); ++b) {
        const std::string prefix = "encoder.block" + std::to_string(b);
        put_tensor(out, prefix + ".wq", enc.blocks[b].wq);
        put_tensor(out, prefix + ".wk", enc.blocks[b].wk);
        put_tensor(out, prefix + ".wv", enc.blocks[b].wv);
        put_tensor(out, prefix + ".wo", enc.blocks[b].wo);
    }
    put_tensor(out, "encoder.out_w", enc.out_w);
    put_vector(out, "encoder.out_b", enc.out_b);
    for (int l = 0; l < 3; ++l) {
        const std::string prefix = "level" + std::to_string(l + 1);
        put_tensor(out, prefix + ".embed", level[static_cast<size_t>(l)].embed);
        put_tensor(out, prefix + ".conv_w", level[static_cast<size_t>(l)].conv_w);
        put_vector(out, prefix + ".conv_b", level[static_cast<size_t>(l)].conv_b);
    }
    return out;
}

Model Model::deserialize(const std::string& buf) {
    BinReader r(buf);
    if (r.bytes(4) != std::string(kMagic, 4)) throw std::runtime_error("not a checkpoint buffer");
    if (r.u32() != kVersion) throw std::runtime_error("checkpoint version mismatch");
    Model model;
    model.cfg.d_ctx = static_cast<int>(r.u32());
    model.cfg.d_emb = static_cast<int>(r.u32());
    model.cfg.vocab_size = static_cast<int>(r.u32());
    model.cfg.filters = static_cast<int>(r.u32());
    model.cfg.blocks = static_cast<int>(r.u32());
    for (int l = 0; l < 3; ++l) model.cfg.max_len[static_cast<size_t>(l)] = static_cast<int>(r.u32());
    model.cfg.seed = r.u64();

    model.enc.tok_embed = get_tensor(r, "encoder.tok_embed");
    model.enc.pos_embed = get_tensor(r, "encoder.pos_embed");
    for (int b = 0; b < model.cfg.blocks; ++b) {
        const std::string prefix = "encoder.block" + std::to_string(b);
        AttentionBlock blk;
        blk.wq = get_tensor(r, prefix + ".wq");
        blk.wk = get_tensor(r, prefix + ".wk");
        blk.wv = get_tensor(r, prefix + ".wv");
        blk.wo = get_tensor(r, prefix + ".wo");
        model.enc.blocks.push_back(std::move(blk));
    }
    model.enc.out_w = get_tensor(r, "encoder.out_w");
    model.enc.out_b = get_vector(r, "encoder.out_b");
    for (int l = 0; l < 3; ++l) {
        const std::string prefix = "level" + std::to_string(l + 1);
        model.level[static_cast<size_t>(l)].embed = get_tensor(r, prefix + ".embed");
        model.level[static_cast<size_t>(l)].conv_w = get_tensor(r, prefix + ".conv_w");
        model.level[static_cast<size_t>(l)].conv_b = get_vector(r, prefix + ".conv_b");
    }
    if (!r.at_end()) throw std::runtime_error("trailing bytes in checkpoint");
    return model;
}

void Model::save(const std::string& path) const { write_file_atomic(path, serialize()); }

Model Model::load(const std::string& path) { return deserialize(read_file(path)); }

uint64_t Model::checksum() const { return fnv1a64_str(serialize()); }

long Model::total_params() const {
    long n = static_cast<long>(enc.param_count());
    for (const auto& lp : level)
        n += static_cast<long>(lp.embed.size() + lp.conv_w.size() + lp.conv_b.size());
    return n;
}

}  // namespace memmatch
