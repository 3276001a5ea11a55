// Test-only oracles, independent of the implementation paths they check:
// a brute-force coarse-to-fine search (no stores, no chunking, full sorts)
// and a central-finite-difference gradient checker over every trainable
// parameter of the model.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "memmatch/model.hpp"
#include "memmatch/searcher.hpp"
#include "memmatch/trainer.hpp"

namespace memmatch::testing {

inline double rel_error(double a, double b) {
    const double diff = std::fabs(a - b);
    if (diff <= 1e-9) return 0.0;  // exact-or-noise floor for structural zeros
    return diff / std::max(std::fabs(a), std::fabs(b));
}

// ---- brute-force search oracle ---------------------------------------------

inline SearchTrace brute_force_search(const ClaimRecord& claim, const WikiStore& wiki,
                                      const std::vector<int64_t>& candidate_ids, const Model& model,
                                      const Vocabulary& vocab, const SearchConfig& cfg) {
    SearchTrace trace;
    trace.claim_id = claim.id;
    trace.null_retrieval = candidate_ids.empty();

    struct Entry {
        int64_t id;
        double dist;
        std::vector<float> g;
        std::string text;
    };
    auto by_dist_then_id = [](const Entry& a, const Entry& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.id < b.id;
    };

    // Level 1: encode everything, sort everywhere.
    const auto q1 = model.memory_f32(1, format_query(claim, 1).text, vocab);
    std::vector<Entry> level1;
    for (int64_t id : candidate_ids) {
        ClaimRecord dummy;
        Entry e;
        e.id = id;
        FormattedSequence support =
            format_support(1, dummy, {EvidenceText{wiki.pointer_of(id), wiki.text_of(id)}},
                           std::nullopt, model.cfg.max_len[0]);
        e.g = model.memory_f32(1, support.text, vocab);
        e.dist = euclidean_f32(q1.data(), e.g.data(), model.cfg.filters);
        level1.push_back(std::move(e));
    }
    std::sort(level1.begin(), level1.end(), by_dist_then_id);
    if (static_cast<int>(level1.size()) > cfg.k1) level1.resize(static_cast<size_t>(cfg.k1));
    for (size_t i = 0; i < level1.size(); ++i)
        trace.level1.push_back(BeamEntry{level1[i].id, level1[i].dist, static_cast<int>(i)});

    // Level 2.
    const auto q2 = model.memory_f32(2, format_query(claim, 2).text, vocab);
    std::vector<Entry> level2;
    for (const auto& e1 : level1) {
        Entry e;
        e.id = e1.id;
        FormattedSequence support =
            format_support(2, claim, {EvidenceText{wiki.pointer_of(e1.id), wiki.text_of(e1.id)}},
                           std::nullopt, model.cfg.max_len[1]);
        e.g = model.memory_f32(2, support.text, vocab);
        e.dist = euclidean_f32(q2.data(), e.g.data(), model.cfg.filters);
        e.text = support.text;
        level2.push_back(std::move(e));
    }
    std::sort(level2.begin(), level2.end(), by_dist_then_id);
    for (size_t i = 0; i < level2.size(); ++i) {
        Level2Entry le;
        le.beam = BeamEntry{level2[i].id, level2[i].dist, static_cast<int>(i)};
        le.ptr = wiki.pointer_of(level2[i].id);
        le.support_text = level2[i].text;
        trace.level2.push_back(std::move(le));
    }
    if (!level2.empty()) {
        trace.has_level2 = true;
        trace.level2_top_distance = level2[0].dist;
        trace.delta_level2.resize(static_cast<size_t>(model.cfg.filters));
        for (int m = 0; m < model.cfg.filters; ++m)
            trace.delta_level2[static_cast<size_t>(m)] =
                std::fabs(q2[static_cast<size_t>(m)] - level2[0].g[static_cast<size_t>(m)]);
    }

    // Level 3.
    std::vector<EvidenceText> evidence;
    for (size_t i = 0; i < level2.size() && static_cast<int>(i) < cfg.z; ++i) {
        const auto ptr = wiki.pointer_of(level2[i].id);
        bool dup = false;
        for (const auto& ev : evidence) dup = dup || ev.ptr == ptr;
        if (!dup) evidence.push_back(EvidenceText{ptr, wiki.text_of(level2[i].id)});
    }
    for (const auto& ev : evidence)
        if (trace.selected_evidence.size() < 5) trace.selected_evidence.push_back(ev.ptr);

    const auto q3 = model.memory_f32(3, format_query(claim, 3, SeqMode::Search).text, vocab);
    std::array<double, 3> dist3;
    std::array<std::vector<float>, 3> g3;
    for (int l = 0; l < 3; ++l) {
        FormattedSequence support =
            format_support(3, claim, evidence, label_from_index(l), model.cfg.max_len[2]);
        g3[static_cast<size_t>(l)] = model.memory_f32(3, support.text, vocab);
        dist3[static_cast<size_t>(l)] =
            euclidean_f32(q3.data(), g3[static_cast<size_t>(l)].data(), model.cfg.filters);
        trace.level3[static_cast<size_t>(l)] =
            Level3Entry{label_from_index(l), dist3[static_cast<size_t>(l)], support.text};
    }
    int best = 0;
    for (int l = 1; l < 3; ++l)
        if (dist3[static_cast<size_t>(l)] < dist3[static_cast<size_t>(best)]) best = l;
    trace.selected_label = label_from_index(best);
    trace.level3_selected_distance = dist3[static_cast<size_t>(best)];
    trace.delta_level3.resize(static_cast<size_t>(model.cfg.filters));
    for (int m = 0; m < model.cfg.filters; ++m)
        trace.delta_level3[static_cast<size_t>(m)] = std::fabs(
            q3[static_cast<size_t>(m)] - g3[static_cast<size_t>(best)][static_cast<size_t>(m)]);
    return trace;
}

inline bool traces_equal(const SearchTrace& a, const SearchTrace& b) {
    if (a.claim_id != b.claim_id || a.null_retrieval != b.null_retrieval) return false;
    if (a.level1.size() != b.level1.size() || a.level2.size() != b.level2.size()) return false;
    for (size_t i = 0; i < a.level1.size(); ++i)
        if (a.level1[i].support_id != b.level1[i].support_id || a.level1[i].distance != b.level1[i].distance)
            return false;
    for (size_t i = 0; i < a.level2.size(); ++i)
        if (a.level2[i].beam.support_id != b.level2[i].beam.support_id ||
            a.level2[i].beam.distance != b.level2[i].beam.distance ||
            !(a.level2[i].ptr == b.level2[i].ptr) || a.level2[i].support_text != b.level2[i].support_text)
            return false;
    for (int l = 0; l < 3; ++l) {
        if (a.level3[static_cast<size_t>(l)].distance != b.level3[static_cast<size_t>(l)].distance)
            return false;
        if (a.level3[static_cast<size_t>(l)].support_text != b.level3[static_cast<size_t>(l)].support_text)
            return false;
    }
    if (a.selected_label != b.selected_label) return false;
    if (!(a.selected_evidence == b.selected_evidence)) return false;
    if (a.has_level2 != b.has_level2) return false;
    if (a.has_level2 && a.level2_top_distance != b.level2_top_distance) return false;
    if (a.level3_selected_distance != b.level3_selected_distance) return false;
    if (a.delta_level2 != b.delta_level2) return false;
    if (a.delta_level3 != b.delta_level3) return false;
    return true;
}

// ---- finite-difference gradient checking ------------------------------------

/// Mutable views over every trainable scalar, grouped so per-level checks
/// can restrict to the parameters an instance can reach.
struct ParamSlots {
    std::vector<double*> encoder;
    std::array<std::vector<double*>, 3> level;
};

inline ParamSlots collect_params(Model& model) {
    ParamSlots slots;
    auto add = [](std::vector<double*>& out, Matrix& m) {
        for (auto& v : m.a) out.push_back(&v);
    };
    add(slots.encoder, model.enc.tok_embed);
    add(slots.encoder, model.enc.pos_embed);
    for (auto& blk : model.enc.blocks) {
        add(slots.encoder, blk.wq);
        add(slots.encoder, blk.wk);
        add(slots.encoder, blk.wv);
        add(slots.encoder, blk.wo);
    }
    add(slots.encoder, model.enc.out_w);
    for (auto& v : model.enc.out_b) slots.encoder.push_back(&v);
    for (int l = 0; l < 3; ++l) {
        auto& lvl = model.level[static_cast<size_t>(l)];
        add(slots.level[static_cast<size_t>(l)], lvl.embed);
        add(slots.level[static_cast<size_t>(l)], lvl.conv_w);
        for (auto& v : lvl.conv_b) slots.level[static_cast<size_t>(l)].push_back(&v);
    }
    return slots;
}

/// Analytic gradients flattened in the same order as collect_params.
inline ParamSlots collect_grads(ModelGrads& grads) {
    ParamSlots slots;
    auto add = [](std::vector<double*>& out, Matrix& m) {
        for (auto& v : m.a) out.push_back(&v);
    };
    add(slots.encoder, grads.enc.tok_embed);
    add(slots.encoder, grads.enc.pos_embed);
    for (auto& blk : grads.enc.blocks) {
        add(slots.encoder, blk.wq);
        add(slots.encoder, blk.wk);
        add(slots.encoder, blk.wv);
        add(slots.encoder, blk.wo);
    }
    add(slots.encoder, grads.enc.out_w);
    for (auto& v : grads.enc.out_b) slots.encoder.push_back(&v);
    for (int l = 0; l < 3; ++l) {
        auto& lvl = grads.level[static_cast<size_t>(l)];
        add(slots.level[static_cast<size_t>(l)], lvl.embed);
        add(slots.level[static_cast<size_t>(l)], lvl.conv_w);
        for (auto& v : lvl.conv_b) slots.level[static_cast<size_t>(l)].push_back(&v);
    }
    return slots;
}

struct GradCheckStats {
    double max_rel_error = 0.0;
    long compared = 0;
    long instances = 0;
    long resampled = 0;
};

/// Margin between the winning and runner-up pooled positions, and between
/// the two memory vectors, large enough that a +-step perturbation cannot
/// cross a max-pool tie or an |a-b| kink.
inline bool instance_is_tie_free(const Model& model, const Vocabulary& vocab, int level,
                                 const std::string& q_text, const std::string& s_text, double margin) {
    for (const std::string* text : {&q_text, &s_text}) {
        auto fwd = model.forward(level, *text, vocab, false, true);
        for (int m = 0; m < fwd.maps.filters(); ++m) {
            double best = -1e300, second = -1e300;
            for (int j = 0; j < fwd.maps.n_real; ++j) {
                const double v = fwd.maps.h.at(m, j);
                if (v > best) {
                    second = best;
                    best = v;
                } else if (v > second) {
                    second = v;
                }
            }
            if (fwd.maps.n_real > 1 && best - second < margin) return false;
        }
    }
    auto fq = model.forward(level, q_text, vocab);
    auto fs = model.forward(level, s_text, vocab);
    for (size_t m = 0; m < fq.pooled.g.size(); ++m)
        if (std::fabs(fq.pooled.g[m] - fs.pooled.g[m]) < margin) return false;
    return true;
}

inline double instance_loss(const Model& model, const Vocabulary& vocab, int level,
                            const std::string& q_text, const std::string& s_text, int target) {
    auto fq = model.forward(level, q_text, vocab);
    auto fs = model.forward(level, s_text, vocab);
    return bce_loss(difference(fq.pooled, fs.pooled).delta, target).loss;
}

/// Checks d loss / d theta for one instance against central differences
/// over the encoder group, the instance's level group, and a spot sample
/// of the unreachable level groups (whose analytic gradient must be zero).
inline void gradcheck_instance(Model& model, const Vocabulary& vocab, int level,
                               const std::string& q_text, const std::string& s_text, int target,
                               double step, GradCheckStats& stats, Rng& rng) {
    ModelGrads grads;
    grads.init_like(model);
    grads.zero();
    {
        auto fq = model.forward(level, q_text, vocab, true, true);
        auto fs = model.forward(level, s_text, vocab, true, true);
        const auto delta = difference(fq.pooled, fs.pooled);
        const auto bce = bce_loss(delta.delta, target);
        std::vector<double> dgq(delta.delta.size()), dgs(delta.delta.size());
        for (size_t m = 0; m < delta.delta.size(); ++m) {
            const double diff = fq.pooled.g[m] - fs.pooled.g[m];
            const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            dgq[m] = bce.grad[m] * sign;
            dgs[m] = -bce.grad[m] * sign;
        }
        model.backward(fq, dgq, grads);
        model.backward(fs, dgs, grads);
    }

    ParamSlots params = collect_params(model);
    ParamSlots gslots = collect_grads(grads);

    auto check_group = [&](std::vector<double*>& p, std::vector<double*>& g) {
        for (size_t i = 0; i < p.size(); ++i) {
            const double saved = *p[i];
            *p[i] = saved + step;
            const double up = instance_loss(model, vocab, level, q_text, s_text, target);
            *p[i] = saved - step;
            const double down = instance_loss(model, vocab, level, q_text, s_text, target);
            *p[i] = saved;
            const double fd = (up - down) / (2 * step);
            stats.max_rel_error = std::max(stats.max_rel_error, rel_error(*g[i], fd));
            ++stats.compared;
        }
    };
    check_group(params.encoder, gslots.encoder);
    check_group(params.level[static_cast<size_t>(level - 1)], gslots.level[static_cast<size_t>(level - 1)]);

    // Unreachable levels: analytic gradient is structurally zero; spot-check
    // a few with finite differences as well.
    for (int l = 0; l < 3; ++l) {
        if (l == level - 1) continue;
        auto& g = gslots.level[static_cast<size_t>(l)];
        for (double* v : g)
            if (*v != 0.0) stats.max_rel_error = std::max(stats.max_rel_error, 1.0);
        auto& p = params.level[static_cast<size_t>(l)];
        for (int probe = 0; probe < 5 && !p.empty(); ++probe) {
            double* slot = p[rng.next_below(p.size())];
            const double saved = *slot;
            *slot = saved + step;
            const double up = instance_loss(model, vocab, level, q_text, s_text, target);
            *slot = saved - step;
            const double down = instance_loss(model, vocab, level, q_text, s_text, target);
            *slot = saved;
            stats.max_rel_error = std::max(stats.max_rel_error, rel_error(0.0, (up - down) / (2 * step)));
            ++stats.compared;
        }
    }
    ++stats.instances;
}

inline std::string random_words(Rng& rng, const std::vector<std::string>& pool, int count) {
    std::string out;
    for (int i = 0; i < count; ++i) {
        if (i) out += " ";
        out += pool[rng.next_below(pool.size())];
    }
    return out;
}

}  // namespace memmatch::testing
