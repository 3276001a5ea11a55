#include "memmatch/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "memmatch/evaluator.hpp"

namespace memmatch {

void TrainConfig::validate() const {
    if (epochs_max < 1) throw std::invalid_argument("train config: epochs_max must be >= 1");
    if (k1_schedule.empty()) throw std::invalid_argument("train config: empty k1 schedule");
    for (size_t i = 1; i < k1_schedule.size(); ++i)
        if (k1_schedule[i] < k1_schedule[i - 1])
            throw std::invalid_argument("train config: k1 schedule must be non-decreasing");
    if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
    if (batch_claims < 1) throw std::invalid_argument("train config: batch_claims must be >= 1");
    if (z < 1) throw std::invalid_argument("train config: z must be >= 1");
}

BceResult bce_loss(const std::vector<double>& delta, int target) {
    if (target != 0 && target != 1) throw std::invalid_argument("bce_loss: target must be 0 or 1");
    BceResult res;
    res.grad.resize(delta.size());
    const double m = static_cast<double>(delta.size());
    for (size_t i = 0; i < delta.size(); ++i) {
        const double d = delta[i];
        if (!std::isfinite(d)) throw std::invalid_argument("bce_loss: non-finite delta");
        // -log sigmoid(d) = log1p(exp(-d)) for d >= 0; delta is always >= 0.
        const double log_sig = -std::log1p(std::exp(-d));
        const double log_one_minus = -d + log_sig;  // log(1 - sigmoid(d))
        res.loss += target == 1 ? -log_sig : -log_one_minus;
        res.grad[i] = (sigmoid(d) - static_cast<double>(target)) / m;
    }
    res.loss /= m;
    return res;
}

namespace {

bool in_any_gold_set(const ClaimRecord& claim, const EvidencePointer& ptr) {
    for (const auto& set : claim.gold_evidence_sets)
        for (const auto& p : set)
            if (p == ptr) return true;
    return false;
}

std::vector<EvidenceText> resolve_texts(const std::vector<EvidencePointer>& ptrs, const WikiStore& wiki) {
    std::vector<EvidenceText> out;
    for (const auto& p : ptrs) {
        const std::string* text = wiki.find(p);
        if (text == nullptr) throw std::runtime_error("unresolved evidence pointer: " + p.page_title);
        out.push_back(EvidenceText{p, *text});
    }
    return out;
}

void push_level3_triple(std::vector<TrainingInstance>& out, const ClaimRecord& claim,
                        const FormattedSequence& query, const std::vector<EvidenceText>& evidence,
                        Label correct, int max_tokens) {
    TrainingInstance pos;
    pos.query = query;
    pos.support = format_support(3, claim, evidence, correct, max_tokens);
    pos.level = 3;
    pos.target = 0;
    out.push_back(std::move(pos));
    for (int l = 0; l < 3; ++l) {
        if (label_from_index(l) == correct) continue;
        TrainingInstance neg;
        neg.query = query;
        neg.support = format_support(3, claim, evidence, label_from_index(l), max_tokens);
        neg.level = 3;
        neg.target = 1;
        out.push_back(std::move(neg));
    }
}

}  // namespace

std::vector<TrainingInstance> build_instances(const ClaimRecord& claim, const SearchTrace& trace,
                                              const WikiStore& wiki, const ModelConfig& mcfg) {
    if (trace.claim_id != claim.id) throw std::invalid_argument("build_instances: trace/claim mismatch");
    std::vector<TrainingInstance> out;

    // Evidence marginalized at level 3, straight from the trace.
    std::vector<EvidenceText> searched = resolve_texts(trace.selected_evidence, wiki);

    if (!claim.verifiable()) {
        push_level3_triple(out, claim, format_query(claim, 3, SeqMode::Search), searched,
                           Label::Unverifiable, mcfg.max_len[2]);
        return out;
    }

    auto selected = select_training_evidence(claim, wiki);

    // Level 1: one positive per selected gold sentence, one hard negative.
    const FormattedSequence q1 = format_query(claim, 1);
    for (const auto& ptr : selected) {
        TrainingInstance pos;
        pos.query = q1;
        pos.support = format_support(1, claim, resolve_texts({ptr}, wiki), std::nullopt, mcfg.max_len[0]);
        pos.level = 1;
        pos.target = 0;
        out.push_back(std::move(pos));
    }
    for (const auto& entry : trace.level1) {
        const auto& ptr = wiki.pointer_of(entry.support_id);
        if (in_any_gold_set(claim, ptr)) continue;
        TrainingInstance neg;
        neg.query = q1;
        neg.support = format_support(1, claim, resolve_texts({ptr}, wiki), std::nullopt, mcfg.max_len[0]);
        neg.level = 1;
        neg.target = 1;
        out.push_back(std::move(neg));
        break;  // nearest incorrect match only
    }

    // Level 2: positive from the leading gold sentence (earliest in its
    // article), one hard negative from the cross-encoded beam.
    EvidencePointer leading = selected[0];
    for (const auto& ptr : selected)
        if (ptr.sentence_index < leading.sentence_index ||
            (ptr.sentence_index == leading.sentence_index && ptr.page_title < leading.page_title))
            leading = ptr;
    const FormattedSequence q2 = format_query(claim, 2);
    {
        TrainingInstance pos;
        pos.query = q2;
        pos.support =
            format_support(2, claim, resolve_texts({leading}, wiki), std::nullopt, mcfg.max_len[1]);
        pos.level = 2;
        pos.target = 0;
        out.push_back(std::move(pos));
    }
    for (const auto& entry : trace.level2) {
        if (in_any_gold_set(claim, entry.ptr)) continue;
        TrainingInstance neg;
        neg.query = q2;
        neg.support =
            format_support(2, claim, resolve_texts({entry.ptr}, wiki), std::nullopt, mcfg.max_len[1]);
        neg.level = 2;
        neg.target = 1;
        out.push_back(std::move(neg));
        break;
    }

    // Level 3 prediction: correct label over the searched evidence.
    push_level3_triple(out, claim, format_query(claim, 3, SeqMode::Search), searched, claim.label,
                       mcfg.max_len[2]);

    // Level 3 reference: correct label over the gold evidence, reference query.
    std::vector<EvidencePointer> ref = selected;
    std::sort(ref.begin(), ref.end(), [](const EvidencePointer& a, const EvidencePointer& b) {
        if (a.sentence_index != b.sentence_index) return a.sentence_index < b.sentence_index;
        return a.page_title < b.page_title;
    });
    push_level3_triple(out, claim, format_query(claim, 3, SeqMode::Reference),
                       resolve_texts(ref, wiki), claim.label, mcfg.max_len[2]);
    return out;
}

double train_step(Model& model, const Vocabulary& vocab, const std::vector<TrainingInstance>& batch,
                  ModelGrads& grads, double lr_encoder, double lr_memory, bool encoder_frozen,
                  bool memory_frozen) {
    if (batch.empty()) return 0.0;
    grads.zero();
    double total_loss = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& inst : batch) {
        const bool capture = !encoder_frozen;
        SequenceForward fq = model.forward(inst.level, inst.query.text, vocab, capture, true);
        SequenceForward fs = model.forward(inst.level, inst.support.text, vocab, capture, true);
        const auto delta = difference(fq.pooled, fs.pooled);
        const BceResult bce = bce_loss(delta.delta, inst.target);
        total_loss += bce.loss;

        std::vector<double> dgq(delta.delta.size()), dgs(delta.delta.size());
        for (size_t m = 0; m < delta.delta.size(); ++m) {
            const double diff = fq.pooled.g[m] - fs.pooled.g[m];
            const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            const double d = bce.grad[m] * inv_batch;
            dgq[m] = d * sign;
            dgs[m] = -d * sign;
        }
        model.backward(fq, dgq, grads, encoder_frozen, memory_frozen);
        model.backward(fs, dgs, grads, encoder_frozen, memory_frozen);
    }
    model.sgd_step(grads, lr_encoder, lr_memory, encoder_frozen, memory_frozen);
    return total_loss * inv_batch;
}

namespace {

double dev_accuracy_of(const std::vector<SearchTrace>& traces,
                       const std::vector<ClaimRecord>& claims) {
    if (claims.empty()) return 0.0;
    long correct = 0;
    for (size_t i = 0; i < claims.size(); ++i)
        if (traces[i].selected_label == claims[i].label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(claims.size());
}

}  // namespace

TrainResult train(const std::vector<ClaimRecord>& train_claims,
                  const std::vector<ClaimRecord>& dev_claims, const WikiStore& wiki, Model model,
                  const Vocabulary& vocab, const TrainConfig& tcfg, const SearchConfig& scfg,
                  const EpochCallback& on_epoch) {
    tcfg.validate();
    if (train_claims.empty()) throw std::invalid_argument("train: empty training set");

    TrainResult result;
    result.best_model = model;
    result.best_accuracy = -1.0;

    Rng shuffle_rng = Rng(tcfg.seed).fork(0x7ac3);
    ModelGrads grads;
    grads.init_like(model);

    int global_epoch = 0;
    int encoder_unfrozen_epochs = 0;
    bool encoder_permanently_frozen = false;

    for (size_t phase = 0; phase < tcfg.k1_schedule.size(); ++phase) {
        // Later phases restart from the best checkpoint so far.
        if (phase > 0) model = result.best_model;
        SearchConfig phase_cfg = scfg;
        phase_cfg.k1 = tcfg.k1_schedule[phase];
        phase_cfg.z = std::min(tcfg.z, phase_cfg.k1);

        int epochs_since_best = 0;
        for (int e = 0; e < tcfg.epochs_max; ++e) {
            ++global_epoch;
            // The encoder rests on odd epochs (starting with epoch 1) and
            // permanently once it has trained freeze_encoder_after times.
            bool encoder_frozen = (global_epoch % 2 == 1) || encoder_permanently_frozen;
            const bool memory_frozen = !encoder_frozen;
            if (!encoder_frozen) {
                ++encoder_unfrozen_epochs;
                if (encoder_unfrozen_epochs >= tcfg.freeze_encoder_after)
                    encoder_permanently_frozen = true;
            }

            // Search with the parameters as of epoch start.
            const auto traces = search_split(train_claims, wiki, model, vocab, phase_cfg);

            std::vector<size_t> order(train_claims.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            shuffle_inplace(order, shuffle_rng);

            double loss_sum = 0.0;
            long batch_count = 0;
            std::vector<TrainingInstance> batch;
            for (size_t b = 0; b < order.size(); b += static_cast<size_t>(tcfg.batch_claims)) {
                batch.clear();
                const size_t hi = std::min(order.size(), b + static_cast<size_t>(tcfg.batch_claims));
                for (size_t i = b; i < hi; ++i) {
                    auto instances = build_instances(train_claims[order[i]], traces[order[i]], wiki,
                                                     model.cfg);
                    for (auto& inst : instances) batch.push_back(std::move(inst));
                }
                loss_sum += train_step(model, vocab, batch, grads, tcfg.lr_encoder, tcfg.lr_memory,
                                       encoder_frozen, memory_frozen);
                ++batch_count;
            }
            const double train_loss = batch_count == 0 ? 0.0 : loss_sum / static_cast<double>(batch_count);
            if (!std::isfinite(train_loss)) {
                result.diverged = true;
                return result;  // keep the last finite checkpoint
            }

            const auto dev_traces = search_split(dev_claims, wiki, model, vocab, phase_cfg);
            EpochMetrics m;
            m.epoch = global_epoch;
            m.phase = static_cast<int>(phase + 1);
            m.k1 = phase_cfg.k1;
            m.train_loss = train_loss;
            m.dev_accuracy = dev_accuracy_of(dev_traces, dev_claims);
            m.dev_fever = dev_fever_of(dev_traces, dev_claims);
            m.encoder_frozen = encoder_frozen;

            if (m.dev_accuracy > result.best_accuracy) {
                result.best_accuracy = m.dev_accuracy;
                result.best_epoch = global_epoch;
                result.best_model = model;
                epochs_since_best = 0;
                m.is_best = true;
            } else {
                ++epochs_since_best;
            }
            result.history.push_back(m);
            if (on_epoch) on_epoch(m);
            if (epochs_since_best >= tcfg.patience) break;
        }
    }
    return result;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history) {
    std::ostringstream out;
    out << "epoch,phase,k1,train_loss,dev_accuracy,dev_fever\n";
    for (const auto& m : history) {
        out << m.epoch << ',' << m.phase << ',' << m.k1 << ',';
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", m.train_loss, m.dev_accuracy, m.dev_fever);
        out << buf;
    }
    return out.str();
}

}  // namespace memmatch
