#include "memmatch/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "memmatch/io.hpp"

namespace memmatch {

using nlohmann::json;

Prediction prediction_from_trace(const SearchTrace& trace) {
    Prediction p;
    p.claim_id = trace.claim_id;
    p.label = trace.selected_label;
    p.evidence = trace.selected_evidence;
    p.has_level2 = trace.has_level2;
    p.level2_distance = trace.level2_top_distance;
    p.level3_distance = trace.level3_selected_distance;
    if (trace.has_level2 && !trace.delta_level2.empty() && !trace.delta_level3.empty()) {
        p.exemplar_query = trace.delta_level2;
        p.exemplar_query.insert(p.exemplar_query.end(), trace.delta_level3.begin(),
                                trace.delta_level3.end());
    }
    return p;
}

std::vector<Prediction> predictions_from_traces(const std::vector<SearchTrace>& traces) {
    std::vector<Prediction> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back(prediction_from_trace(t));
    return out;
}

void map_to_two_class(std::vector<Prediction>& preds, const std::vector<SearchTrace>& traces) {
    if (preds.size() != traces.size()) throw std::invalid_argument("two-class map: size mismatch");
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].label != Label::Unverifiable) continue;
        const auto& l3 = traces[i].level3;
        const double ds = l3[static_cast<size_t>(label_index(Label::Supports))].distance;
        const double dr = l3[static_cast<size_t>(label_index(Label::Refutes))].distance;
        preds[i].label = ds <= dr ? Label::Supports : Label::Refutes;
        preds[i].level3_distance = std::min(ds, dr);
    }
}

namespace {

std::map<ClaimId, const Prediction*> align(const std::vector<Prediction>& preds,
                                           const std::vector<ClaimRecord>& gold) {
    std::map<ClaimId, const Prediction*> by_id;
    for (const auto& p : preds) by_id[p.claim_id] = &p;
    for (const auto& g : gold)
        if (!by_id.count(g.id))
            throw std::invalid_argument("missing prediction for claim " + std::to_string(g.id));
    return by_id;
}

bool evidence_covered(const Prediction& pred, const ClaimRecord& gold) {
    if (!gold.verifiable()) return true;  // label-only credit
    std::set<EvidencePointer> predicted;
    for (size_t i = 0; i < pred.evidence.size() && i < 5; ++i) predicted.insert(pred.evidence[i]);
    for (const auto& set : gold.gold_evidence_sets) {
        if (set.empty()) continue;
        bool all = true;
        for (const auto& p : set) all = all && predicted.count(p) > 0;
        if (all) return true;
    }
    return false;
}

}  // namespace

double accuracy(const std::vector<Prediction>& preds, const std::vector<ClaimRecord>& gold) {
    if (gold.empty()) return 0.0;
    auto by_id = align(preds, gold);
    long correct = 0;
    for (const auto& g : gold)
        if (by_id.at(g.id)->label == g.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double fever_score(const std::vector<Prediction>& preds, const std::vector<ClaimRecord>& gold) {
    if (gold.empty()) return 0.0;
    auto by_id = align(preds, gold);
    long scored = 0;
    for (const auto& g : gold) {
        const Prediction& p = *by_id.at(g.id);
        if (p.label == g.label && evidence_covered(p, g)) ++scored;
    }
    return static_cast<double>(scored) / static_cast<double>(gold.size());
}

namespace {

bool strict_match(const std::vector<EvidencePointer>& beam, const ClaimRecord& gold) {
    for (const auto& set : gold.gold_evidence_sets) {
        if (set.empty() || set.size() > 2) continue;
        const size_t depth = set.size();  // top-1, or top-2 for 2-sentence sets
        bool all = true;
        for (const auto& p : set) {
            bool found = false;
            for (size_t i = 0; i < depth && i < beam.size(); ++i) found = found || beam[i] == p;
            all = all && found;
        }
        if (all) return true;
    }
    return false;
}

bool doc_at_top(const std::vector<EvidencePointer>& beam, const ClaimRecord& gold) {
    if (beam.empty()) return false;
    for (const auto& set : gold.gold_evidence_sets)
        for (const auto& p : set)
            if (p.page_title == beam[0].page_title) return true;
    return false;
}

}  // namespace

RetrievalDiagnostics retrieval_diagnostics(const std::vector<SearchTrace>& traces,
                                           const std::vector<ClaimRecord>& gold,
                                           const std::vector<int>& recall_ks) {
    if (traces.size() != gold.size()) throw std::invalid_argument("diagnostics: size mismatch");
    RetrievalDiagnostics diag;
    std::map<int, long> recall_hits;
    for (int k : recall_ks) recall_hits[k] = 0;

    // Evidence pointers of the level-1 beam come from the shared wiki ids;
    // the caller provides traces whose level-2 entries carry pointers
    // directly, so reconstruct level-1 pointers via the level-2 mapping
    // when available and fall back to id order otherwise.
    for (size_t i = 0; i < traces.size(); ++i) {
        if (!gold[i].verifiable()) continue;
        ++diag.verifiable_claims;
        const auto& t = traces[i];

        std::map<int64_t, EvidencePointer> ptr_of;
        for (const auto& e : t.level2) ptr_of[e.beam.support_id] = e.ptr;
        std::vector<EvidencePointer> beam1;
        for (const auto& e : t.level1) {
            auto it = ptr_of.find(e.support_id);
            if (it != ptr_of.end()) beam1.push_back(it->second);
        }
        std::vector<EvidencePointer> beam2;
        for (const auto& e : t.level2) beam2.push_back(e.ptr);

        if (strict_match(beam1, gold[i])) diag.strict_match_level1 += 1.0;
        if (strict_match(beam2, gold[i])) diag.strict_match_level2 += 1.0;
        if (doc_at_top(beam1, gold[i])) diag.doc_at_top_level1 += 1.0;
        if (doc_at_top(beam2, gold[i])) diag.doc_at_top_level2 += 1.0;

        std::set<EvidencePointer> gold_sentences;
        for (const auto& set : gold[i].gold_evidence_sets) gold_sentences.insert(set.begin(), set.end());
        for (int k : recall_ks) {
            bool hit = false;
            for (size_t j = 0; j < beam1.size() && j < static_cast<size_t>(k); ++j)
                hit = hit || gold_sentences.count(beam1[j]) > 0;
            if (hit) ++recall_hits[k];
        }
    }

    const double denom = diag.verifiable_claims == 0 ? 1.0 : static_cast<double>(diag.verifiable_claims);
    diag.strict_match_level1 /= denom;
    diag.strict_match_level2 /= denom;
    diag.doc_at_top_level1 /= denom;
    diag.doc_at_top_level2 /= denom;
    for (int k : recall_ks) diag.recall_at[k] = static_cast<double>(recall_hits[k]) / denom;
    return diag;
}

GateThresholds compute_gates(const std::vector<SearchTrace>& traces,
                             const std::vector<ClaimRecord>& gold) {
    if (traces.size() != gold.size()) throw std::invalid_argument("compute_gates: size mismatch");
    std::vector<double> d2, d3;
    for (size_t i = 0; i < traces.size(); ++i) {
        const auto& t = traces[i];
        if (gold[i].verifiable() && t.has_level2) {
            std::vector<EvidencePointer> beam2;
            for (const auto& e : t.level2) beam2.push_back(e.ptr);
            if (strict_match(beam2, gold[i])) d2.push_back(t.level2_top_distance);
        }
        if (t.selected_label == gold[i].label) d3.push_back(t.level3_selected_distance);
    }
    if (d2.empty() || d3.empty())
        throw std::runtime_error("compute_gates: empty qualifying subset");

    auto mean_std = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        return std::pair<double, double>(mean, std::sqrt(var));
    };
    GateThresholds g;
    std::tie(g.mean_level2, g.std_level2) = mean_std(d2);
    std::tie(g.mean_level3, g.std_level3) = mean_std(d3);
    g.n_level2 = static_cast<long>(d2.size());
    g.n_level3 = static_cast<long>(d3.size());
    return g;
}

Prediction gated_predict(const Prediction& pred, const GateThresholds& gates) {
    Prediction out = pred;
    const bool l2_ok = pred.has_level2 && pred.level2_distance < gates.mean_level2;
    const bool l3_ok = pred.level3_distance < gates.mean_level3;
    out.admitted = l2_ok && l3_ok;
    if (!out.admitted) {
        out.gate_reason = !l2_ok && !l3_ok ? "level2,level3" : (!l2_ok ? "level2" : "level3");
    }
    return out;
}

Prediction exchange_predict(const Prediction& pred, const GateThresholds& gates,
                            bool datastore_changed) {
    Prediction out = pred;
    out.admitted = true;
    if (!datastore_changed) return out;
    const bool far = !pred.has_level2 || pred.level2_distance >= gates.mean_level2 ||
                     pred.level3_distance >= gates.mean_level3;
    if (!far) return out;
    if (pred.label == Label::Supports)
        out.label = Label::Refutes;
    else if (pred.label == Label::Refutes)
        out.label = Label::Supports;
    return out;
}

SubsetAccuracy admitted_accuracy(const std::vector<Prediction>& preds,
                                 const std::vector<ClaimRecord>& gold) {
    auto by_id = align(preds, gold);
    SubsetAccuracy out;
    out.n_total = static_cast<long>(gold.size());
    long correct = 0;
    for (const auto& g : gold) {
        const Prediction& p = *by_id.at(g.id);
        if (!p.admitted) continue;
        ++out.n_admitted;
        if (p.label == g.label) ++correct;
    }
    out.accuracy = out.n_admitted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(out.n_admitted);
    return out;
}

double dev_fever_of(const std::vector<SearchTrace>& traces, const std::vector<ClaimRecord>& gold) {
    return fever_score(predictions_from_traces(traces), gold);
}

std::string predictions_jsonl(const std::vector<Prediction>& preds) {
    std::string out;
    for (const auto& p : preds) {
        json j;
        j["id"] = p.claim_id;
        j["predicted_label"] = label_dataset_string(p.label);
        json ev = json::array();
        for (const auto& e : p.evidence) ev.push_back(json::array({e.page_title, e.sentence_index}));
        j["predicted_evidence"] = ev;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_predictions(const std::vector<Prediction>& preds, const std::string& path) {
    write_file_atomic(path, predictions_jsonl(preds));
}

}  // namespace memmatch
