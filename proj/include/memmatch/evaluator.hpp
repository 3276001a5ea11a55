#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memmatch/searcher.hpp"

namespace memmatch {

struct Prediction {
    ClaimId claim_id = 0;
    Label label = Label::Supports;
    std::vector<EvidencePointer> evidence;  // <= 5, beam order
    double level2_distance = 0.0;           // top of beam
    double level3_distance = 0.0;           // selected label
    bool has_level2 = false;
    bool admitted = true;
    std::string gate_reason;
    std::vector<float> exemplar_query;  // concat(delta2, delta3) when both exist
};

Prediction prediction_from_trace(const SearchTrace& trace);
std::vector<Prediction> predictions_from_traces(const std::vector<SearchTrace>& traces);

/// Maps Unverifiable predictions to the nearer of the Supports/Refutes
/// level-3 distances, for 2-class evaluation.
void map_to_two_class(std::vector<Prediction>& preds, const std::vector<SearchTrace>& traces);

/// Mean exact label match over pairs aligned by claim id. Skips (and
/// counts as wrong) nothing: every gold claim must have a prediction.
double accuracy(const std::vector<Prediction>& preds, const std::vector<ClaimRecord>& gold);

/// Label must match, and for verifiable claims some gold evidence set must
/// be contained in the (<= 5) predicted sentences. Unverifiable claims
/// need the label only.
double fever_score(const std::vector<Prediction>& preds, const std::vector<ClaimRecord>& gold);

struct RetrievalDiagnostics {
    // Strict complete-evidence match in the top 1 (top 2 when the gold set
    // has 2 sentences) beam positions, per level, over verifiable claims.
    double strict_match_level1 = 0.0;
    double strict_match_level2 = 0.0;
    // Top-of-beam sentence has a gold document title, per level.
    double doc_at_top_level1 = 0.0;
    double doc_at_top_level2 = 0.0;
    // Any gold sentence in the top-k of the level-1 beam.
    std::map<int, double> recall_at;
    long verifiable_claims = 0;
};

RetrievalDiagnostics retrieval_diagnostics(const std::vector<SearchTrace>& traces,
                                           const std::vector<ClaimRecord>& gold,
                                           const std::vector<int>& recall_ks = {1, 2, 4, 8, 16});

struct GateThresholds {
    double mean_level2 = 0.0;
    double mean_level3 = 0.0;
    double std_level2 = 0.0;
    double std_level3 = 0.0;
    long n_level2 = 0;
    long n_level3 = 0;
};

/// Means over training traces: level-2 top-of-beam distance given a strict
/// correct retrieval, and level-3 selected distance given a correct label.
GateThresholds compute_gates(const std::vector<SearchTrace>& traces,
                             const std::vector<ClaimRecord>& gold);

/// Admitted iff both distances are strictly below their training means;
/// non-admitted predictions abstain (label preserved, admitted = false).
Prediction gated_predict(const Prediction& pred, const GateThresholds& gates);

/// 2-class heuristic: flip the label when the datastore changed and either
/// distance reaches its training mean. Never abstains.
Prediction exchange_predict(const Prediction& pred, const GateThresholds& gates, bool datastore_changed);

/// Accuracy over the admitted subset only; n_admitted reported.
struct SubsetAccuracy {
    double accuracy = 0.0;
    long n_admitted = 0;
    long n_total = 0;
    double admitted_fraction() const {
        return n_total == 0 ? 0.0 : static_cast<double>(n_admitted) / static_cast<double>(n_total);
    }
};
SubsetAccuracy admitted_accuracy(const std::vector<Prediction>& preds,
                                 const std::vector<ClaimRecord>& gold);

/// FEVER-score for traces vs the gold claims; convenience for the trainer.
double dev_fever_of(const std::vector<SearchTrace>& traces, const std::vector<ClaimRecord>& gold);

/// JSON-lines {id, predicted_label, predicted_evidence} — the submission shape.
std::string predictions_jsonl(const std::vector<Prediction>& preds);
void save_predictions(const std::vector<Prediction>& preds, const std::string& path);

}  // namespace memmatch
