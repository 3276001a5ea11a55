#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memmatch/evaluator.hpp"
#include "memmatch/searcher.hpp"

namespace memmatch {

/// concat(delta level 2 top-of-beam, delta level 3 selected), plus the
/// labels observed when the database was built.
struct ExemplarRecord {
    std::vector<float> vec;  // length 2M
    ClaimId claim_id = 0;
    Label predicted = Label::Supports;
    Label reference = Label::Supports;
    std::string partition;

    bool is_true_positive() const { return predicted == reference; }
};

/// Append-only flat database with exact Euclidean matching. Distinct from
/// the memory stores used by the coarse-to-fine search.
class ExemplarDB {
  public:
    int dim() const { return dim_; }
    int64_t size() const { return static_cast<int64_t>(records_.size()); }
    const ExemplarRecord& record(int64_t i) const { return records_.at(static_cast<size_t>(i)); }

    /// One record per qualifying claim in the partition; claims lacking a
    /// level-2 difference vector (null retrieval) are skipped.
    void add_partition(const std::vector<SearchTrace>& traces, const std::vector<ClaimRecord>& gold,
                       bool verifiable_only, const std::string& partition_tag);

    /// Exact nearest record, ties by insertion order; optionally restricted
    /// to one partition. Throws when nothing qualifies.
    std::pair<const ExemplarRecord*, double> nearest(
        const std::vector<float>& query, const std::optional<std::string>& partition = std::nullopt) const;

    uint64_t content_checksum() const;

    /// Vector file reuses the memory-cache layout (level field 0, m = 2M);
    /// record metadata rides in a JSON-lines sidecar at <path>.jsonl.
    void save(const std::string& path) const;
    static ExemplarDB load(const std::string& path);

  private:
    int dim_ = 0;
    std::vector<ExemplarRecord> records_;
};

/// Admit iff the nearest exemplar in the database is a true positive.
Prediction audit_tp(const Prediction& pred, const ExemplarDB& db);

/// When the datastore changed, replace the label with the reference label
/// of the nearest exemplar from the update partition. Never abstains.
Prediction audit_update(const Prediction& pred, const ExemplarDB& db, bool datastore_changed,
                        const std::string& update_partition);

struct AdmissionCurveRow {
    double cutoff = 0.0;
    double admitted_fraction = 0.0;
    double admitted_accuracy = 0.0;
    long n_admitted = 0;
};

/// Re-filters audit_tp admissions by a max exemplar distance per cutoff;
/// cutoffs must be ascending. The admitted fraction is non-decreasing.
std::vector<AdmissionCurveRow> admission_curve(const ExemplarDB& db,
                                               const std::vector<Prediction>& preds,
                                               const std::vector<ClaimRecord>& gold,
                                               const std::vector<double>& cutoffs);

}  // namespace memmatch
