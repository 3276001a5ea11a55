#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace memmatch {

using ClaimId = int64_t;

enum class Label : int { Supports = 0, Refutes = 1, Unverifiable = 2 };

/// "Supports" / "Refutes" / "Unverifiable" — the strings rendered into
/// level-3 support sequences.
const std::string& label_name(Label l);

/// "SUPPORTS" / "REFUTES" / "NOT ENOUGH INFO" — dataset / submission strings.
const std::string& label_dataset_string(Label l);
Label label_from_dataset_string(const std::string& s);

inline Label label_from_index(int i) { return static_cast<Label>(i); }
inline int label_index(Label l) { return static_cast<int>(l); }

struct EvidencePointer {
    std::string page_title;
    int sentence_index = 0;

    bool operator==(const EvidencePointer& o) const {
        return page_title == o.page_title && sentence_index == o.sentence_index;
    }
    bool operator<(const EvidencePointer& o) const {
        return std::tie(page_title, sentence_index) < std::tie(o.page_title, o.sentence_index);
    }
};

struct ClaimRecord {
    ClaimId id = 0;
    std::string claim_text;
    Label label = Label::Unverifiable;
    // Each inner vector is one annotator evidence set; empty iff unverifiable.
    std::vector<std::vector<EvidencePointer>> gold_evidence_sets;
    // When non-empty, retrieval is given: the searcher uses exactly these
    // sentences as the candidate set instead of the title prefilter.
    std::vector<EvidencePointer> given_evidence;
    // True when the evidence text served at inference differs from the
    // canonical datastore.
    bool datastore_changed = false;

    bool verifiable() const { return label != Label::Unverifiable; }
};

}  // namespace memmatch
