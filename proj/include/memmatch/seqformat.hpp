#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memmatch/types.hpp"

namespace memmatch {

enum class SeqRole { Query, Support };
enum class SeqMode { Search, Reference };

struct EvidenceText {
    EvidencePointer ptr;
    std::string text;
};

struct FormattedSequence {
    std::string text;
    int level = 0;
    SeqRole role = SeqRole::Query;
    SeqMode mode = SeqMode::Search;
    std::optional<Label> label;
    std::vector<EvidencePointer> evidence;
    ClaimId claim_id = 0;
    bool evidence_truncated = false;
};

/// Level 1: "Claim: <text>"; level 2: "Consider: Claim: <text>";
/// level 3: "Predict: Claim: <text>" (search) or "Reference: Claim: <text>".
FormattedSequence format_query(const ClaimRecord& claim, int level, SeqMode mode = SeqMode::Search);

/// Evidence units render as "Evidence: <title>, sentence <idx>: <text>" and
/// join with single spaces. Level 1 is one bare unit; level 2 prepends
/// "Consider: Claim: <text>"; level 3 prepends "<Label>: Claim: <text>".
/// When max_tokens > 0 and the composition runs over, words are dropped
/// from the end of the last evidence sentence (then the one before it,
/// and so on); prefixes, labels, the claim copy and the evidence headers
/// are never trimmed.
FormattedSequence format_support(int level, const ClaimRecord& claim,
                                 const std::vector<EvidenceText>& evidence,
                                 std::optional<Label> label = std::nullopt, int max_tokens = 0);

}  // namespace memmatch
