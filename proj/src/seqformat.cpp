#include "memmatch/seqformat.hpp"

#include <stdexcept>

#include "memmatch/text.hpp"
#include "memmatch/tokenizer.hpp"

namespace memmatch {

namespace {

std::string evidence_unit(const EvidencePointer& ptr, const std::string& text) {
    std::string out = "Evidence: " + ptr.page_title + ", sentence " +
                      std::to_string(ptr.sentence_index) + ":";
    if (!text.empty()) out += " " + text;
    return out;
}

std::string compose(int level, const ClaimRecord& claim, const std::vector<EvidenceText>& evidence,
                    std::optional<Label> label) {
    std::string out;
    if (level == 2) {
        out = "Consider: Claim: " + claim.claim_text;
    } else if (level == 3) {
        out = label_name(*label) + ": Claim: " + claim.claim_text;
    }
    for (const auto& ev : evidence) {
        if (!out.empty()) out += " ";
        out += evidence_unit(ev.ptr, ev.text);
    }
    return out;
}

}  // namespace

FormattedSequence format_query(const ClaimRecord& claim, int level, SeqMode mode) {
    if (level < 1 || level > 3) throw std::invalid_argument("format_query: level must be 1..3");
    if (mode == SeqMode::Reference && level != 3)
        throw std::invalid_argument("format_query: reference mode is level-3 only");
    FormattedSequence seq;
    seq.level = level;
    seq.role = SeqRole::Query;
    seq.mode = mode;
    seq.claim_id = claim.id;
    switch (level) {
        case 1: seq.text = "Claim: " + claim.claim_text; break;
        case 2: seq.text = "Consider: Claim: " + claim.claim_text; break;
        default:
            seq.text = (mode == SeqMode::Reference ? "Reference: Claim: " : "Predict: Claim: ") +
                       claim.claim_text;
            break;
    }
    return seq;
}

FormattedSequence format_support(int level, const ClaimRecord& claim,
                                 const std::vector<EvidenceText>& evidence,
                                 std::optional<Label> label, int max_tokens) {
    if (level < 1 || level > 3) throw std::invalid_argument("format_support: level must be 1..3");
    if (level == 1 && (evidence.size() != 1 || label.has_value()))
        throw std::invalid_argument("format_support: level 1 takes exactly 1 evidence and no label");
    if (level == 2 && (evidence.size() != 1 || label.has_value()))
        throw std::invalid_argument("format_support: level 2 takes exactly 1 evidence and no label");
    if (level == 3 && !label.has_value())
        throw std::invalid_argument("format_support: level 3 requires a label");

    FormattedSequence seq;
    seq.level = level;
    seq.role = SeqRole::Support;
    seq.claim_id = claim.id;
    seq.label = label;
    for (const auto& ev : evidence) seq.evidence.push_back(ev.ptr);

    std::vector<EvidenceText> trimmed = evidence;
    seq.text = compose(level, claim, trimmed, label);
    if (max_tokens > 0) {
        // Drop words from the tail of the last non-empty evidence sentence
        // until the sequence fits.
        while (count_tokens(seq.text) > max_tokens) {
            int last = static_cast<int>(trimmed.size()) - 1;
            while (last >= 0 && trimmed[static_cast<size_t>(last)].text.empty()) --last;
            if (last < 0) break;  // nothing trimmable remains
            auto words = split_whitespace(trimmed[static_cast<size_t>(last)].text);
            words.pop_back();
            std::string joined;
            for (size_t i = 0; i < words.size(); ++i) {
                if (i) joined += " ";
                joined += words[i];
            }
            trimmed[static_cast<size_t>(last)].text = joined;
            seq.evidence_truncated = true;
            seq.text = compose(level, claim, trimmed, label);
        }
    }
    return seq;
}

}  // namespace memmatch
