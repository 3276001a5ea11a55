#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "memmatch/types.hpp"
#include "memmatch/vocab.hpp"

namespace memmatch {

/// Sentence datastore addressed by (page title, sentence index).
/// Read-only once built; concurrent reads are safe.
class WikiStore {
  public:
    void add_sentence(const std::string& title, int sentence_index, const std::string& text);

    const std::string* find(const EvidencePointer& ptr) const;
    bool resolves(const EvidencePointer& ptr) const { return find(ptr) != nullptr; }

    /// Ordered sentence indices of one title (empty if unknown title).
    std::vector<int> sentence_indices(const std::string& title) const;

    /// Global, deterministic sentence ids: rank in (title asc, index asc)
    /// order. Used as the stable ids of level-1 memory stores.
    int64_t sentence_id(const EvidencePointer& ptr) const;  // -1 if absent
    const EvidencePointer& pointer_of(int64_t id) const;
    const std::string& text_of(int64_t id) const;
    int64_t sentence_count() const { return static_cast<int64_t>(order_.size()); }

    std::vector<std::string> titles() const;

    /// Titles whose normalized token span equals a given token window; the
    /// index maps first normalized token -> title ids for the cover scan.
    struct TitleInfo {
        std::string title;
        std::vector<std::string> norm_tokens;
    };
    const std::vector<TitleInfo>& title_infos() const;
    const std::unordered_map<std::string, std::vector<int>>& first_token_index() const;

    /// Exact-match lookup of a sentence by normalized text; used to
    /// re-associate metadata for evidence given as raw text.
    std::optional<EvidencePointer> find_by_normalized_text(const std::string& text) const;

    uint64_t checksum() const;

    void save_tsv(const std::string& path) const;
    static WikiStore load_tsv(const std::string& path);

  private:
    void rebuild_indexes() const;

    std::map<std::pair<std::string, int>, std::string> sentences_;
    mutable bool indexes_fresh_ = false;
    mutable std::vector<std::pair<std::string, int>> order_;
    mutable std::map<std::pair<std::string, int>, int64_t> ids_;
    mutable std::vector<TitleInfo> title_infos_;
    mutable std::unordered_map<std::string, std::vector<int>> first_token_index_;
    mutable std::unordered_map<std::string, EvidencePointer> norm_text_index_;
    mutable std::vector<EvidencePointer> pointers_;
};

enum class ClaimFormat { FeverJsonl, Synthetic };

/// One claim per input line; malformed lines raise with the line number.
std::vector<ClaimRecord> load_claims(const std::string& path, ClaimFormat format,
                                     const WikiStore* store = nullptr);
std::vector<ClaimRecord> parse_claims(const std::vector<std::string>& lines, ClaimFormat format,
                                      const WikiStore* store = nullptr);
void save_claims(const std::string& path, const std::vector<ClaimRecord>& claims);

/// The single training evidence set for a verifiable claim: smallest gold
/// set, ties by smallest sentence-index sum then lexicographic pointer
/// list; sets larger than 2 keep the 2 pointers with smallest indices.
std::vector<EvidencePointer> select_training_evidence(const ClaimRecord& claim, const WikiStore& store);

struct PrefilterResult {
    // Kept titles ascending, each with ascending sentence indices.
    std::vector<std::pair<std::string, std::vector<int>>> titles;
    // Flattened candidate sentence ids (title asc, index asc).
    std::vector<int64_t> sentence_ids;
};

/// Titles with the longest normalized lexical cover starting at each claim
/// token, left to right; union over positions, all sentences of kept titles.
PrefilterResult prefilter_titles(const std::string& claim_text, const WikiStore& store);

struct PrefilterStats {
    double mean_titles = 0.0;
    double mean_sentences = 0.0;
    double gold_coverage = 0.0;  // fraction of verifiable claims with >=1 gold sentence in the set
};
PrefilterStats prefilter_stats(const std::vector<ClaimRecord>& claims, const WikiStore& store);

/// Vocabulary over the wiki sentences, titles, training claims and the
/// fixed sequence-format tokens. Deterministic for fixed inputs.
Vocabulary build_corpus_vocabulary(const WikiStore& store, const std::vector<ClaimRecord>& claims,
                                   int max_size);

struct SyntheticConfig {
    uint64_t seed = 7;
    int train_claims = 504;
    int dev_claims = 150;
    int test_claims = 150;
    int perturbed_dev_claims = 120;
    int perturbed_test_claims = 120;
};

struct SyntheticCorpus {
    WikiStore wiki;
    std::vector<ClaimRecord> train;
    std::vector<ClaimRecord> dev;
    std::vector<ClaimRecord> test;
    // Perturbed split: shares page identities with `wiki` but some sentence
    // texts are rewritten to flip the stated facts.
    WikiStore perturbed_wiki;
    std::vector<ClaimRecord> perturbed_dev;
    std::vector<ClaimRecord> perturbed_test;
};

/// Deterministic templated micro-corpus; identical seeds give identical bytes.
SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg);

void save_synthetic(const SyntheticCorpus& corpus, const std::string& dir);

}  // namespace memmatch
