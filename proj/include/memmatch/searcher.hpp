#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "memmatch/corpus.hpp"
#include "memmatch/model.hpp"
#include "memmatch/store.hpp"

namespace memmatch {

struct SearchConfig {
    int k1 = 10;          // level-1 beam; 100 at test
    int z = 3;            // level-2 survivors marginalized in level 3; 5 at test
    int chunk_size = 8192;
    std::string cache_dir;  // empty disables disk caching
    int threads = 1;

    void validate() const;
};

struct BeamEntry {
    int64_t support_id = -1;
    double distance = 0.0;
    int rank = 0;
};

struct Level2Entry {
    BeamEntry beam;
    EvidencePointer ptr;
    std::string support_text;
};

struct Level3Entry {
    Label label = Label::Supports;
    double distance = 0.0;
    std::string support_text;
};

struct SearchTrace {
    ClaimId claim_id = 0;
    bool null_retrieval = false;  // empty candidate set; level 3 ran evidence-free
    std::vector<BeamEntry> level1;
    std::vector<Level2Entry> level2;
    std::array<Level3Entry, 3> level3;
    Label selected_label = Label::Supports;
    std::vector<EvidencePointer> selected_evidence;  // dedup'd top-z, beam order, <= 5
    double level2_top_distance = 0.0;
    double level3_selected_distance = 0.0;
    bool has_level2 = false;
    std::vector<float> delta_level2;  // query vs top-of-beam support, level 2
    std::vector<float> delta_level3;  // query vs selected label support, level 3
};

/// Smallest label index wins distance ties: Supports < Refutes < Unverifiable.
Label select_label(const std::array<double, 3>& distances);

/// Exact k smallest distances over a subset of the store, processed in
/// chunks of cfg.chunk_size with a deterministic merge; ties break by
/// support id ascending. The result is identical for every chunk size.
std::vector<BeamEntry> topk(const std::vector<float>& query, const MemoryStore& store,
                            const std::vector<int64_t>& subset_rows, int k, int chunk_size);

/// One level-1 memory vector per unique candidate sentence, formatted as a
/// level-1 support. When cache_dir is set, the store is persisted keyed by
/// (model checksum, level, corpus checksum) and reloaded when compatible.
MemoryStore build_level1_store(const WikiStore& wiki, const std::vector<int64_t>& sentence_ids,
                               const Model& model, const Vocabulary& vocab, const SearchConfig& cfg,
                               uint64_t corpus_checksum, uint64_t model_checksum);

/// The candidate sentence ids for one claim: given evidence when present,
/// otherwise the title prefilter result.
std::vector<int64_t> claim_candidates(const ClaimRecord& claim, const WikiStore& wiki);

/// Full coarse-to-fine search for one claim against a prebuilt level-1
/// store. store_rows maps candidate sentence ids to store row indices.
SearchTrace run_search(const ClaimRecord& claim, const WikiStore& wiki,
                       const std::vector<int64_t>& candidate_ids, const MemoryStore& l1_store,
                       const std::vector<int64_t>& store_rows, const Model& model,
                       const Vocabulary& vocab, const SearchConfig& cfg);

/// Search every claim of a split: builds the shared level-1 store over the
/// union of candidates, then runs per-claim searches (parallel over claims).
std::vector<SearchTrace> search_split(const std::vector<ClaimRecord>& claims, const WikiStore& wiki,
                                      const Model& model, const Vocabulary& vocab,
                                      const SearchConfig& cfg);

std::string trace_to_json(const SearchTrace& trace);
SearchTrace trace_from_json(const std::string& line);
void save_traces(const std::vector<SearchTrace>& traces, const std::string& path);
std::vector<SearchTrace> load_traces(const std::string& path);

}  // namespace memmatch
