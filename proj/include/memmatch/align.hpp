#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "memmatch/memory_layer.hpp"
#include "memmatch/tokenizer.hpp"

namespace memmatch {

/// Token alignment induced by the per-filter max-pool positions: each
/// filter contributes its query activation scaled by exp(-delta) to the
/// (query argmax, support argmax) pair.
struct AlignmentMap {
    // Accumulated weight per (query token index, support token index).
    std::map<std::pair<int, int>, double> weights;
    // Per query token, the pair with the largest weight (ties by smallest
    // support index). Pairs with non-positive net weight are dropped.
    std::vector<std::tuple<int, int, double>> max_pairs;
    // Word-level rendering: token pairs merged by source word index.
    std::vector<std::tuple<int, int, double>> merged_max_pairs;
    std::vector<std::string> query_tokens;
    std::vector<std::string> support_tokens;
    std::vector<std::string> query_words;
    std::vector<std::string> support_words;
};

/// The pooled vectors carry the per-filter activations and argmax
/// positions of their feature maps, which is all the alignment needs.
AlignmentMap alignment(const MemoryVector& query_vec, const MemoryVector& support_vec,
                       const TokenSequence& query_seq, const TokenSequence& support_seq);

std::string alignment_json(const AlignmentMap& map);
std::string alignment_html(const AlignmentMap& map, const std::string& title);

}  // namespace memmatch
