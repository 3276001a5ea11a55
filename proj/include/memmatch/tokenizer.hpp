#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memmatch/vocab.hpp"

namespace memmatch {

/// One surface token: a lowercased alphanumeric run or a single
/// punctuation character. word_index groups tokens that came from the
/// same whitespace-delimited word, for display-time re-merging.
struct SurfaceToken {
    std::string text;
    int word_index = 0;
    size_t byte_start = 0;
    size_t byte_end = 0;
};

std::vector<SurfaceToken> split_tokens(const std::string& text);
int count_tokens(const std::string& text);

struct TokenSequence {
    std::vector<int> ids;              // length max_len, padded tail
    int n_real = 0;                    // number of non-padding positions
    bool truncated = false;
    std::vector<SurfaceToken> tokens;  // the n_real real tokens
    std::string text;

    int length() const { return static_cast<int>(ids.size()); }
};

/// Lowercase split, OOV-to-unknown, truncate then pad to max_len.
TokenSequence tokenize(const std::string& text, const Vocabulary& vocab, int max_len);

}  // namespace memmatch
