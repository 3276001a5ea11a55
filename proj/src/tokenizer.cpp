#include "memmatch/tokenizer.hpp"

#include <cctype>
#include <stdexcept>

#include "memmatch/io.hpp"
#include "memmatch/text.hpp"

namespace memmatch {

Vocabulary::Vocabulary() {
    push("<pad>");
    push("<unk>");
}

void Vocabulary::push(const std::string& token) {
    token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, int max_size) {
    if (max_size < 2) throw std::invalid_argument("vocabulary size must be >= 2");
    std::unordered_map<std::string, long> counts;
    for (const auto& text : texts)
        for (const auto& tok : split_tokens(text)) counts[tok.text]++;

    std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    for (const auto& [tok, count] : ranked) {
        (void)count;
        if (v.size() >= max_size) break;
        v.push(tok);
    }
    return v;
}

int Vocabulary::id_for(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

void Vocabulary::save(const std::string& path) const {
    std::string out;
    for (const auto& tok : id_to_token_) {
        out += tok;
        out += '\n';
    }
    write_file_atomic(path, out);
}

Vocabulary Vocabulary::load(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.size() < 2 || lines[0] != "<pad>" || lines[1] != "<unk>")
        throw std::runtime_error("not a vocabulary file: " + path);
    Vocabulary v;
    for (size_t i = 2; i < lines.size(); ++i) v.push(lines[i]);
    return v;
}

std::vector<SurfaceToken> split_tokens(const std::string& text) {
    std::vector<SurfaceToken> out;
    int word_index = -1;
    bool in_word = false;
    size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            in_word = false;
            ++i;
            continue;
        }
        if (!in_word) {
            in_word = true;
            ++word_index;
        }
        SurfaceToken tok;
        tok.word_index = word_index;
        tok.byte_start = i;
        if (std::isalnum(c) || c >= 0x80) {
            while (i < text.size()) {
                unsigned char d = static_cast<unsigned char>(text[i]);
                if (!(std::isalnum(d) || d >= 0x80)) break;
                tok.text.push_back(static_cast<char>(std::tolower(d)));
                ++i;
            }
        } else {
            tok.text.push_back(text[i]);
            ++i;
        }
        tok.byte_end = i;
        out.push_back(std::move(tok));
    }
    return out;
}

int count_tokens(const std::string& text) { return static_cast<int>(split_tokens(text).size()); }

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab, int max_len) {
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    TokenSequence seq;
    seq.text = text;
    seq.tokens = split_tokens(text);
    if (static_cast<int>(seq.tokens.size()) > max_len) {
        seq.tokens.resize(static_cast<size_t>(max_len));
        seq.truncated = true;
    }
    seq.n_real = static_cast<int>(seq.tokens.size());
    seq.ids.assign(static_cast<size_t>(max_len), Vocabulary::kPadId);
    for (int i = 0; i < seq.n_real; ++i)
        seq.ids[static_cast<size_t>(i)] = vocab.id_for(seq.tokens[static_cast<size_t>(i)].text);
    return seq;
}

}  // namespace memmatch
