#include "memmatch/align.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace memmatch {

using nlohmann::json;

AlignmentMap alignment(const MemoryVector& query_vec, const MemoryVector& support_vec,
                       const TokenSequence& query_seq, const TokenSequence& support_seq) {
    if (query_vec.level != support_vec.level) throw std::invalid_argument("alignment: level mismatch");
    if (query_vec.filters() != support_vec.filters())
        throw std::invalid_argument("alignment: filter count mismatch");

    AlignmentMap out;
    for (const auto& tok : query_seq.tokens) out.query_tokens.push_back(tok.text);
    for (const auto& tok : support_seq.tokens) out.support_tokens.push_back(tok.text);

    for (int m = 0; m < query_vec.filters(); ++m) {
        const double activation = query_vec.g[static_cast<size_t>(m)];
        const double delta =
            std::fabs(query_vec.g[static_cast<size_t>(m)] - support_vec.g[static_cast<size_t>(m)]);
        const int qi = query_vec.argmax[static_cast<size_t>(m)];
        const int sj = support_vec.argmax[static_cast<size_t>(m)];
        out.weights[{qi, sj}] += activation * std::exp(-delta);
    }

    // Per query token keep the max-weight pair; drop non-positive weights
    // from the rendering.
    std::map<int, std::pair<int, double>> best;  // qi -> (sj, weight)
    for (const auto& [pair, w] : out.weights) {
        auto it = best.find(pair.first);
        if (it == best.end() || w > it->second.second) best[pair.first] = {pair.second, w};
    }
    for (const auto& [qi, sw] : best)
        if (sw.second > 0.0) out.max_pairs.emplace_back(qi, sw.first, sw.second);

    // Merge token-level pairs back to whitespace words by summing weights.
    auto word_of = [](const TokenSequence& seq, int token_index) {
        return seq.tokens[static_cast<size_t>(token_index)].word_index;
    };
    auto words_of = [](const TokenSequence& seq) {
        std::vector<std::string> words;
        for (const auto& tok : seq.tokens) {
            const int w = tok.word_index;
            while (static_cast<int>(words.size()) <= w) words.emplace_back();
            words[static_cast<size_t>(w)] += tok.text;
        }
        return words;
    };
    out.query_words = words_of(query_seq);
    out.support_words = words_of(support_seq);

    std::map<std::pair<int, int>, double> merged;
    for (const auto& [qi, sj, w] : out.max_pairs)
        merged[{word_of(query_seq, qi), word_of(support_seq, sj)}] += w;
    std::map<int, std::pair<int, double>> merged_best;
    for (const auto& [pair, w] : merged) {
        auto it = merged_best.find(pair.first);
        if (it == merged_best.end() || w > it->second.second) merged_best[pair.first] = {pair.second, w};
    }
    for (const auto& [qw, sw] : merged_best)
        if (sw.second > 0.0) out.merged_max_pairs.emplace_back(qw, sw.first, sw.second);
    return out;
}

std::string alignment_json(const AlignmentMap& map) {
    json j;
    j["query_tokens"] = map.query_tokens;
    j["support_tokens"] = map.support_tokens;
    json pairs = json::array();
    for (const auto& [qi, sj, w] : map.max_pairs) pairs.push_back(json::array({qi, sj, w}));
    j["max_pairs"] = pairs;
    json merged = json::array();
    for (const auto& [qw, sw, w] : map.merged_max_pairs) merged.push_back(json::array({qw, sw, w}));
    j["merged_word_pairs"] = merged;
    j["query_words"] = map.query_words;
    j["support_words"] = map.support_words;
    return j.dump();
}

namespace {

std::string escape_html(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::string alignment_html(const AlignmentMap& map, const std::string& title) {
    // Static SVG: the two word rows with a line per merged max pair,
    // stroke width scaled by weight.
    const int cell = 86;
    const int width = cell * static_cast<int>(std::max(map.query_words.size(), map.support_words.size())) + 40;
    const int height = 220;
    double max_w = 1e-12;
    for (const auto& [qw, sw, w] : map.merged_max_pairs) {
        (void)qw;
        (void)sw;
        max_w = std::max(max_w, w);
    }

    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << escape_html(title)
        << "</title></head>\n<body>\n<h3>" << escape_html(title) << "</h3>\n";
    out << "<svg width=\"" << width << "\" height=\"" << height << "\" font-family=\"monospace\" font-size=\"12\">\n";
    for (size_t i = 0; i < map.query_words.size(); ++i)
        out << "<text x=\"" << (20 + cell * i) << "\" y=\"30\">" << escape_html(map.query_words[i])
            << "</text>\n";
    for (size_t i = 0; i < map.support_words.size(); ++i)
        out << "<text x=\"" << (20 + cell * i) << "\" y=\"200\">" << escape_html(map.support_words[i])
            << "</text>\n";
    for (const auto& [qw, sw, w] : map.merged_max_pairs) {
        const double stroke = 0.5 + 2.5 * w / max_w;
        out << "<line x1=\"" << (20 + cell * qw + 20) << "\" y1=\"38\" x2=\"" << (20 + cell * sw + 20)
            << "\" y2=\"186\" stroke=\"steelblue\" stroke-width=\"" << stroke << "\" opacity=\"0.8\"/>\n";
    }
    out << "</svg>\n</body></html>\n";
    return out.str();
}

}  // namespace memmatch
