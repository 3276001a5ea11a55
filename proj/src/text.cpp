#include "memmatch/text.hpp"

#include <cctype>
#include <stdexcept>

#include "memmatch/types.hpp"

namespace memmatch {

namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace

std::string to_lower_ascii(const std::string& s) {
    std::string out = s;
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string normalize_text(const std::string& s) {
    // Drop "(...)" spans first (unclosed parens drop through end of string).
    std::string stripped;
    stripped.reserve(s.size());
    int depth = 0;
    for (char c : s) {
        if (c == '(') {
            ++depth;
        } else if (c == ')') {
            if (depth > 0) --depth;
        } else if (depth == 0) {
            stripped.push_back(c);
        }
    }

    std::string out;
    out.reserve(stripped.size());
    bool pending_space = false;
    for (unsigned char c : stripped) {
        if (is_word_byte(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

std::vector<std::string> split_whitespace(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> normalize_tokens(const std::string& s) {
    return split_whitespace(normalize_text(s));
}

const std::string& label_name(Label l) {
    static const std::string names[3] = {"Supports", "Refutes", "Unverifiable"};
    return names[label_index(l)];
}

const std::string& label_dataset_string(Label l) {
    static const std::string names[3] = {"SUPPORTS", "REFUTES", "NOT ENOUGH INFO"};
    return names[label_index(l)];
}

Label label_from_dataset_string(const std::string& s) {
    if (s == "SUPPORTS") return Label::Supports;
    if (s == "REFUTES") return Label::Refutes;
    if (s == "NOT ENOUGH INFO") return Label::Unverifiable;
    throw std::invalid_argument("unknown label string: \"" + s + "\"");
}

}  // namespace memmatch
