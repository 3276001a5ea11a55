#include "doctest.h"
#include "memmatch/tokenizer.hpp"

using namespace memmatch;

namespace {

Vocabulary small_vocab() {
    return Vocabulary::build({"the cat sat on the mat .", "claim : evidence"}, 64);
}

}  // namespace

TEST_CASE("empty text tokenizes to all padding") {
    auto vocab = small_vocab();
    auto seq = tokenize("", vocab, 8);
    CHECK(seq.n_real == 0);
    CHECK_FALSE(seq.truncated);
    for (int id : seq.ids) CHECK(id == Vocabulary::kPadId);
}

TEST_CASE("exactly max_len tokens: no padding, no truncation") {
    auto vocab = small_vocab();
    auto seq = tokenize("the cat sat on", vocab, 4);
    CHECK(seq.n_real == 4);
    CHECK_FALSE(seq.truncated);
    for (int id : seq.ids) CHECK(id != Vocabulary::kPadId);
}

TEST_CASE("overlong text drops the tail and sets the truncation flag") {
    auto vocab = small_vocab();
    auto seq = tokenize("the cat sat on the mat the", vocab, 4);
    CHECK(seq.n_real == 4);
    CHECK(seq.truncated);
    CHECK(seq.tokens.back().text == "on");
}

TEST_CASE("punctuation splits into single-character tokens") {
    auto vocab = small_vocab();
    auto seq = tokenize("Claim: The cat's mat.", vocab, 16);
    std::vector<std::string> texts;
    for (const auto& t : seq.tokens) texts.push_back(t.text);
    CHECK(texts == std::vector<std::string>{"claim", ":", "the", "cat", "'", "s", "mat", "."});
    // "Claim:" is one whitespace word split into two tokens.
    CHECK(seq.tokens[0].word_index == 0);
    CHECK(seq.tokens[1].word_index == 0);
    CHECK(seq.tokens[2].word_index == 1);
}

TEST_CASE("out-of-vocabulary tokens map to the unknown id") {
    auto vocab = small_vocab();
    auto seq = tokenize("the zyzzyva", vocab, 4);
    CHECK(seq.ids[0] != Vocabulary::kUnkId);
    CHECK(seq.ids[1] == Vocabulary::kUnkId);
}

TEST_CASE("vocabulary build ranks by count then token, and round trips") {
    auto vocab = Vocabulary::build({"b b b a a c"}, 5);
    CHECK(vocab.size() == 5);
    CHECK(vocab.id_for("b") == 2);
    CHECK(vocab.id_for("a") == 3);
    CHECK(vocab.id_for("c") == 4);
    const std::string path = "/tmp/memmatch_test_vocab.txt";
    vocab.save(path);
    auto loaded = Vocabulary::load(path);
    CHECK(loaded.size() == vocab.size());
    CHECK(loaded.id_for("c") == 4);
}

TEST_CASE("vocabulary cap drops the rarest tokens") {
    auto vocab = Vocabulary::build({"x x y z"}, 4);
    CHECK(vocab.size() == 4);
    CHECK(vocab.id_for("x") == 2);
    CHECK(vocab.id_for("y") == 3);
    CHECK(vocab.id_for("z") == Vocabulary::kUnkId);
}
