#include <stdexcept>
#include "doctest.h"
#include "memmatch/corpus.hpp"
#include "memmatch/io.hpp"
#include "memmatch/text.hpp"

#include <set>
#include <sstream>

using namespace memmatch;

namespace {

WikiStore gaulle_store() {
    WikiStore store;
    store.add_sentence("Charles de Gaulle", 0, "Charles de Gaulle was a French general and statesman.");
    store.add_sentence("Charles de Gaulle", 1, "He was the leader of Free France.");
    store.add_sentence("Charles", 0, "Charles is a given name.");
    store.add_sentence("Gaulle (film)", 0, "Gaulle is a 2020 film.");
    return store;
}

}  // namespace

TEST_CASE("load_claims maps FEVER labels and evidence sets") {
    std::vector<std::string> lines = {
        R"({"id": 1, "claim": "A claim.", "label": "NOT ENOUGH INFO", "evidence": null})",
        R"({"id": 2, "claim": "B claim.", "label": "SUPPORTS", "evidence": [[[10, 11, "Page_A", 0]], [[12, 13, "Page_B", 2]]]})",
    };
    auto claims = parse_claims(lines, ClaimFormat::FeverJsonl);
    REQUIRE(claims.size() == 2);
    CHECK(claims[0].label == Label::Unverifiable);
    CHECK(claims[0].gold_evidence_sets.empty());
    CHECK(claims[1].label == Label::Supports);
    CHECK(claims[1].gold_evidence_sets.size() == 2);
    CHECK(claims[1].gold_evidence_sets[0][0] == EvidencePointer{"Page A", 0});
}

TEST_CASE("load_claims: empty input gives empty list") {
    CHECK(parse_claims({}, ClaimFormat::FeverJsonl).empty());
}

TEST_CASE("load_claims reports the offending line") {
    std::vector<std::string> lines = {
        R"({"id": 1, "claim": "ok", "label": "SUPPORTS", "evidence": []})",
        R"({"id": 2, "claim": "bad", "label": "MAYBE", "evidence": []})",
    };
    CHECK_THROWS_WITH_AS(parse_claims(lines, ClaimFormat::FeverJsonl),
                         doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("load_claims rejects evidence fields of wrong type") {
    std::vector<std::string> lines = {
        R"({"id": 1, "claim": "x", "label": "SUPPORTS", "evidence": [[[1, 2, 3, "zero"]]]})",
    };
    CHECK_THROWS_AS(parse_claims(lines, ClaimFormat::FeverJsonl), std::runtime_error);
}

TEST_CASE("select_training_evidence prefers smaller sets") {
    WikiStore store;
    store.add_sentence("A", 5, "a5");
    store.add_sentence("B", 0, "b0");
    store.add_sentence("C", 1, "c1");
    ClaimRecord claim;
    claim.id = 1;
    claim.label = Label::Supports;
    claim.gold_evidence_sets = {{{"A", 5}, {"B", 0}}, {{"C", 1}}};
    auto selected = select_training_evidence(claim, store);
    REQUIRE(selected.size() == 1);
    CHECK(selected[0] == EvidencePointer{"C", 1});
}

TEST_CASE("select_training_evidence ties break on sentence-index sum") {
    WikiStore store;
    store.add_sentence("A", 0, "a0");
    store.add_sentence("A", 3, "a3");
    ClaimRecord claim;
    claim.label = Label::Supports;
    claim.gold_evidence_sets = {{{"A", 3}}, {{"A", 0}}};
    auto selected = select_training_evidence(claim, store);
    REQUIRE(selected.size() == 1);
    CHECK(selected[0] == EvidencePointer{"A", 0});
}

TEST_CASE("select_training_evidence truncates to the 2 earliest sentences") {
    WikiStore store;
    store.add_sentence("A", 0, "a0");
    store.add_sentence("A", 4, "a4");
    store.add_sentence("B", 2, "b2");
    ClaimRecord claim;
    claim.label = Label::Supports;
    claim.gold_evidence_sets = {{{"A", 0}, {"A", 4}, {"B", 2}}};
    auto selected = select_training_evidence(claim, store);
    REQUIRE(selected.size() == 2);
    CHECK(selected[0] == EvidencePointer{"A", 0});
    CHECK(selected[1] == EvidencePointer{"B", 2});
}

TEST_CASE("select_training_evidence rejects unverifiable and unresolvable claims") {
    WikiStore store;
    ClaimRecord nei;
    nei.label = Label::Unverifiable;
    CHECK_THROWS_AS(select_training_evidence(nei, store), std::invalid_argument);

    ClaimRecord dangling;
    dangling.label = Label::Supports;
    dangling.gold_evidence_sets = {{{"Missing", 0}}};
    CHECK_THROWS_AS(select_training_evidence(dangling, store), std::runtime_error);
}

TEST_CASE("prefilter keeps only longest covers per position") {
    auto store = gaulle_store();
    auto result = prefilter_titles("charles de gaulle was a leader", store);
    std::set<std::string> kept;
    for (const auto& [title, idxs] : result.titles) {
        (void)idxs;
        kept.insert(title);
    }
    CHECK(kept == std::set<std::string>{"Charles de Gaulle", "Gaulle (film)"});
}

TEST_CASE("prefilter with no matching token is empty") {
    auto store = gaulle_store();
    auto result = prefilter_titles("nothing matches here", store);
    CHECK(result.titles.empty());
    CHECK(result.sentence_ids.empty());
}

TEST_CASE("prefilter is invariant to casing and punctuation") {
    auto store = gaulle_store();
    auto a = prefilter_titles("Charles de Gaulle, was a LEADER!", store);
    auto b = prefilter_titles("charles de gaulle was a leader", store);
    CHECK(a.sentence_ids == b.sentence_ids);
}

TEST_CASE("normalization removes parentheticals and collapses whitespace") {
    CHECK(normalize_text("Gaulle (film)") == "gaulle");
    CHECK(normalize_text("A  B\t(drop (nested) all) C!") == "a b c");
    CHECK(normalize_text("Émile's hat") == "Émile s hat");  // bytes >= 0x80 pass through unchanged
}

TEST_CASE("synthetic generation is byte-identical for a fixed seed") {
    SyntheticConfig cfg;
    cfg.seed = 7;
    cfg.train_claims = 30;
    cfg.dev_claims = 9;
    cfg.test_claims = 9;
    cfg.perturbed_dev_claims = 12;
    cfg.perturbed_test_claims = 12;
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);

    std::ostringstream sa, sb;
    for (const auto& c : a.train) sa << c.id << '|' << c.claim_text << '|' << label_name(c.label) << '\n';
    for (const auto& c : b.train) sb << c.id << '|' << c.claim_text << '|' << label_name(c.label) << '\n';
    CHECK(sa.str() == sb.str());
    CHECK(a.wiki.checksum() == b.wiki.checksum());
    CHECK(a.perturbed_wiki.checksum() == b.perturbed_wiki.checksum());
}

TEST_CASE("synthetic gold evidence always resolves and labels stay balanced") {
    SyntheticConfig cfg;
    cfg.seed = 11;
    cfg.train_claims = 31;  // not divisible by 3
    cfg.dev_claims = 10;
    cfg.test_claims = 8;
    cfg.perturbed_dev_claims = 7;
    cfg.perturbed_test_claims = 5;
    auto corpus = generate_synthetic(cfg);

    int counts[3] = {0, 0, 0};
    for (const auto& claim : corpus.train) {
        counts[label_index(claim.label)]++;
        CHECK(claim.verifiable() == !claim.gold_evidence_sets.empty());
        for (const auto& set : claim.gold_evidence_sets)
            for (const auto& ptr : set) {
                CHECK(corpus.wiki.resolves(ptr));
                CHECK(select_training_evidence(claim, corpus.wiki).size() <= 2);
            }
    }
    int lo = std::min({counts[0], counts[1], counts[2]});
    int hi = std::max({counts[0], counts[1], counts[2]});
    CHECK(hi - lo <= 1);
}

TEST_CASE("perturbed split flips labels consistently with its store edits") {
    SyntheticConfig cfg;
    cfg.seed = 13;
    cfg.train_claims = 12;
    cfg.dev_claims = 6;
    cfg.test_claims = 6;
    cfg.perturbed_dev_claims = 24;
    cfg.perturbed_test_claims = 24;
    auto corpus = generate_synthetic(cfg);

    int changed = 0;
    for (const auto& claim : corpus.perturbed_test) {
        REQUIRE(claim.given_evidence.size() == 1);
        const auto& ptr = claim.given_evidence[0];
        const std::string* base = corpus.wiki.find(ptr);
        const std::string* pert = corpus.perturbed_wiki.find(ptr);
        REQUIRE(base != nullptr);
        REQUIRE(pert != nullptr);
        CHECK(claim.datastore_changed == (*base != *pert));
        if (claim.datastore_changed) ++changed;
        CHECK(claim.label != Label::Unverifiable);
    }
    CHECK(changed > 0);
    CHECK(changed < static_cast<int>(corpus.perturbed_test.size()));
}

TEST_CASE("wiki store TSV round trip preserves content") {
    auto store = gaulle_store();
    const std::string path = "/tmp/memmatch_test_wiki.tsv";
    store.save_tsv(path);
    auto loaded = WikiStore::load_tsv(path);
    CHECK(loaded.checksum() == store.checksum());
    CHECK(loaded.sentence_count() == store.sentence_count());
}

TEST_CASE("synthetic claims survive a save/load round trip") {
    SyntheticConfig cfg;
    cfg.seed = 3;
    cfg.train_claims = 9;
    cfg.dev_claims = 3;
    cfg.test_claims = 3;
    cfg.perturbed_dev_claims = 6;
    cfg.perturbed_test_claims = 6;
    auto corpus = generate_synthetic(cfg);
    const std::string path = "/tmp/memmatch_test_claims.jsonl";
    save_claims(path, corpus.perturbed_dev);
    auto loaded = load_claims(path, ClaimFormat::Synthetic);
    REQUIRE(loaded.size() == corpus.perturbed_dev.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].id == corpus.perturbed_dev[i].id);
        CHECK(loaded[i].claim_text == corpus.perturbed_dev[i].claim_text);
        CHECK(loaded[i].label == corpus.perturbed_dev[i].label);
        CHECK(loaded[i].datastore_changed == corpus.perturbed_dev[i].datastore_changed);
        CHECK(loaded[i].given_evidence == corpus.perturbed_dev[i].given_evidence);
    }
}

TEST_CASE("raw-text evidence re-associates against the store") {
    auto store = gaulle_store();
    std::vector<std::string> lines = {
        R"({"id": 5, "claim": "Charles de Gaulle led Free France.", "label": "SUPPORTS", "evidence": "He was the leader of Free France."})",
        R"({"id": 6, "claim": "Charles de Gaulle led Free France.", "label": "REFUTES", "evidence": "He never led anything at all."})",
    };
    auto claims = parse_claims(lines, ClaimFormat::FeverJsonl, &store);
    REQUIRE(claims.size() == 2);
    CHECK(claims[0].given_evidence[0] == EvidencePointer{"Charles de Gaulle", 1});
    CHECK_FALSE(claims[0].datastore_changed);
    // No exact match: falls back to the longest-cover title, sentence 0.
    CHECK(claims[1].given_evidence[0] == EvidencePointer{"Charles de Gaulle", 0});
    CHECK(claims[1].datastore_changed);
}
