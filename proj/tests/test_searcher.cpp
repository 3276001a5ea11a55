#include <cstdlib>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "memmatch/searcher.hpp"
#include "oracle_helpers.hpp"

using namespace memmatch;
using namespace memmatch::testing;

namespace {

struct ToyWorld {
    WikiStore wiki;
    Vocabulary vocab;
    Model model;
    std::vector<ClaimRecord> claims;
};

/// Random micro-corpus plus a randomly initialized model; sentences use a
/// small closed word pool so everything is in-vocabulary.
ToyWorld make_world(uint64_t seed, int n_titles, int sentences_per_title, int n_claims) {
    ToyWorld world;
    Rng rng(seed);
    const std::vector<std::string> pool = {"river", "stone", "amber", "falcon", "quiet", "ember",
                                           "woven", "harbor", "cinder", "meadow", "sable", "north"};
    std::vector<std::string> texts;
    for (int t = 0; t < n_titles; ++t) {
        const std::string title = "Page " + std::string(1, static_cast<char>('A' + t % 26)) +
                                  std::to_string(t / 26);
        for (int s = 0; s < sentences_per_title; ++s) {
            std::string sent = random_words(rng, pool, 3 + static_cast<int>(rng.next_below(5))) + ".";
            world.wiki.add_sentence(title, s, sent);
            texts.push_back(sent);
        }
    }
    for (int c = 0; c < n_claims; ++c) {
        ClaimRecord claim;
        claim.id = 100 + c;
        claim.claim_text = random_words(rng, pool, 3 + static_cast<int>(rng.next_below(4))) + ".";
        claim.label = label_from_index(static_cast<int>(rng.next_below(3)));
        if (claim.label != Label::Unverifiable) {
            const int64_t gold = static_cast<int64_t>(rng.next_below(
                static_cast<uint64_t>(world.wiki.sentence_count())));
            claim.gold_evidence_sets = {{world.wiki.pointer_of(gold)}};
        }
        texts.push_back(claim.claim_text);
        world.claims.push_back(std::move(claim));
    }
    world.vocab = Vocabulary::build(texts, 128);

    ModelConfig cfg;
    cfg.d_ctx = 10;
    cfg.d_emb = 6;
    cfg.vocab_size = world.vocab.size();
    cfg.filters = 8;
    cfg.blocks = 2;
    cfg.max_len = {16, 28, 40};
    cfg.seed = seed ^ 0xbeef;
    world.model = Model::init(cfg);
    return world;
}

std::vector<int64_t> all_ids(const WikiStore& wiki) {
    std::vector<int64_t> ids(static_cast<size_t>(wiki.sentence_count()));
    for (int64_t i = 0; i < wiki.sentence_count(); ++i) ids[static_cast<size_t>(i)] = i;
    return ids;
}

}  // namespace

TEST_CASE("topk matches a brute-force sort, including ties") {
    MemoryStore store;
    store.level = 1;
    store.m = 2;
    store.add(0, {0.1f, 0.0f});
    store.add(1, {0.5f, 0.0f});
    store.add(2, {0.2f, 0.0f});
    const std::vector<float> query = {0.0f, 0.0f};
    std::vector<int64_t> rows = {0, 1, 2};

    auto beam = topk(query, store, rows, 2, 8192);
    REQUIRE(beam.size() == 2);
    CHECK(beam[0].support_id == 0);
    CHECK(beam[1].support_id == 2);

    auto whole = topk(query, store, rows, 10, 8192);
    CHECK(whole.size() == 3);
    CHECK(whole[2].support_id == 1);

    // Equal distances order by support id ascending.
    MemoryStore tied;
    tied.level = 1;
    tied.m = 1;
    tied.add(7, {1.0f});
    tied.add(3, {1.0f});
    tied.add(5, {1.0f});
    auto tie_beam = topk({0.0f}, tied, {0, 1, 2}, 3, 8192);
    CHECK(tie_beam[0].support_id == 3);
    CHECK(tie_beam[1].support_id == 5);
    CHECK(tie_beam[2].support_id == 7);
}

TEST_CASE("chunked top-k is bit-exact for any chunk size") {
    Rng rng(21);
    MemoryStore store;
    store.level = 1;
    store.m = 4;
    std::vector<int64_t> rows;
    for (int i = 0; i < 57; ++i) {
        std::vector<float> g(4);
        for (auto& v : g) v = static_cast<float>(rng.uniform(-2.0, 2.0));
        store.add(i, g);
        rows.push_back(i);
    }
    std::vector<float> query(4);
    for (auto& v : query) v = static_cast<float>(rng.uniform(-2.0, 2.0));

    auto reference = topk(query, store, rows, 9, 8192);
    for (int chunk : {1, 3, 57, 100}) {
        auto beam = topk(query, store, rows, 9, chunk);
        REQUIRE(beam.size() == reference.size());
        for (size_t i = 0; i < beam.size(); ++i) {
            CHECK(beam[i].support_id == reference[i].support_id);
            CHECK(beam[i].distance == reference[i].distance);
        }
    }
}

TEST_CASE("beam nesting: top-k is a prefix of top-k'") {
    Rng rng(33);
    MemoryStore store;
    store.level = 1;
    store.m = 3;
    std::vector<int64_t> rows;
    for (int i = 0; i < 40; ++i) {
        std::vector<float> g(3);
        for (auto& v : g) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        store.add(i, g);
        rows.push_back(i);
    }
    std::vector<float> query = {0.2f, -0.4f, 0.9f};
    std::vector<BeamEntry> previous;
    for (int k : {1, 2, 4, 8, 16, 32, 64}) {
        auto beam = topk(query, store, rows, k, 7);
        for (size_t i = 0; i < previous.size(); ++i) {
            CHECK(beam[i].support_id == previous[i].support_id);
            CHECK(beam[i].distance == previous[i].distance);
        }
        previous = beam;
    }
}

TEST_CASE("full trace equals the brute-force reimplementation on toy stores") {
    for (uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        auto world = make_world(seed, 5, 4, 3);
        SearchConfig cfg;
        cfg.k1 = 7;
        cfg.z = 3;
        auto ids = all_ids(world.wiki);
        MemoryStore store = build_level1_store(world.wiki, ids, world.model, world.vocab, cfg, 0, 0);
        for (const auto& claim : world.claims) {
            auto trace = run_search(claim, world.wiki, ids, store, ids, world.model, world.vocab, cfg);
            auto oracle = brute_force_search(claim, world.wiki, ids, world.model, world.vocab, cfg);
            CHECK(traces_equal(trace, oracle));
        }
    }
}

TEST_CASE("k1 = store size with z = k1 re-scores the whole level-1 beam") {
    auto world = make_world(9, 4, 3, 1);
    SearchConfig cfg;
    cfg.k1 = static_cast<int>(world.wiki.sentence_count());
    cfg.z = cfg.k1;
    auto ids = all_ids(world.wiki);
    MemoryStore store = build_level1_store(world.wiki, ids, world.model, world.vocab, cfg, 0, 0);
    auto trace = run_search(world.claims[0], world.wiki, ids, store, ids, world.model, world.vocab, cfg);

    std::set<int64_t> l1, l2;
    for (const auto& e : trace.level1) l1.insert(e.support_id);
    for (const auto& e : trace.level2) l2.insert(e.beam.support_id);
    CHECK(l1 == l2);  // a permutation: same id set, re-scored order
}

TEST_CASE("level-2 re-scoring changes the level-1 order somewhere") {
    bool reordered = false;
    for (uint64_t seed = 40; seed < 48 && !reordered; ++seed) {
        auto world = make_world(seed, 6, 3, 2);
        SearchConfig cfg;
        cfg.k1 = 10;
        cfg.z = 3;
        auto ids = all_ids(world.wiki);
        MemoryStore store = build_level1_store(world.wiki, ids, world.model, world.vocab, cfg, 0, 0);
        for (const auto& claim : world.claims) {
            auto trace = run_search(claim, world.wiki, ids, store, ids, world.model, world.vocab, cfg);
            for (size_t i = 0; i < trace.level2.size(); ++i)
                if (trace.level2[i].beam.support_id != trace.level1[i].support_id) reordered = true;
        }
    }
    CHECK(reordered);
}

TEST_CASE("empty candidate set is flagged and still classifies") {
    auto world = make_world(11, 3, 2, 1);
    SearchConfig cfg;
    auto ids = all_ids(world.wiki);
    MemoryStore store = build_level1_store(world.wiki, ids, world.model, world.vocab, cfg, 0, 0);
    auto trace = run_search(world.claims[0], world.wiki, {}, store, {}, world.model, world.vocab, cfg);
    CHECK(trace.null_retrieval);
    CHECK(trace.level1.empty());
    CHECK(trace.level2.empty());
    CHECK_FALSE(trace.has_level2);
    CHECK(trace.selected_evidence.empty());
    CHECK(trace.delta_level3.size() == static_cast<size_t>(world.model.cfg.filters));
    // One support per label, evidence-free.
    for (int l = 0; l < 3; ++l)
        CHECK(trace.level3[static_cast<size_t>(l)].support_text.find("Evidence:") == std::string::npos);
}

TEST_CASE("store cache round trip is bit-identical and reuses encodes") {
    auto world = make_world(13, 4, 2, 2);
    SearchConfig cfg;
    cfg.cache_dir = "/tmp/memmatch_test_cache";
    std::system("rm -rf /tmp/memmatch_test_cache");
    auto ids = all_ids(world.wiki);

    world.model.encode_calls.store(0);
    MemoryStore fresh = build_level1_store(world.wiki, ids, world.model, world.vocab, cfg,
                                           world.wiki.checksum(), world.model.checksum());
    const uint64_t calls_after_build = world.model.encode_calls.load();
    CHECK(calls_after_build == static_cast<uint64_t>(world.wiki.sentence_count()));

    MemoryStore cached = build_level1_store(world.wiki, ids, world.model, world.vocab, cfg,
                                            world.wiki.checksum(), world.model.checksum());
    CHECK(world.model.encode_calls.load() == calls_after_build);  // loaded, not re-encoded
    CHECK(cached.ids == fresh.ids);
    CHECK(cached.data == fresh.data);
}

TEST_CASE("shared sentences across claims are encoded once per store build") {
    auto world = make_world(17, 3, 3, 2);
    // Both claims share every candidate (we pass the full id set for each).
    SearchConfig cfg;
    world.model.encode_calls.store(0);
    auto ids = all_ids(world.wiki);
    build_level1_store(world.wiki, ids, world.model, world.vocab, cfg, 0, 0);
    CHECK(world.model.encode_calls.load() == static_cast<uint64_t>(ids.size()));
}

TEST_CASE("label selection is invariant to positive rescaling") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<double, 3> d;
        for (auto& v : d) v = rng.uniform(0.0, 5.0);
        const Label base = select_label(d);
        const double c = rng.uniform(0.01, 100.0);
        std::array<double, 3> scaled = {d[0] * c, d[1] * c, d[2] * c};
        CHECK(select_label(scaled) == base);
    }
    // Ties resolve Supports < Refutes < Unverifiable.
    CHECK(select_label({1.0, 1.0, 2.0}) == Label::Supports);
    CHECK(select_label({3.0, 1.0, 1.0}) == Label::Refutes);
}

TEST_CASE("traces survive a JSONL round trip") {
    auto world = make_world(19, 4, 2, 2);
    SearchConfig cfg;
    auto traces = search_split(world.claims, world.wiki, world.model, world.vocab, cfg);
    const std::string path = "/tmp/memmatch_test_traces.jsonl";
    save_traces(traces, path);
    auto loaded = load_traces(path);
    REQUIRE(loaded.size() == traces.size());
    for (size_t i = 0; i < traces.size(); ++i) {
        CHECK(loaded[i].claim_id == traces[i].claim_id);
        CHECK(loaded[i].selected_label == traces[i].selected_label);
        CHECK(loaded[i].selected_evidence == traces[i].selected_evidence);
        CHECK(loaded[i].level3_selected_distance == traces[i].level3_selected_distance);
        REQUIRE(loaded[i].delta_level3.size() == traces[i].delta_level3.size());
        CHECK(loaded[i].delta_level3 == traces[i].delta_level3);
    }
}

TEST_CASE("search config validation") {
    SearchConfig bad;
    bad.z = 20;
    bad.k1 = 10;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = SearchConfig{};
    bad.chunk_size = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
