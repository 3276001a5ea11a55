#include <stdexcept>

#include "doctest.h"
#include "memmatch/io.hpp"
#include "memmatch/model.hpp"
#include "memmatch/runconfig.hpp"
#include "memmatch/store.hpp"

using namespace memmatch;

TEST_CASE("checkpoint serialization round trips bit-exactly") {
    ModelConfig cfg;
    cfg.d_ctx = 6;
    cfg.d_emb = 4;
    cfg.vocab_size = 40;
    cfg.filters = 5;
    cfg.blocks = 2;
    cfg.max_len = {8, 10, 12};
    cfg.seed = 77;
    Model model = Model::init(cfg);

    const std::string bytes = model.serialize();
    Model loaded = Model::deserialize(bytes);
    CHECK(loaded.serialize() == bytes);
    CHECK(loaded.cfg.d_ctx == 6);
    CHECK(loaded.cfg.max_len[2] == 12);
    CHECK(loaded.cfg.seed == 77);
    CHECK(loaded.checksum() == model.checksum());

    const std::string path = "/tmp/memmatch_test_ckpt.mmck";
    model.save(path);
    CHECK(Model::load(path).serialize() == bytes);
}

TEST_CASE("checkpoint values are f32-quantized by design") {
    ModelConfig cfg;
    cfg.d_ctx = 4;
    cfg.d_emb = 2;
    cfg.vocab_size = 8;
    cfg.filters = 3;
    cfg.blocks = 1;
    cfg.max_len = {4, 4, 4};
    Model model = Model::init(cfg);
    model.enc.out_b[0] = 0.1;  // not representable in f32
    Model loaded = Model::deserialize(model.serialize());
    CHECK(loaded.enc.out_b[0] == static_cast<double>(static_cast<float>(0.1)));
}

TEST_CASE("corrupt checkpoints are rejected") {
    ModelConfig cfg;
    cfg.d_ctx = 4;
    cfg.d_emb = 2;
    cfg.vocab_size = 8;
    cfg.filters = 3;
    cfg.blocks = 1;
    cfg.max_len = {4, 4, 4};
    Model model = Model::init(cfg);
    std::string bytes = model.serialize();

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(Model::deserialize(bad_magic), std::runtime_error);

    std::string truncated = bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(Model::deserialize(truncated), std::runtime_error);

    std::string trailing = bytes + "junk";
    CHECK_THROWS_AS(Model::deserialize(trailing), std::runtime_error);
}

TEST_CASE("memory cache files reject foreign content") {
    const std::string path = "/tmp/memmatch_test_badstore.mvec";
    write_file_atomic(path, "not a cache file at all");
    CHECK_THROWS_AS(load_store(path), std::runtime_error);
    CHECK_FALSE(store_cache_compatible(path, 1, 4));
}

TEST_CASE("run config parses, validates and serializes") {
    const std::string text = R"({
        "seed": 11,
        "threads": 2,
        "corpus": {"wiki": "w.tsv", "train": "t.jsonl", "dev": "d.jsonl", "test": "x.jsonl"},
        "model": {"d_ctx": 24, "max_len": [30, 60, 90]},
        "search": {"k1": 50, "z": 4},
        "train": {"epochs_max": 5, "k1_schedule": [5, 10]}
    })";
    auto cfg = RunConfig::from_json_text(text);
    CHECK(cfg.seed == 11);
    CHECK(cfg.model.d_ctx == 24);
    CHECK(cfg.model.seed == 11);  // propagated
    CHECK(cfg.search.k1 == 50);
    CHECK(cfg.search.threads == 2);
    CHECK(cfg.train.k1_schedule == std::vector<int>{5, 10});
    CHECK(cfg.model.max_len[2] == 90);

    // Round trip through the serialized form.
    auto again = RunConfig::from_json_text(cfg.to_json_text());
    CHECK(again.to_json_text() == cfg.to_json_text());
}

TEST_CASE("run config rejects unknown keys, naming all of them") {
    const std::string text = R"({
        "sead": 11,
        "model": {"dctx": 24},
        "search": {"k_one": 50}
    })";
    try {
        RunConfig::from_json_text(text);
        FAIL("expected validation failure");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sead") != std::string::npos);
        CHECK(msg.find("model.dctx") != std::string::npos);
        CHECK(msg.find("search.k_one") != std::string::npos);
    }
}

TEST_CASE("run config rejects bad formats") {
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"corpus": {"format": "csv"}})"), std::runtime_error);
    CHECK_THROWS_AS(RunConfig::from_json_text("{not json"), std::runtime_error);
}
