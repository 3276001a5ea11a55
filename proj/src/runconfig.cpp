#include "memmatch/runconfig.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"
#include "memmatch/io.hpp"

namespace memmatch {

using nlohmann::json;

namespace {

void collect_unknown_keys(const json& j, const std::set<std::string>& allowed,
                          const std::string& prefix, std::vector<std::string>& errors) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) errors.push_back("unknown config key: " + prefix + key);
    }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
    }

    std::vector<std::string> errors;
    collect_unknown_keys(j, {"seed", "threads", "output_dir", "corpus", "model", "search", "train", "synth"},
                         "", errors);
    if (j.contains("corpus"))
        collect_unknown_keys(j["corpus"], {"wiki", "train", "dev", "test", "format"}, "corpus.", errors);
    if (j.contains("model"))
        collect_unknown_keys(j["model"], {"d_ctx", "d_emb", "vocab_size", "filters", "blocks", "max_len"},
                             "model.", errors);
    if (j.contains("search"))
        collect_unknown_keys(j["search"], {"k1", "z", "chunk_size", "cache_dir"}, "search.", errors);
    if (j.contains("train"))
        collect_unknown_keys(j["train"],
                             {"epochs_max", "k1_schedule", "z", "patience", "freeze_encoder_after",
                              "lr_encoder", "lr_memory", "batch_claims"},
                             "train.", errors);
    if (j.contains("synth"))
        collect_unknown_keys(j["synth"],
                             {"train_claims", "dev_claims", "test_claims", "perturbed_dev_claims",
                              "perturbed_test_claims"},
                             "synth.", errors);
    if (!errors.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::runtime_error(msg);
    }

    RunConfig cfg;
    take(j, "seed", cfg.seed);
    take(j, "threads", cfg.threads);
    take(j, "output_dir", cfg.output_dir);
    if (j.contains("corpus")) {
        const auto& c = j["corpus"];
        take(c, "wiki", cfg.corpus.wiki);
        take(c, "train", cfg.corpus.train);
        take(c, "dev", cfg.corpus.dev);
        take(c, "test", cfg.corpus.test);
        take(c, "format", cfg.corpus.format);
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        take(m, "d_ctx", cfg.model.d_ctx);
        take(m, "d_emb", cfg.model.d_emb);
        take(m, "vocab_size", cfg.model.vocab_size);
        take(m, "filters", cfg.model.filters);
        take(m, "blocks", cfg.model.blocks);
        if (m.contains("max_len")) {
            auto lens = m.at("max_len").get<std::vector<int>>();
            if (lens.size() != 3) throw std::runtime_error("model.max_len must have 3 entries");
            for (int l = 0; l < 3; ++l) cfg.model.max_len[static_cast<size_t>(l)] = lens[static_cast<size_t>(l)];
        }
    }
    if (j.contains("search")) {
        const auto& s = j["search"];
        take(s, "k1", cfg.search.k1);
        take(s, "z", cfg.search.z);
        take(s, "chunk_size", cfg.search.chunk_size);
        take(s, "cache_dir", cfg.search.cache_dir);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        take(t, "epochs_max", cfg.train.epochs_max);
        take(t, "k1_schedule", cfg.train.k1_schedule);
        take(t, "z", cfg.train.z);
        take(t, "patience", cfg.train.patience);
        take(t, "freeze_encoder_after", cfg.train.freeze_encoder_after);
        take(t, "lr_encoder", cfg.train.lr_encoder);
        take(t, "lr_memory", cfg.train.lr_memory);
        take(t, "batch_claims", cfg.train.batch_claims);
    }
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        take(s, "train_claims", cfg.synth.train_claims);
        take(s, "dev_claims", cfg.synth.dev_claims);
        take(s, "test_claims", cfg.synth.test_claims);
        take(s, "perturbed_dev_claims", cfg.synth.perturbed_dev_claims);
        take(s, "perturbed_test_claims", cfg.synth.perturbed_test_claims);
    }
    if (cfg.corpus.format != "synthetic" && cfg.corpus.format != "fever-jsonl")
        throw std::runtime_error("corpus.format must be \"synthetic\" or \"fever-jsonl\"");
    cfg.finalize();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) { return from_json_text(read_file(path)); }

void RunConfig::finalize() {
    model.seed = seed;
    train.seed = seed;
    synth.seed = seed;
    search.threads = threads;
}

std::string RunConfig::to_json_text() const {
    json j;
    j["seed"] = seed;
    j["threads"] = threads;
    j["output_dir"] = output_dir;
    j["corpus"] = {{"wiki", corpus.wiki}, {"train", corpus.train},   {"dev", corpus.dev},
                   {"test", corpus.test}, {"format", corpus.format}};
    j["model"] = {{"d_ctx", model.d_ctx},
                  {"d_emb", model.d_emb},
                  {"vocab_size", model.vocab_size},
                  {"filters", model.filters},
                  {"blocks", model.blocks},
                  {"max_len", std::vector<int>(model.max_len.begin(), model.max_len.end())}};
    j["search"] = {{"k1", search.k1},
                   {"z", search.z},
                   {"chunk_size", search.chunk_size},
                   {"cache_dir", search.cache_dir}};
    j["train"] = {{"epochs_max", train.epochs_max},
                  {"k1_schedule", train.k1_schedule},
                  {"z", train.z},
                  {"patience", train.patience},
                  {"freeze_encoder_after", train.freeze_encoder_after},
                  {"lr_encoder", train.lr_encoder},
                  {"lr_memory", train.lr_memory},
                  {"batch_claims", train.batch_claims}};
    j["synth"] = {{"train_claims", synth.train_claims},
                  {"dev_claims", synth.dev_claims},
                  {"test_claims", synth.test_claims},
                  {"perturbed_dev_claims", synth.perturbed_dev_claims},
                  {"perturbed_test_claims", synth.perturbed_test_claims}};
    return j.dump(2) + "\n";
}

ClaimFormat RunConfig::claim_format() const {
    return corpus.format == "fever-jsonl" ? ClaimFormat::FeverJsonl : ClaimFormat::Synthetic;
}

}  // namespace memmatch
