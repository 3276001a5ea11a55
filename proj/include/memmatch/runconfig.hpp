#pragma once

#include <string>
#include <vector>

#include "memmatch/corpus.hpp"
#include "memmatch/model.hpp"
#include "memmatch/searcher.hpp"
#include "memmatch/trainer.hpp"

namespace memmatch {

/// Everything a run needs, merged from a JSON config file and
/// flag overrides (flags win). Unknown keys are rejected; validation
/// reports every violated key at once.
struct RunConfig {
    uint64_t seed = 7;
    int threads = 1;
    std::string output_dir = "runs";

    struct Corpus {
        std::string wiki;
        std::string train;
        std::string dev;
        std::string test;
        std::string format = "synthetic";  // or "fever-jsonl"
    } corpus;

    ModelConfig model;
    SearchConfig search{100, 5, 8192, "", 1};  // inference-time defaults
    TrainConfig train;
    SyntheticConfig synth;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json_text() const;

    ClaimFormat claim_format() const;
    void finalize();  // propagate seed/threads into nested configs
};

}  // namespace memmatch
