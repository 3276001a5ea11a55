#pragma once

#include <functional>
#include <string>
#include <vector>

#include "memmatch/searcher.hpp"

namespace memmatch {

/// Target 0 marks a correct query/support match, 1 an incorrect one.
struct TrainingInstance {
    FormattedSequence query;
    FormattedSequence support;
    int level = 0;
    int target = 0;
};

struct TrainConfig {
    int epochs_max = 15;                  // per phase
    std::vector<int> k1_schedule = {10, 30};
    int z = 3;
    int patience = 4;
    int freeze_encoder_after = 6;  // unfrozen encoder epochs before a permanent freeze
    double lr_encoder = 0.05;
    double lr_memory = 0.5;
    int batch_claims = 9;
    uint64_t seed = 1;

    void validate() const;
};

struct BceResult {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d delta, length M
};

/// Mean over filters of -Y log sigmoid(delta) - (1-Y) log(1 - sigmoid(delta)),
/// evaluated in log-space (stable for delta up to 1e4 and beyond).
BceResult bce_loss(const std::vector<double>& delta, int target);

/// Positive and hard-negative instances for one claim from its trace.
/// Verifiable claims produce level-1 positives per selected gold sentence
/// plus one hard negative, a level-2 positive from the leading gold
/// sentence plus one hard negative, and level-3 prediction and reference
/// triples (one positive, two label flips). Unverifiable claims produce
/// only the level-3 prediction triple.
std::vector<TrainingInstance> build_instances(const ClaimRecord& claim, const SearchTrace& trace,
                                              const WikiStore& wiki, const ModelConfig& mcfg);

struct EpochMetrics {
    int epoch = 0;  // global, across phases
    int phase = 0;
    int k1 = 0;
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
    double dev_fever = 0.0;
    bool encoder_frozen = true;
    bool is_best = false;
};

struct TrainResult {
    Model best_model;
    std::vector<EpochMetrics> history;
    int best_epoch = 0;
    double best_accuracy = 0.0;
    bool diverged = false;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// The epoch loop: per-epoch search for hard negatives, mini-batched SGD
/// on the unfrozen group, dev scoring, best-checkpoint selection, patience
/// stopping and the k1 schedule restart.
TrainResult train(const std::vector<ClaimRecord>& train_claims,
                  const std::vector<ClaimRecord>& dev_claims, const WikiStore& wiki, Model model,
                  const Vocabulary& vocab, const TrainConfig& tcfg, const SearchConfig& scfg,
                  const EpochCallback& on_epoch = nullptr);

/// Single gradient step over a batch of instances; returns the mean loss.
/// Exposed for tests; `train` drives it.
double train_step(Model& model, const Vocabulary& vocab,
                  const std::vector<TrainingInstance>& batch, ModelGrads& grads, double lr_encoder,
                  double lr_memory, bool encoder_frozen, bool memory_frozen);

std::string metrics_csv(const std::vector<EpochMetrics>& history);

}  // namespace memmatch
