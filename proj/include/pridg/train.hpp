#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pridg/augment.hpp"
#include "pridg/model.hpp"
#include "pridg/sim.hpp"

namespace pridg::train {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;  // even: half source, half augmented counterparts
    double lr = 0.01;
    double momentum = 0.9;
    double alpha = 1.0;
    double beta = 0.1;
    double beta_warmup_frac = 0.2;  // beta ramps linearly over this fraction of training
    int k_generators = 3;
    bool resample_bank_each_epoch = true;
    augment::GeneratorRanges ranges;
    int seq_len = 128;
    std::uint64_t seed = 1;
    std::string checkpoint_dir;  // empty: no checkpoints written
    int fewshot_epochs = 8;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

struct EpochStats {
    int epoch = 0;
    double label_ce = 0.0;
    double align = 0.0;
    double domain_ce = 0.0;
    double total = 0.0;
    double beta_effective = 0.0;
    double train_acc = 0.0;
    double domain_acc = 0.0;
};

struct TrainStats {
    std::vector<EpochStats> epochs;
};

struct Batch {
    nn::Tensor x;  // (B, 1, L), normalized
    nn::Tensor y;  // (B, n_classes) one-hot
    nn::Tensor z;  // (B, n_domains) one-hot
    std::vector<std::pair<int, int>> pairs;  // (source row, augmented row)
    std::vector<int> labels;
    std::vector<int> domains;
};

// Normalized (B,1,L) input tensor from dataset rows.
nn::Tensor samples_to_tensor(const sim::Dataset& ds, const std::vector<int>& indices,
                             double norm_scale);

// One minibatch: b/2 source samples (by a seed-derived epoch permutation) plus
// their augmented counterparts, generator chosen round-robin per step. With an
// empty augmented set the batch is b source samples (ERM mode).
Batch make_minibatch(const sim::Dataset& s, const sim::Dataset& s_plus, int b, std::uint64_t seed,
                     int step, int n_generators, const model::ModelConfig& mcfg);

// Steps per epoch for the given mode (covers every source sample exactly once).
int steps_per_epoch(std::size_t n_source, int batch_size, bool paired);

// Epoch loop: re-samples the generator bank each epoch (when configured),
// rebuilds S+, and runs compute-loss / backward / SGD with gradient-reversal
// semantics. `bank` supplies K and ids; empty bank means plain ERM training.
// Aborts with a diagnostic on non-finite loss.
TrainStats run_training(model::DgModel& m, const sim::Dataset& s, const augment::GeneratorBank& bank,
                        const TrainConfig& cfg);

// Continues training with n labeled target samples per class mixed into the
// source set at lr/10 for a few epochs. n = 0 is the identity.
TrainStats fewshot_finetune(model::DgModel& m, const sim::Dataset& source,
                            const sim::Dataset& target_samples, int n_per_class,
                            const TrainConfig& cfg);

// Training log line: epoch plus loss terms and accuracies, key=value format.
std::string format_epoch_stats(const EpochStats& e);

}  // namespace pridg::train
