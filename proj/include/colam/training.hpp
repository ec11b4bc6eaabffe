#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colam/data.hpp"
#include "colam/labels.hpp"
#include "colam/nn.hpp"

namespace colam {

struct LrSchedule {
    double initial = 0.1;
    double decay_factor = 0.1;
    std::vector<double> milestones = {0.5, 0.75};  // fractions of total epochs
};

struct TrainConfig {
    int stages = 4;             // m
    int epochs_per_stage = 10;  // t; total epochs = m * t
    double temperature = 1.5;   // T, applied in the training loss in all stages
    int peer_count = 10;        // k
    int batch_size = 64;
    LrSchedule lr;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::uint64_t seed = 1;
    bool deterministic = true;  // serial normative kernels; false selects OpenMP
    std::vector<int> hidden_widths = {32, 32};
    bool augment = false;
    BaselineSpec baseline;

    int total_epochs() const { return stages * epochs_per_stage; }
    double lr_at(int epoch) const;  // epoch is 1-based
    ExecMode mode() const { return deterministic ? ExecMode::serial : ExecMode::parallel; }

    void validate(const Dataset* dataset = nullptr) const;

    std::string to_json() const;  // canonical (sorted keys)
    static TrainConfig from_json(const std::string& text);
    std::string hash() const;  // fnv1a64 of the canonical JSON, 16 hex chars
};

struct EpochRow {
    int epoch = 0;
    int stage = 0;
    double train_loss = 0.0;
    double train_top1 = 0.0;
    double test_loss = 0.0;
    double test_top1 = 0.0;
    double train_seconds = 0.0;
    double test_seconds = 0.0;
};

struct RunRecord {
    std::vector<EpochRow> epochs;
    std::vector<SoftLabelTable> checkpoints;  // one per completed stage (COLAM only)
    Network final_net;
    std::string config_hash;
    std::uint64_t seed = 0;
    bool deterministic = true;

    double final_test_top1() const { return epochs.back().test_top1; }

    // `epoch,stage,split,loss,top1,seconds` with a # config_hash comment.
    // Deterministic records serialize seconds as 0 so identical trajectories
    // give identical bytes.
    std::string metrics_csv() const;
};

struct EvalResult {
    double top1 = 0.0;
    double mean_loss = 0.0;
};

// Argmax vs ground truth (lowest index wins ties); loss is tempered cross
// entropy against one-hot labels. No augmentation, deterministic order.
EvalResult evaluate(const Network& net, const Dataset& dataset, Split split, double temperature);

// Algorithm: stage 1 trains on hard labels; each stage boundary recomputes
// the soft-label table from current parameters (final stage included); stages
// 2..m train on each sample's class row of the current table.
RunRecord run_colam(const TrainConfig& config, const Dataset& dataset);

RunRecord run_baseline(const BaselineSpec& spec, const TrainConfig& config, const Dataset& dataset);

// Fresh network trained from scratch with every target frozen to the
// checkpoint row of its class; returns final test top-1.
double expected_accuracy(const SoftLabelTable& checkpoint, const TrainConfig& config,
                         const Dataset& dataset);
// Same, but exposing the whole record (tests compare against baselines).
RunRecord run_frozen_table(const SoftLabelTable& checkpoint, const TrainConfig& config,
                           const Dataset& dataset);

}  // namespace colam
