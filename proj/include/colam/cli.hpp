#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colam/data.hpp"
#include "colam/training.hpp"

namespace colam::cli {

struct DatasetSpec {
    std::string type;  // "synthetic" | "triblob" | "idx" | "cifar10" | "cifar100"
    SyntheticSpec synthetic;
    std::string train_images, train_labels, test_images, test_labels;  // idx
    std::vector<std::string> cifar_train, cifar_test;                  // cifar
    bool normalize = false;

    // Synthetic seed 0 means "derive from the training seed", so sweeping
    // seeds redraws the data; a nonzero seed pins the dataset.
    Dataset build(std::uint64_t train_seed, ChannelStats* stats_out = nullptr) const;
    void validate() const;
};

struct SweepSpec {
    std::vector<int> update_intervals;
    std::vector<int> peer_counts;
    std::vector<double> temperatures;
    std::vector<std::uint64_t> seeds;
    bool declared = false;
};

// One JSON document per experiment; flags only override scalar fields.
struct ExperimentConfig {
    TrainConfig train;
    DatasetSpec dataset;
    SweepSpec sweep;

    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    std::string canonical_json() const;
    std::string hash() const;
};

// runs/<id> and analysis/<id> live under the output root (flag --out,
// else $COLAM_OUT, else the working directory).
std::string default_out_root();

int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace colam::cli
