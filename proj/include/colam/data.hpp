#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "colam/common.hpp"

namespace colam {

enum class Split : std::uint8_t { train = 0, test = 1 };

// Spatial layout of a flattened feature vector, channel-planar (ch planes of
// h*w pixels each, matching the CIFAR binary layout).
struct SpatialShape {
    int height = 0;
    int width = 0;
    int channels = 0;
};

struct Dataset {
    int num_classes = 0;
    int feature_dim = 0;
    std::vector<double> features;  // N x feature_dim, row-major
    std::vector<int> labels;       // N, values in [0, num_classes)
    std::vector<Split> split;      // N
    std::optional<SpatialShape> spatial;
    std::string provenance;

    std::size_t size() const { return labels.size(); }
    const double* sample(std::size_t i) const { return features.data() + i * feature_dim; }

    std::vector<std::size_t> indices_of(Split s) const;
    // Indices of a class within a split, ascending.
    std::vector<std::size_t> class_indices(int cls, Split s) const;

    // Throws unless every class appears at least once in the train split,
    // labels are in range and features finite.
    void validate() const;
};

// Placement of class means: either explicit vectors, or groups that place
// their classes deterministically around a shared center.
struct MeanGroup {
    std::vector<double> center;
    int count = 0;
    double spread = 0.0;
};

struct SyntheticSpec {
    int num_classes = 0;
    int train_per_class = 0;
    int test_per_class = 0;
    int feature_dim = 0;
    std::vector<std::vector<double>> means;  // explicit layout (one per class), or
    std::vector<MeanGroup> groups;           // similarity-tree layout
    double stddev = 1.0;
    double label_noise = 0.0;  // fraction of train labels resampled uniformly
    std::uint64_t seed = 0;

    // The default benchmark: 3 classes in 32 dims, two means at distance 2
    // and one at distance 10, sigma 1.2, 10% train label noise.
    static SyntheticSpec triblob(std::uint64_t seed);

    // Resolved class means (explicit, or expanded from groups).
    std::vector<std::vector<double>> resolve_means() const;
    void validate() const;
};

Dataset gen_synthetic(const SyntheticSpec& spec);

// IDX (big-endian) image + label pair, pixels scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR binary: each record is 1 label byte (or coarse+fine pair when
// num_classes==100) followed by 3072 pixel bytes.
Dataset load_cifar_bin(const std::vector<std::string>& train_paths,
                       const std::vector<std::string>& test_paths, int num_classes);

// Pad 4, random crop back to original size, horizontal flip with p=0.5.
// `rng` is the per-sample sub-stream. Throws ConfigError for non-spatial data.
std::vector<double> augment(const std::vector<double>& feats, const SpatialShape& shape,
                            RngStream& rng);
void augment_into(const double* feats, double* out, const SpatialShape& shape, RngStream& rng);

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// Per-channel statistics over the train split (one channel for vector data).
ChannelStats compute_train_stats(const Dataset& ds);
void normalize_dataset(Dataset& ds, const ChannelStats& stats);

std::string channel_stats_to_json(const ChannelStats& stats);

}  // namespace colam
