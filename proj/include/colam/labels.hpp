#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colam/common.hpp"
#include "colam/data.hpp"
#include "colam/nn.hpp"

namespace colam {

// One shared soft label per class: C rows of C probabilities.
struct SoftLabelTable {
    int num_classes = 0;
    std::vector<double> rows;  // C x C, row-major
    int stage = 0;
    double temperature = 1.0;

    const double* row(int cls) const { return rows.data() + static_cast<std::size_t>(cls) * num_classes; }
    static SoftLabelTable one_hot(int num_classes);
    void validate() const;

    // CSV: `class,stage,T,p0..p{C-1}`, %.17g values for lossless round-trip.
    std::string to_csv(const std::string& header_comment = "") const;
    static SoftLabelTable from_csv(const std::string& text);

    std::uint64_t content_hash() const;
};

struct PeerSet {
    int class_id = 0;
    std::vector<std::size_t> indices;
    std::uint64_t draw_seed = 0;
};

enum class BaselineVariant { hard, smooth, disturb, confidence_penalty };

struct BaselineSpec {
    BaselineVariant variant = BaselineVariant::hard;
    double epsilon = 0.1;  // label smoothing
    double alpha = 0.1;    // disturb rate
    double beta = 0.1;     // confidence penalty weight

    void validate() const;
    static BaselineVariant variant_from_name(const std::string& name);
    static std::string variant_name(BaselineVariant v);
};

// Hot entry (1-eps)+eps/C, others eps/C.
std::vector<double> label_smooth(int label, double epsilon, int num_classes);

// With probability alpha, a uniform draw over all C classes (the correct one
// included), so the one-hot expectation matches label_smooth(label, alpha, C).
int disturb_label(int label, double alpha, int num_classes, RngStream& rng);

// -beta * H(p); minimizing the total loss raises prediction entropy.
double confidence_penalty(const std::vector<double>& p, double beta);

// 0.5 * ||a - b||^2
double half_sq_dist(const std::vector<double>& a, const std::vector<double>& b);

// min(k, class size) distinct train indices of the class, uniform without
// replacement; k >= class size returns the whole class in ascending order.
PeerSet get_peer_samples(int cls, int k, const Dataset& dataset, std::uint64_t draw_seed);

// For each class: draw peers, forward un-augmented inputs, average raw
// logits, temper-softmax the mean. Per-class draws use sub-streams of
// `seed`, so classes are order-independent (and parallelized).
SoftLabelTable update_soft_labels(const Network& net, const Dataset& dataset, int k,
                                  double temperature, int stage, std::uint64_t seed,
                                  ExecMode mode = ExecMode::serial);

}  // namespace colam
