#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colam/common.hpp"

namespace colam {

// Serial is the normative mode: batch reductions accumulate strictly in
// sample order and bitwise tests pin it. Parallel runs OpenMP kernels with a
// fixed block decomposition and pairwise tree reduction, so it is itself
// reproducible across thread counts but not bitwise-equal to serial.
enum class ExecMode { serial, parallel };

struct Layer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> weights;  // out_dim x in_dim, row-major
    std::vector<double> bias;     // out_dim
};

struct Gradients {
    std::vector<std::vector<double>> weights;  // per layer, same shape as Layer::weights
    std::vector<std::vector<double>> bias;

    static Gradients zeros_like(const std::vector<Layer>& layers);
    void add(const Gradients& other);
    std::size_t param_count() const;
};

// Feed-forward rectifier network; the final layer emits raw logits.
class Network {
public:
    Network() = default;

    // He-normal initialization from the given stream.
    static Network init(int input_dim, const std::vector<int>& hidden_widths, int num_classes,
                        RngStream& rng);

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    int input_dim() const { return layers_.front().in_dim; }
    int output_dim() const { return layers_.back().out_dim; }

    // Logits for a single sample.
    std::vector<double> forward(const double* x) const;
    // Activation feeding the final linear layer (requires >= 2 layers).
    std::vector<double> penultimate(const double* x) const;

    void check_finite(const std::string& context) const;

private:
    std::vector<Layer> layers_;
};

struct Batch {
    int feature_dim = 0;
    int num_classes = 0;
    std::vector<double> features;  // B x feature_dim
    std::vector<double> targets;   // B x num_classes, rows are probability vectors

    std::size_t size() const {
        return feature_dim > 0 ? features.size() / static_cast<std::size_t>(feature_dim) : 0;
    }
    // Each target row nonnegative and summing to 1 within 1e-9.
    void validate() const;
};

struct OptimizerState {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::vector<std::vector<double>> velocity_w;  // shape-matched to the network
    std::vector<std::vector<double>> velocity_b;

    static OptimizerState for_network(const Network& net, double lr, double momentum,
                                      double weight_decay);
};

// softmax(z / T), max-subtracted for stability.
std::vector<double> softmax_tempered(const std::vector<double>& logits, double temperature);

// -sum_j y_j log max(p_j, 1e-12)
double cross_entropy_soft(const std::vector<double>& y, const std::vector<double>& p);

// Shannon entropy -sum p log p (natural log, 0 log 0 = 0).
double entropy(const std::vector<double>& p);

struct LossResult {
    double loss = 0.0;
    Gradients grads;
    std::vector<int> predictions;  // argmax per sample, lowest index on ties
};

// Mean tempered cross entropy over the batch plus its gradient, by
// reverse-mode backprop. entropy_penalty_beta > 0 adds -beta * H(p) per
// sample (confidence penalty); 0 is the plain loss.
LossResult tempered_loss(const Network& net, const Batch& batch, double temperature,
                         ExecMode mode = ExecMode::serial, double entropy_penalty_beta = 0.0);

// g' = g + weight_decay * p; v <- momentum * v + g'; p <- p - lr * v.
// Throws NumericError naming the layer on non-finite gradients.
void sgd_step(Network& net, const Gradients& grads, OptimizerState& opt);

struct GradCheckReport {
    double max_rel_error = 0.0;
    int worst_layer = -1;
    std::size_t worst_index = 0;  // flat index within the layer (weights then bias)
    bool pass = false;
};

// Central-difference check of every parameter against the backprop gradient.
// Intended for small nets (<= 5k parameters).
GradCheckReport grad_check(const Network& net, const Batch& batch, double temperature,
                           double step, double tolerance);
// Same comparison against a caller-supplied analytic gradient (fault injection).
GradCheckReport grad_check_against(const Network& net, const Batch& batch, double temperature,
                                   double step, double tolerance, const Gradients& analytic);

// Parameter checkpoint: little-endian, magic "CLNN", version, layer count,
// per-layer dims, then raw f64 data (weights then bias per layer).
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);
std::string network_sidecar_json(std::uint64_t seed, int epoch, const std::string& config_hash);

}  // namespace colam
