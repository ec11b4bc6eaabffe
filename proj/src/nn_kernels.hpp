#pragma once

// Shared per-sample forward/backward core. The serial and OpenMP batch
// kernels differ only in how they schedule samples and reduce gradients.

#include <vector>

#include "colam/nn.hpp"

namespace colam::detail {

struct SampleScratch {
    std::vector<std::vector<double>> pre;   // z_l per layer
    std::vector<std::vector<double>> post;  // relu(z_l) per hidden layer
    std::vector<double> delta;
    std::vector<double> delta_next;

    void resize_for(const std::vector<Layer>& layers);
};

struct SampleResult {
    double loss = 0.0;
    int prediction = 0;
};

// Forward + loss + backward for one sample; gradient contributions are added
// into `grads` (unscaled; callers divide by batch size after reduction).
SampleResult sample_loss_grad(const std::vector<Layer>& layers, const double* x, const double* y,
                              int num_classes, double temperature, double entropy_penalty_beta,
                              SampleScratch& scratch, Gradients& grads);

struct BatchPartial {
    double loss = 0.0;
    Gradients grads;
};

LossResult batch_loss_serial(const Network& net, const Batch& batch, double temperature,
                             double entropy_penalty_beta);
LossResult batch_loss_parallel(const Network& net, const Batch& batch, double temperature,
                               double entropy_penalty_beta);

}  // namespace colam::detail
