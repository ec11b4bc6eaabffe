#include <algorithm>
#include <cmath>
#include <utility>

#include "nn_kernels.hpp"

namespace colam::detail {

void SampleScratch::resize_for(const std::vector<Layer>& layers) {
    pre.resize(layers.size());
    post.resize(layers.size());
    std::size_t widest = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        pre[l].resize(static_cast<std::size_t>(layers[l].out_dim));
        post[l].resize(static_cast<std::size_t>(layers[l].out_dim));
        widest = std::max(widest, static_cast<std::size_t>(layers[l].out_dim));
    }
    delta.resize(widest);
    delta_next.resize(widest);
}

SampleResult sample_loss_grad(const std::vector<Layer>& layers, const double* x, const double* y,
                              int num_classes, double temperature, double entropy_penalty_beta,
                              SampleScratch& scratch, Gradients& grads) {
    const std::size_t depth = layers.size();

    // Forward, keeping pre- and post-activation values for the backward pass.
    const double* input = x;
    for (std::size_t l = 0; l < depth; ++l) {
        const Layer& layer = layers[l];
        double* z = scratch.pre[l].data();
        for (int o = 0; o < layer.out_dim; ++o) {
            const double* wrow = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
            double acc = layer.bias[static_cast<std::size_t>(o)];
            for (int i = 0; i < layer.in_dim; ++i) acc += wrow[i] * input[i];
            z[o] = acc;
        }
        if (l + 1 < depth) {
            double* a = scratch.post[l].data();
            for (int o = 0; o < layer.out_dim; ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
            input = a;
        }
    }

    // Tempered softmax on the logits (max-subtracted).
    const std::vector<double>& logits = scratch.pre[depth - 1];
    std::vector<double>& p = scratch.post[depth - 1];
    double mx = logits[0];
    for (int j = 1; j < num_classes; ++j) mx = std::max(mx, logits[static_cast<std::size_t>(j)]);
    double denom = 0.0;
    for (int j = 0; j < num_classes; ++j) {
        p[static_cast<std::size_t>(j)] = std::exp((logits[static_cast<std::size_t>(j)] - mx) / temperature);
        denom += p[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < num_classes; ++j) p[static_cast<std::size_t>(j)] /= denom;

    SampleResult res;
    for (int j = 1; j < num_classes; ++j)
        if (logits[static_cast<std::size_t>(j)] > logits[static_cast<std::size_t>(res.prediction)])
            res.prediction = j;

    double h = 0.0;
    if (entropy_penalty_beta != 0.0) h = entropy(p);
    for (int j = 0; j < num_classes; ++j)
        res.loss -= y[j] * std::log(std::max(p[static_cast<std::size_t>(j)], 1e-12));
    if (entropy_penalty_beta != 0.0) res.loss -= entropy_penalty_beta * h;

    // dL/dlogit = (p - y) / T for the cross entropy part; the entropy penalty
    // -beta*H(p) contributes beta * p_j (log p_j + H) / T.
    double* delta = scratch.delta.data();
    for (int j = 0; j < num_classes; ++j) {
        const double pj = p[static_cast<std::size_t>(j)];
        double d = (pj - y[j]) / temperature;
        if (entropy_penalty_beta != 0.0 && pj > 0.0)
            d += entropy_penalty_beta * pj * (std::log(pj) + h) / temperature;
        delta[j] = d;
    }

    // Backward.
    for (std::size_t l = depth; l-- > 0;) {
        const Layer& layer = layers[l];
        const double* below = (l == 0) ? x : scratch.post[l - 1].data();
        double* gw = grads.weights[l].data();
        double* gb = grads.bias[l].data();
        for (int o = 0; o < layer.out_dim; ++o) {
            const double d = delta[o];
            double* gwrow = gw + static_cast<std::size_t>(o) * layer.in_dim;
            for (int i = 0; i < layer.in_dim; ++i) gwrow[i] += d * below[i];
            gb[o] += d;
        }
        if (l > 0) {
            double* dn = scratch.delta_next.data();
            const double* zprev = scratch.pre[l - 1].data();
            for (int i = 0; i < layer.in_dim; ++i) {
                double acc = 0.0;
                for (int o = 0; o < layer.out_dim; ++o)
                    acc += layer.weights[static_cast<std::size_t>(o) * layer.in_dim + i] * delta[o];
                dn[i] = zprev[i] > 0.0 ? acc : 0.0;
            }
            std::swap(scratch.delta, scratch.delta_next);
            delta = scratch.delta.data();
        }
    }
    return res;
}

// Reference kernel: samples processed and accumulated strictly in order.
LossResult batch_loss_serial(const Network& net, const Batch& batch, double temperature,
                             double entropy_penalty_beta) {
    const auto& layers = net.layers();
    const std::size_t b = batch.size();

    LossResult out;
    out.grads = Gradients::zeros_like(layers);
    out.predictions.resize(b);

    SampleScratch scratch;
    scratch.resize_for(layers);
    double total = 0.0;
    for (std::size_t s = 0; s < b; ++s) {
        const auto r = sample_loss_grad(layers, batch.features.data() + s * batch.feature_dim,
                                        batch.targets.data() + s * batch.num_classes,
                                        batch.num_classes, temperature, entropy_penalty_beta,
                                        scratch, out.grads);
        total += r.loss;
        out.predictions[s] = r.prediction;
    }

    const double inv_b = 1.0 / static_cast<double>(b);
    out.loss = total * inv_b;
    for (auto& w : out.grads.weights)
        for (auto& v : w) v *= inv_b;
    for (auto& bg : out.grads.bias)
        for (auto& v : bg) v *= inv_b;
    return out;
}

}  // namespace colam::detail
