#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nn_kernels.hpp"

namespace colam::detail {

namespace {

// Samples are split into fixed-size blocks independent of the thread count;
// each block accumulates sequentially in sample order, and blocks combine by
// a pairwise tree in a fixed schedule. Results are therefore identical for
// any number of threads.
constexpr std::size_t kBlockSize = 16;

}  // namespace

LossResult batch_loss_parallel(const Network& net, const Batch& batch, double temperature,
                               double entropy_penalty_beta) {
    const auto& layers = net.layers();
    const std::size_t b = batch.size();
    const std::size_t num_blocks = (b + kBlockSize - 1) / kBlockSize;

    LossResult out;
    out.predictions.resize(b);

    std::vector<BatchPartial> partials(num_blocks);

#pragma omp parallel for schedule(static)
    for (long long blk = 0; blk < static_cast<long long>(num_blocks); ++blk) {
        const std::size_t begin = static_cast<std::size_t>(blk) * kBlockSize;
        const std::size_t end = std::min(begin + kBlockSize, b);
        BatchPartial& part = partials[static_cast<std::size_t>(blk)];
        part.grads = Gradients::zeros_like(layers);
        SampleScratch scratch;
        scratch.resize_for(layers);
        for (std::size_t s = begin; s < end; ++s) {
            const auto r = sample_loss_grad(layers, batch.features.data() + s * batch.feature_dim,
                                            batch.targets.data() + s * batch.num_classes,
                                            batch.num_classes, temperature, entropy_penalty_beta,
                                            scratch, part.grads);
            part.loss += r.loss;
            out.predictions[s] = r.prediction;
        }
    }

    // Pairwise tree reduction over blocks: adjacent pairs per round, odd
    // leftover carried through. The tree depends only on num_blocks.
    std::size_t n = num_blocks;
    while (n > 1) {
        const std::size_t half = n / 2;
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(half); ++i) {
            auto& dst = partials[static_cast<std::size_t>(i) * 2];
            const auto& src = partials[static_cast<std::size_t>(i) * 2 + 1];
            dst.loss += src.loss;
            dst.grads.add(src.grads);
        }
        // Compact survivors: pair sums sit at even slots, leftover at n-1.
        for (std::size_t i = 1; i < half; ++i) partials[i] = std::move(partials[i * 2]);
        if (n % 2 == 1) partials[half] = std::move(partials[n - 1]);
        n = half + n % 2;
    }

    const double inv_b = 1.0 / static_cast<double>(b);
    out.loss = partials[0].loss * inv_b;
    out.grads = std::move(partials[0].grads);
    for (auto& w : out.grads.weights)
        for (auto& v : w) v *= inv_b;
    for (auto& bg : out.grads.bias)
        for (auto& v : bg) v *= inv_b;
    return out;
}

}  // namespace colam::detail
