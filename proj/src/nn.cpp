#include "colam/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "nn_kernels.hpp"

namespace colam {

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

Gradients Gradients::zeros_like(const std::vector<Layer>& layers) {
    Gradients g;
    g.weights.reserve(layers.size());
    g.bias.reserve(layers.size());
    for (const auto& l : layers) {
        g.weights.emplace_back(l.weights.size(), 0.0);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void Gradients::add(const Gradients& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        double* w = weights[l].data();
        const double* ow = other.weights[l].data();
        for (std::size_t i = 0; i < weights[l].size(); ++i) w[i] += ow[i];
        double* b = bias[l].data();
        const double* ob = other.bias[l].data();
        for (std::size_t i = 0; i < bias[l].size(); ++i) b[i] += ob[i];
    }
}

std::size_t Gradients::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + bias[l].size();
    return n;
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

Network Network::init(int input_dim, const std::vector<int>& hidden_widths, int num_classes,
                      RngStream& rng) {
    if (input_dim <= 0 || num_classes <= 0)
        throw ConfigError("network: input_dim and num_classes must be positive");
    for (int w : hidden_widths)
        if (w <= 0) throw ConfigError("network: hidden widths must be positive");
    Network net;
    int in = input_dim;
    std::vector<int> outs(hidden_widths);
    outs.push_back(num_classes);
    for (int out : outs) {
        Layer layer;
        layer.in_dim = in;
        layer.out_dim = out;
        layer.weights.resize(static_cast<std::size_t>(in) * out);
        layer.bias.assign(static_cast<std::size_t>(out), 0.0);
        const double scale = std::sqrt(2.0 / in);
        for (auto& w : layer.weights) w = scale * rng.normal();
        net.layers_.push_back(std::move(layer));
        in = out;
    }
    return net;
}

std::vector<double> Network::forward(const double* x) const {
    std::vector<double> cur(x, x + layers_.front().in_dim);
    std::vector<double> next;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        next.assign(static_cast<std::size_t>(layer.out_dim), 0.0);
        for (int o = 0; o < layer.out_dim; ++o) {
            const double* wrow = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
            double acc = layer.bias[static_cast<std::size_t>(o)];
            for (int i = 0; i < layer.in_dim; ++i) acc += wrow[i] * cur[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = acc;
        }
        if (l + 1 < layers_.size())
            for (auto& v : next) v = v > 0.0 ? v : 0.0;
        cur.swap(next);
    }
    return cur;
}

std::vector<double> Network::penultimate(const double* x) const {
    if (layers_.size() < 2) throw Error("network has no penultimate layer (single layer)");
    std::vector<double> cur(x, x + layers_.front().in_dim);
    std::vector<double> next;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        next.assign(static_cast<std::size_t>(layer.out_dim), 0.0);
        for (int o = 0; o < layer.out_dim; ++o) {
            const double* wrow = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
            double acc = layer.bias[static_cast<std::size_t>(o)];
            for (int i = 0; i < layer.in_dim; ++i) acc += wrow[i] * cur[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = acc > 0.0 ? acc : 0.0;
        }
        cur.swap(next);
    }
    return cur;
}

void Network::check_finite(const std::string& context) const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        for (double w : layers_[l].weights)
            if (!std::isfinite(w))
                throw NumericError(context + ": non-finite weight in layer " + std::to_string(l));
        for (double b : layers_[l].bias)
            if (!std::isfinite(b))
                throw NumericError(context + ": non-finite bias in layer " + std::to_string(l));
    }
}

// ---------------------------------------------------------------------------
// Batch
// ---------------------------------------------------------------------------

void Batch::validate() const {
    if (feature_dim <= 0 || num_classes <= 0)
        throw ShapeError("batch: dimensions must be positive");
    const std::size_t b = size();
    if (features.size() != b * static_cast<std::size_t>(feature_dim) ||
        targets.size() != b * static_cast<std::size_t>(num_classes))
        throw ShapeError("batch: feature/target sizes inconsistent");
    for (std::size_t s = 0; s < b; ++s) {
        double sum = 0.0;
        for (int j = 0; j < num_classes; ++j) {
            const double t = targets[s * num_classes + j];
            if (t < 0.0) throw ShapeError("batch: negative target entry");
            sum += t;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ShapeError("batch: target row " + std::to_string(s) + " sums to " +
                             std::to_string(sum));
    }
}

OptimizerState OptimizerState::for_network(const Network& net, double lr, double momentum,
                                           double weight_decay) {
    if (lr <= 0.0) throw ConfigError("optimizer: learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("optimizer: momentum must be in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("optimizer: weight decay must be nonnegative");
    OptimizerState opt;
    opt.learning_rate = lr;
    opt.momentum = momentum;
    opt.weight_decay = weight_decay;
    for (const auto& l : net.layers()) {
        opt.velocity_w.emplace_back(l.weights.size(), 0.0);
        opt.velocity_b.emplace_back(l.bias.size(), 0.0);
    }
    return opt;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

std::vector<double> softmax_tempered(const std::vector<double>& logits, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("softmax: temperature must be positive");
    if (logits.empty()) throw std::invalid_argument("softmax: empty logit vector");
    for (double z : logits)
        if (!std::isfinite(z)) throw std::invalid_argument("softmax: non-finite logit");
    std::vector<double> out(logits.size());
    double mx = logits[0];
    for (double z : logits) mx = std::max(mx, z);
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = std::exp((logits[j] - mx) / temperature);
        denom += out[j];
    }
    for (auto& v : out) v /= denom;
    return out;
}

double cross_entropy_soft(const std::vector<double>& y, const std::vector<double>& p) {
    if (y.size() != p.size()) throw ShapeError("cross_entropy_soft: length mismatch");
    double loss = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) loss -= y[j] * std::log(std::max(p[j], 1e-12));
    return loss;
}

double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

LossResult tempered_loss(const Network& net, const Batch& batch, double temperature,
                         ExecMode mode, double entropy_penalty_beta) {
    if (batch.size() == 0) throw Error("tempered_loss: empty batch");
    if (batch.feature_dim != net.input_dim() || batch.num_classes != net.output_dim())
        throw ShapeError("tempered_loss: batch shape does not match network");
    if (!(temperature > 0.0)) throw std::invalid_argument("tempered_loss: temperature must be positive");
    return mode == ExecMode::serial
               ? detail::batch_loss_serial(net, batch, temperature, entropy_penalty_beta)
               : detail::batch_loss_parallel(net, batch, temperature, entropy_penalty_beta);
}

// ---------------------------------------------------------------------------
// SGD
// ---------------------------------------------------------------------------

void sgd_step(Network& net, const Gradients& grads, OptimizerState& opt) {
    auto& layers = net.layers();
    if (grads.weights.size() != layers.size())
        throw ShapeError("sgd_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Layer& layer = layers[l];
        if (grads.weights[l].size() != layer.weights.size() ||
            grads.bias[l].size() != layer.bias.size())
            throw ShapeError("sgd_step: gradient shape mismatch in layer " + std::to_string(l));
        auto update = [&](std::vector<double>& params, const std::vector<double>& g,
                          std::vector<double>& vel, const char* kind) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (!std::isfinite(g[i]))
                    throw NumericError("sgd_step: non-finite gradient (layer " + std::to_string(l) +
                                       ", " + kind + " index " + std::to_string(i) + ")");
                const double gd = g[i] + opt.weight_decay * params[i];
                vel[i] = opt.momentum * vel[i] + gd;
                params[i] -= opt.learning_rate * vel[i];
            }
        };
        update(layer.weights, grads.weights[l], opt.velocity_w[l], "weight");
        update(layer.bias, grads.bias[l], opt.velocity_b[l], "bias");
    }
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

namespace {

double batch_loss_value(const Network& net, const Batch& batch, double temperature) {
    // Loss only; used for the finite-difference probes.
    const std::size_t b = batch.size();
    double total = 0.0;
    for (std::size_t s = 0; s < b; ++s) {
        const auto logits = net.forward(batch.features.data() + s * batch.feature_dim);
        const auto p = softmax_tempered(logits, temperature);
        std::vector<double> y(batch.targets.begin() + static_cast<std::ptrdiff_t>(s * batch.num_classes),
                              batch.targets.begin() +
                                  static_cast<std::ptrdiff_t>((s + 1) * batch.num_classes));
        total += cross_entropy_soft(y, p);
    }
    return total / static_cast<double>(b);
}

}  // namespace

GradCheckReport grad_check_against(const Network& net, const Batch& batch, double temperature,
                                   double step, double tolerance, const Gradients& analytic) {
    if (batch.size() == 0) throw Error("grad_check: empty batch");
    if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

    GradCheckReport report;
    Network probe = net;
    auto& layers = probe.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::size_t nw = layers[l].weights.size();
        const std::size_t nb = layers[l].bias.size();
        for (std::size_t i = 0; i < nw + nb; ++i) {
            double& param = i < nw ? layers[l].weights[i] : layers[l].bias[i - nw];
            const double saved = param;
            param = saved + step;
            const double lp = batch_loss_value(probe, batch, temperature);
            param = saved - step;
            const double lm = batch_loss_value(probe, batch, temperature);
            param = saved;
            const double numeric = (lp - lm) / (2.0 * step);
            const double analytic_v = i < nw ? analytic.weights[l][i] : analytic.bias[l][i - nw];
            const double rel =
                std::abs(analytic_v - numeric) / std::max(std::abs(analytic_v) + std::abs(numeric), 1e-8);
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_layer = static_cast<int>(l);
                report.worst_index = i;
            }
        }
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

GradCheckReport grad_check(const Network& net, const Batch& batch, double temperature,
                           double step, double tolerance) {
    const auto result = tempered_loss(net, batch, temperature, ExecMode::serial);
    return grad_check_against(net, batch, temperature, step, tolerance, result.grads);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_network(const Network& net, const std::string& path) {
    std::vector<unsigned char> out;
    out.push_back('C');
    out.push_back('L');
    out.push_back('N');
    out.push_back('N');
    put_u32_le(out, 1u);  // version
    put_u32_le(out, static_cast<std::uint32_t>(net.layers().size()));
    for (const auto& l : net.layers()) {
        put_u32_le(out, static_cast<std::uint32_t>(l.out_dim));
        put_u32_le(out, static_cast<std::uint32_t>(l.in_dim));
    }
    for (const auto& l : net.layers()) {
        for (double w : l.weights) put_f64_le(out, w);
        for (double b : l.bias) put_f64_le(out, b);
    }
    write_file_bytes(path, out);
}

Network load_network(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "CLNN", 4) != 0)
        throw ParseError(path + ": bad checkpoint magic (expected CLNN)");
    const std::uint32_t version = get_u32_le(bytes.data() + 4);
    if (version != 1u)
        throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t layer_count = get_u32_le(bytes.data() + 8);
    std::size_t off = 12;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dims;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        if (off + 8 > bytes.size()) throw ParseError(path + ": truncated layer dims");
        const std::uint32_t out_dim = get_u32_le(bytes.data() + off);
        const std::uint32_t in_dim = get_u32_le(bytes.data() + off + 4);
        dims.emplace_back(out_dim, in_dim);
        off += 8;
    }
    Network net;
    for (auto [out_dim, in_dim] : dims) {
        Layer layer;
        layer.out_dim = static_cast<int>(out_dim);
        layer.in_dim = static_cast<int>(in_dim);
        const std::size_t nw = static_cast<std::size_t>(out_dim) * in_dim;
        if (off + (nw + out_dim) * 8 > bytes.size())
            throw ParseError(path + ": truncated parameter data at byte offset " +
                             std::to_string(off));
        layer.weights.resize(nw);
        for (std::size_t i = 0; i < nw; ++i, off += 8) layer.weights[i] = get_f64_le(bytes.data() + off);
        layer.bias.resize(out_dim);
        for (std::size_t i = 0; i < out_dim; ++i, off += 8) layer.bias[i] = get_f64_le(bytes.data() + off);
        net.layers().push_back(std::move(layer));
    }
    if (off != bytes.size()) throw ParseError(path + ": trailing bytes after parameter data");
    net.check_finite("load_network");
    return net;
}

std::string network_sidecar_json(std::uint64_t seed, int epoch, const std::string& config_hash) {
    nlohmann::json j;
    j["seed"] = seed;
    j["epoch"] = epoch;
    j["config_hash"] = config_hash;
    return j.dump(2) + "\n";
}

}  // namespace colam
