#include "colam/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace colam {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TrainConfig
// ---------------------------------------------------------------------------

double TrainConfig::lr_at(int epoch) const {
    const int total = total_epochs();
    double value = lr.initial;
    for (double frac : lr.milestones)
        if (epoch > static_cast<int>(std::floor(frac * total))) value *= lr.decay_factor;
    return value;
}

void TrainConfig::validate(const Dataset* dataset) const {
    if (stages < 1) throw ConfigError("config.stages: must be >= 1");
    if (epochs_per_stage < 1) throw ConfigError("config.epochs_per_stage: must be >= 1");
    if (!(temperature > 0.0)) throw ConfigError("config.temperature: must be > 0");
    if (peer_count < 1) throw ConfigError("config.peer_count: must be >= 1");
    if (batch_size < 1) throw ConfigError("config.batch_size: must be >= 1");
    if (!(lr.initial > 0.0)) throw ConfigError("config.learning_rate.initial: must be > 0");
    if (!(lr.decay_factor > 0.0)) throw ConfigError("config.learning_rate.decay_factor: must be > 0");
    for (double f : lr.milestones)
        if (f < 0.0 || f > 1.0)
            throw ConfigError("config.learning_rate.milestones: fractions must be in [0,1]");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("config.momentum: must be in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("config.weight_decay: must be >= 0");
    for (int w : hidden_widths)
        if (w < 1) throw ConfigError("config.hidden_widths: widths must be >= 1");
    baseline.validate();
    if (dataset) {
        if (augment && !dataset->spatial)
            throw ConfigError("config.augment: augmentation requires spatially-shaped features "
                              "(disabled for vector data)");
        dataset->validate();
    }
}

std::string TrainConfig::to_json() const {
    json j;
    j["stages"] = stages;
    j["epochs_per_stage"] = epochs_per_stage;
    j["temperature"] = temperature;
    j["peer_count"] = peer_count;
    j["batch_size"] = batch_size;
    j["learning_rate"] = {{"initial", lr.initial},
                          {"decay_factor", lr.decay_factor},
                          {"milestones", lr.milestones}};
    j["momentum"] = momentum;
    j["weight_decay"] = weight_decay;
    j["seed"] = seed;
    j["deterministic"] = deterministic;
    j["hidden_widths"] = hidden_widths;
    j["augment"] = augment;
    j["baseline"] = {{"variant", BaselineSpec::variant_name(baseline.variant)},
                     {"epsilon", baseline.epsilon},
                     {"alpha", baseline.alpha},
                     {"beta", baseline.beta}};
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: invalid JSON: ") + e.what());
    }
    TrainConfig cfg;
    try {
        cfg.stages = j.value("stages", cfg.stages);
        cfg.epochs_per_stage = j.value("epochs_per_stage", cfg.epochs_per_stage);
        cfg.temperature = j.value("temperature", cfg.temperature);
        cfg.peer_count = j.value("peer_count", cfg.peer_count);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        if (j.contains("learning_rate")) {
            const auto& l = j.at("learning_rate");
            cfg.lr.initial = l.value("initial", cfg.lr.initial);
            cfg.lr.decay_factor = l.value("decay_factor", cfg.lr.decay_factor);
            if (l.contains("milestones"))
                cfg.lr.milestones = l.at("milestones").get<std::vector<double>>();
        }
        cfg.momentum = j.value("momentum", cfg.momentum);
        cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.deterministic = j.value("deterministic", cfg.deterministic);
        if (j.contains("hidden_widths"))
            cfg.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
        cfg.augment = j.value("augment", cfg.augment);
        if (j.contains("baseline")) {
            const auto& b = j.at("baseline");
            cfg.baseline.variant =
                BaselineSpec::variant_from_name(b.value("variant", std::string("hard")));
            cfg.baseline.epsilon = b.value("epsilon", cfg.baseline.epsilon);
            cfg.baseline.alpha = b.value("alpha", cfg.baseline.alpha);
            cfg.baseline.beta = b.value("beta", cfg.baseline.beta);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string TrainConfig::hash() const { return to_hex16(fnv1a64(to_json())); }

// ---------------------------------------------------------------------------
// RunRecord
// ---------------------------------------------------------------------------

std::string RunRecord::metrics_csv() const {
    std::ostringstream out;
    out << "# config_hash=" << config_hash << "\n";
    out << "epoch,stage,split,loss,top1,seconds\n";
    for (const auto& r : epochs) {
        const double ts = deterministic ? 0.0 : r.train_seconds;
        const double es = deterministic ? 0.0 : r.test_seconds;
        out << r.epoch << "," << r.stage << ",train," << format_double(r.train_loss) << ","
            << format_double(r.train_top1) << "," << format_double(ts) << "\n";
        out << r.epoch << "," << r.stage << ",test," << format_double(r.test_loss) << ","
            << format_double(r.test_top1) << "," << format_double(es) << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalResult evaluate(const Network& net, const Dataset& dataset, Split split, double temperature) {
    const auto idx = dataset.indices_of(split);
    if (idx.empty()) throw Error("evaluate: empty split");
    const int C = dataset.num_classes;
    std::size_t correct = 0;
    double loss = 0.0;
    for (std::size_t i : idx) {
        const auto logits = net.forward(dataset.sample(i));
        int pred = 0;
        for (int j = 1; j < C; ++j)
            if (logits[static_cast<std::size_t>(j)] > logits[static_cast<std::size_t>(pred)]) pred = j;
        if (pred == dataset.labels[i]) ++correct;
        const auto p = softmax_tempered(logits, temperature);
        loss -= std::log(std::max(p[static_cast<std::size_t>(dataset.labels[i])], 1e-12));
    }
    EvalResult res;
    res.top1 = static_cast<double>(correct) / static_cast<double>(idx.size());
    res.mean_loss = loss / static_cast<double>(idx.size());
    return res;
}

// ---------------------------------------------------------------------------
// Training engine
//
// COLAM and every baseline run through the same loop; they differ only in
// how per-sample targets are produced. Stage-1 COLAM therefore coincides
// bitwise with the hard baseline. Every random decision draws from its own
// named sub-stream, so e.g. peer draws at stage boundaries never shift the
// shuffle stream.
// ---------------------------------------------------------------------------

namespace {

enum class Method { colam, baseline, frozen_table };

class TargetSource {
public:
    TargetSource(Method method, const BaselineSpec* spec, const SoftLabelTable* frozen,
                 const Dataset& ds)
        : method_(method), spec_(spec), ds_(ds) {
        const int C = ds.num_classes;
        one_hot_.assign(static_cast<std::size_t>(C) * C, 0.0);
        for (int c = 0; c < C; ++c) one_hot_[static_cast<std::size_t>(c) * C + c] = 1.0;
        if (method == Method::baseline && spec->variant == BaselineVariant::smooth) {
            smooth_rows_.reserve(static_cast<std::size_t>(C) * C);
            for (int c = 0; c < C; ++c) {
                const auto row = label_smooth(c, spec->epsilon, C);
                smooth_rows_.insert(smooth_rows_.end(), row.begin(), row.end());
            }
        }
        if (method == Method::frozen_table) {
            frozen->validate();
            table_rows_ = frozen->rows;
            table_active_ = true;
        }
    }

    // COLAM stage boundary: subsequent epochs consume the new table.
    void set_table(const SoftLabelTable& table) {
        table_rows_ = table.rows;
        table_active_ = true;
    }

    // DisturbLabel resamples fresh noise per epoch from its own stream.
    void begin_epoch(std::uint64_t master_seed, int epoch) {
        if (method_ != Method::baseline || spec_->variant != BaselineVariant::disturb) return;
        RngStream rng(derive_seed(master_seed, "disturb", static_cast<std::uint64_t>(epoch)));
        disturbed_.resize(ds_.size());
        for (std::size_t i = 0; i < ds_.size(); ++i)
            disturbed_[i] = (ds_.split[i] == Split::train)
                                ? disturb_label(ds_.labels[i], spec_->alpha, ds_.num_classes, rng)
                                : ds_.labels[i];
    }

    const double* target_for(std::size_t sample_index) const {
        const int C = ds_.num_classes;
        if (method_ == Method::colam || method_ == Method::frozen_table) {
            if (table_active_)
                return table_rows_.data() + static_cast<std::size_t>(ds_.labels[sample_index]) * C;
            return one_hot_.data() + static_cast<std::size_t>(ds_.labels[sample_index]) * C;
        }
        switch (spec_->variant) {
            case BaselineVariant::smooth:
                return smooth_rows_.data() + static_cast<std::size_t>(ds_.labels[sample_index]) * C;
            case BaselineVariant::disturb:
                return one_hot_.data() + static_cast<std::size_t>(disturbed_[sample_index]) * C;
            case BaselineVariant::hard:
            case BaselineVariant::confidence_penalty:
                return one_hot_.data() + static_cast<std::size_t>(ds_.labels[sample_index]) * C;
        }
        return one_hot_.data();
    }

    double entropy_beta() const {
        return (method_ == Method::baseline && spec_->variant == BaselineVariant::confidence_penalty)
                   ? spec_->beta
                   : 0.0;
    }

private:
    Method method_;
    const BaselineSpec* spec_;
    const Dataset& ds_;
    std::vector<double> one_hot_;
    std::vector<double> smooth_rows_;
    std::vector<double> table_rows_;
    bool table_active_ = false;
    std::vector<int> disturbed_;
};

RunRecord run_training(const TrainConfig& cfg, const Dataset& ds, Method method,
                       const BaselineSpec* spec, const SoftLabelTable* frozen) {
    cfg.validate(&ds);
    if (method == Method::frozen_table && frozen &&
        frozen->num_classes != ds.num_classes)
        throw ShapeError("expected_accuracy: checkpoint class count does not match dataset");

    const ExecMode mode = cfg.mode();
    const int C = ds.num_classes;

    RngStream init_rng(derive_seed(cfg.seed, "init"));
    Network net = Network::init(ds.feature_dim, cfg.hidden_widths, C, init_rng);
    OptimizerState opt =
        OptimizerState::for_network(net, cfg.lr.initial, cfg.momentum, cfg.weight_decay);

    TargetSource targets(method, spec, frozen, ds);

    const auto train_idx = ds.indices_of(Split::train);
    const bool do_augment = cfg.augment && ds.spatial.has_value();

    RunRecord record;
    record.config_hash = cfg.hash();
    record.seed = cfg.seed;
    record.deterministic = cfg.deterministic;

    std::vector<std::size_t> order(train_idx);
    Batch batch;
    batch.feature_dim = ds.feature_dim;
    batch.num_classes = C;

    const int total = cfg.total_epochs();
    for (int epoch = 1; epoch <= total; ++epoch) {
        const int stage = (epoch - 1) / cfg.epochs_per_stage + 1;
        const auto t0 = std::chrono::steady_clock::now();
        opt.learning_rate = cfg.lr_at(epoch);

        order.assign(train_idx.begin(), train_idx.end());
        RngStream shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = shuffle_rng.uniform_index(i);
            std::swap(order[i - 1], order[j]);
        }

        targets.begin_epoch(cfg.seed, epoch);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::size_t bsz = stop - start;
            batch.features.resize(bsz * static_cast<std::size_t>(ds.feature_dim));
            batch.targets.resize(bsz * static_cast<std::size_t>(C));
            for (std::size_t s = 0; s < bsz; ++s) {
                const std::size_t idx = order[start + s];
                double* dst = batch.features.data() + s * ds.feature_dim;
                if (do_augment) {
                    RngStream arng(derive_seed(cfg.seed, "augment", static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(idx)));
                    augment_into(ds.sample(idx), dst, *ds.spatial, arng);
                } else {
                    std::copy(ds.sample(idx), ds.sample(idx) + ds.feature_dim, dst);
                }
                const double* row = targets.target_for(idx);
                std::copy(row, row + C, batch.targets.data() + s * C);
            }

            const auto res = tempered_loss(net, batch, cfg.temperature, mode, targets.entropy_beta());
            if (!std::isfinite(res.loss))
                throw NumericError("training diverged: non-finite loss at stage " +
                                   std::to_string(stage) + ", epoch " + std::to_string(epoch));
            try {
                sgd_step(net, res.grads, opt);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (stage " + std::to_string(stage) +
                                   ", epoch " + std::to_string(epoch) + ")");
            }
            loss_sum += res.loss;
            ++batches;
            for (std::size_t s = 0; s < bsz; ++s)
                if (res.predictions[s] == ds.labels[order[start + s]]) ++correct;
        }
        const auto t1 = std::chrono::steady_clock::now();
        const auto eval = evaluate(net, ds, Split::test, cfg.temperature);
        const auto t2 = std::chrono::steady_clock::now();

        EpochRow row;
        row.epoch = epoch;
        row.stage = stage;
        row.train_loss = loss_sum / static_cast<double>(batches);
        row.train_top1 = static_cast<double>(correct) / static_cast<double>(order.size());
        row.test_loss = eval.mean_loss;
        row.test_top1 = eval.top1;
        row.train_seconds = std::chrono::duration<double>(t1 - t0).count();
        row.test_seconds = std::chrono::duration<double>(t2 - t1).count();
        record.epochs.push_back(row);

        // Stage boundary: recompute the table from current parameters
        // (unconditionally, the final stage included).
        if (method == Method::colam && epoch % cfg.epochs_per_stage == 0) {
            const auto table = update_soft_labels(net, ds, cfg.peer_count, cfg.temperature, stage,
                                                  cfg.seed, mode);
            record.checkpoints.push_back(table);
            if (stage < cfg.stages) targets.set_table(table);
        }
    }

    record.final_net = std::move(net);
    return record;
}

}  // namespace

RunRecord run_colam(const TrainConfig& config, const Dataset& dataset) {
    return run_training(config, dataset, Method::colam, nullptr, nullptr);
}

RunRecord run_baseline(const BaselineSpec& spec, const TrainConfig& config, const Dataset& dataset) {
    spec.validate();
    return run_training(config, dataset, Method::baseline, &spec, nullptr);
}

RunRecord run_frozen_table(const SoftLabelTable& checkpoint, const TrainConfig& config,
                           const Dataset& dataset) {
    return run_training(config, dataset, Method::frozen_table, nullptr, &checkpoint);
}

double expected_accuracy(const SoftLabelTable& checkpoint, const TrainConfig& config,
                         const Dataset& dataset) {
    return run_frozen_table(checkpoint, config, dataset).final_test_top1();
}

}  // namespace colam
