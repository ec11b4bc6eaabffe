#include "colam/labels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace colam {

// ---------------------------------------------------------------------------
// SoftLabelTable
// ---------------------------------------------------------------------------

SoftLabelTable SoftLabelTable::one_hot(int num_classes) {
    SoftLabelTable t;
    t.num_classes = num_classes;
    t.rows.assign(static_cast<std::size_t>(num_classes) * num_classes, 0.0);
    for (int c = 0; c < num_classes; ++c)
        t.rows[static_cast<std::size_t>(c) * num_classes + c] = 1.0;
    return t;
}

void SoftLabelTable::validate() const {
    if (num_classes <= 0) throw ShapeError("soft label table: num_classes must be positive");
    if (rows.size() != static_cast<std::size_t>(num_classes) * num_classes)
        throw ShapeError("soft label table: expected exactly C rows of C entries");
    for (int c = 0; c < num_classes; ++c) {
        double sum = 0.0;
        for (int j = 0; j < num_classes; ++j) {
            const double v = row(c)[j];
            if (v < 0.0)
                throw ShapeError("soft label table: negative entry in row " + std::to_string(c));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ShapeError("soft label table: row " + std::to_string(c) + " sums to " +
                             std::to_string(sum));
    }
}

std::string SoftLabelTable::to_csv(const std::string& header_comment) const {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "class,stage,T";
    for (int j = 0; j < num_classes; ++j) out << ",p" << j;
    out << "\n";
    for (int c = 0; c < num_classes; ++c) {
        out << c << "," << stage << "," << format_double(temperature);
        for (int j = 0; j < num_classes; ++j) out << "," << format_double(row(c)[j]);
        out << "\n";
    }
    return out.str();
}

SoftLabelTable SoftLabelTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    SoftLabelTable t;
    std::vector<std::vector<double>> parsed;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line.rfind("class,stage,T", 0) != 0)
                throw ParseError("soft label csv: unexpected header: " + line);
            saw_header = true;
            continue;
        }
        std::vector<double> fields;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) fields.push_back(std::stod(cell));
        if (fields.size() < 4) throw ParseError("soft label csv: short row: " + line);
        parsed.push_back(std::move(fields));
    }
    if (parsed.empty()) throw ParseError("soft label csv: no data rows");
    t.num_classes = static_cast<int>(parsed.size());
    t.stage = static_cast<int>(parsed[0][1]);
    t.temperature = parsed[0][2];
    t.rows.assign(static_cast<std::size_t>(t.num_classes) * t.num_classes, 0.0);
    for (const auto& f : parsed) {
        const int cls = static_cast<int>(f[0]);
        if (cls < 0 || cls >= t.num_classes || f.size() != static_cast<std::size_t>(t.num_classes) + 3)
            throw ParseError("soft label csv: row shape mismatch");
        for (int j = 0; j < t.num_classes; ++j)
            t.rows[static_cast<std::size_t>(cls) * t.num_classes + j] = f[static_cast<std::size_t>(j) + 3];
    }
    t.validate();
    return t;
}

std::uint64_t SoftLabelTable::content_hash() const {
    std::uint64_t h = kFnvOffset;
    for (double v : rows) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= kFnvPrime;
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

void BaselineSpec::validate() const {
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("baseline: epsilon must be in [0,1]");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("baseline: alpha must be in [0,1]");
    if (beta < 0.0) throw ConfigError("baseline: beta must be nonnegative");
}

BaselineVariant BaselineSpec::variant_from_name(const std::string& name) {
    if (name == "hard") return BaselineVariant::hard;
    if (name == "smooth") return BaselineVariant::smooth;
    if (name == "disturb") return BaselineVariant::disturb;
    if (name == "confidence-penalty") return BaselineVariant::confidence_penalty;
    throw ConfigError("baseline: unknown variant '" + name + "'");
}

std::string BaselineSpec::variant_name(BaselineVariant v) {
    switch (v) {
        case BaselineVariant::hard: return "hard";
        case BaselineVariant::smooth: return "smooth";
        case BaselineVariant::disturb: return "disturb";
        case BaselineVariant::confidence_penalty: return "confidence-penalty";
    }
    return "hard";
}

std::vector<double> label_smooth(int label, double epsilon, int num_classes) {
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("label_smooth: epsilon must be in [0,1]");
    if (label < 0 || label >= num_classes)
        throw std::invalid_argument("label_smooth: label out of range");
    std::vector<double> out(static_cast<std::size_t>(num_classes), epsilon / num_classes);
    out[static_cast<std::size_t>(label)] = (1.0 - epsilon) + epsilon / num_classes;
    return out;
}

int disturb_label(int label, double alpha, int num_classes, RngStream& rng) {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("disturb_label: alpha must be in [0,1]");
    if (alpha == 0.0) return label;
    if (rng.bernoulli(alpha)) return static_cast<int>(rng.uniform_index(num_classes));
    return label;
}

double confidence_penalty(const std::vector<double>& p, double beta) {
    if (beta < 0.0) throw std::invalid_argument("confidence_penalty: beta must be nonnegative");
    return -beta * entropy(p);
}

double half_sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("half_sq_dist: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return 0.5 * acc;
}

// ---------------------------------------------------------------------------
// Peer sampling and soft-label updates
// ---------------------------------------------------------------------------

PeerSet get_peer_samples(int cls, int k, const Dataset& dataset, std::uint64_t draw_seed) {
    if (k < 1) throw std::invalid_argument("get_peer_samples: k must be >= 1");
    auto pool = dataset.class_indices(cls, Split::train);
    if (pool.empty())
        throw Error("get_peer_samples: class " + std::to_string(cls) + " has no train samples");
    PeerSet set;
    set.class_id = cls;
    set.draw_seed = draw_seed;
    if (static_cast<std::size_t>(k) >= pool.size()) {
        set.indices = std::move(pool);  // class_indices is already ascending
        return set;
    }
    // Partial Fisher-Yates: first k slots are a uniform draw w/o replacement.
    RngStream rng(draw_seed);
    for (int i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_index(pool.size() - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    set.indices.assign(pool.begin(), pool.begin() + k);
    return set;
}

SoftLabelTable update_soft_labels(const Network& net, const Dataset& dataset, int k,
                                  double temperature, int stage, std::uint64_t seed,
                                  ExecMode mode) {
    if (!(temperature > 0.0))
        throw std::invalid_argument("update_soft_labels: temperature must be positive");
    const int C = dataset.num_classes;
    if (net.output_dim() != C)
        throw ShapeError("update_soft_labels: network output dim does not match class count");

    SoftLabelTable table;
    table.num_classes = C;
    table.stage = stage;
    table.temperature = temperature;
    table.rows.assign(static_cast<std::size_t>(C) * C, 0.0);

    std::vector<std::string> failures(static_cast<std::size_t>(C));

    // Per-class updates are independent; each derives its own draw stream.
#pragma omp parallel for schedule(dynamic) if (mode == ExecMode::parallel)
    for (int c = 0; c < C; ++c) {
        try {
            const auto peers = get_peer_samples(
                c, k, dataset, derive_seed(seed, "peers", static_cast<std::uint64_t>(stage),
                                           static_cast<std::uint64_t>(c)));
            std::vector<double> mean_logits(static_cast<std::size_t>(C), 0.0);
            for (std::size_t idx : peers.indices) {
                const auto logits = net.forward(dataset.sample(idx));
                for (int j = 0; j < C; ++j) {
                    if (!std::isfinite(logits[static_cast<std::size_t>(j)]))
                        throw NumericError("update_soft_labels: non-finite logit for class " +
                                           std::to_string(c) + ", sample " + std::to_string(idx));
                    mean_logits[static_cast<std::size_t>(j)] += logits[static_cast<std::size_t>(j)];
                }
            }
            for (auto& v : mean_logits) v /= static_cast<double>(peers.indices.size());
            const auto row = softmax_tempered(mean_logits, temperature);
            std::copy(row.begin(), row.end(),
                      table.rows.begin() + static_cast<std::size_t>(c) * C);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(c)] = e.what();
        }
    }
    for (const auto& f : failures)
        if (!f.empty()) throw NumericError(f);
    table.validate();
    return table;
}

}  // namespace colam
