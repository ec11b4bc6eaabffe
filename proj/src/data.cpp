#include "colam/data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace colam {

std::vector<std::size_t> Dataset::indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::class_indices(int cls, Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s && labels[i] == cls) out.push_back(i);
    return out;
}

void Dataset::validate() const {
    if (num_classes <= 0) throw ConfigError("dataset: num_classes must be positive");
    if (labels.size() * static_cast<std::size_t>(feature_dim) != features.size())
        throw ShapeError("dataset: feature matrix size does not match label count");
    if (split.size() != labels.size()) throw ShapeError("dataset: split assignment size mismatch");
    std::vector<int> train_counts(num_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw ConfigError("dataset: label " + std::to_string(labels[i]) + " out of range at sample " +
                              std::to_string(i));
        if (split[i] == Split::train) ++train_counts[labels[i]];
    }
    for (int c = 0; c < num_classes; ++c)
        if (train_counts[c] == 0)
            throw ConfigError("dataset: class " + std::to_string(c) + " has no train samples");
    for (double v : features)
        if (!std::isfinite(v)) throw NumericError("dataset: non-finite feature value");
}

SyntheticSpec SyntheticSpec::triblob(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.train_per_class = 500;
    spec.test_per_class = 200;
    spec.feature_dim = 32;
    spec.means.assign(3, std::vector<double>(32, 0.0));
    spec.means[1][0] = 2.0;
    spec.means[2][0] = 10.0;
    spec.stddev = 1.2;
    spec.label_noise = 0.1;
    spec.seed = seed;
    return spec;
}

std::vector<std::vector<double>> SyntheticSpec::resolve_means() const {
    if (!means.empty()) return means;
    std::vector<std::vector<double>> out;
    // Group g's classes sit at center + spread * e_j for j = 0..count-1,
    // so within-group distances (spread*sqrt(2)) stay below between-group ones.
    for (const auto& g : groups) {
        for (int j = 0; j < g.count; ++j) {
            std::vector<double> m = g.center;
            m.resize(static_cast<std::size_t>(feature_dim), 0.0);
            m[static_cast<std::size_t>(j) % feature_dim] += g.spread;
            out.push_back(std::move(m));
        }
    }
    return out;
}

void SyntheticSpec::validate() const {
    std::vector<std::string> problems;
    if (num_classes <= 0) problems.push_back("num_classes must be positive");
    if (train_per_class <= 0) problems.push_back("train_per_class must be positive");
    if (test_per_class < 0) problems.push_back("test_per_class must be nonnegative");
    if (feature_dim <= 0) problems.push_back("feature_dim must be positive");
    if (stddev <= 0.0) problems.push_back("stddev must be positive");
    if (label_noise < 0.0 || label_noise >= 1.0) problems.push_back("label_noise must be in [0,1)");
    if (means.empty() && groups.empty()) problems.push_back("either means or groups required");
    if (!means.empty() && !groups.empty()) problems.push_back("means and groups are exclusive");
    auto resolved = (problems.empty()) ? resolve_means() : std::vector<std::vector<double>>{};
    if (problems.empty()) {
        if (static_cast<int>(resolved.size()) != num_classes)
            problems.push_back("mean count does not equal num_classes");
        for (const auto& m : resolved)
            if (static_cast<int>(m.size()) != feature_dim)
                problems.push_back("mean dimension does not equal feature_dim");
        for (std::size_t a = 0; a + 1 < resolved.size() && problems.empty(); ++a)
            for (std::size_t b = a + 1; b < resolved.size(); ++b)
                if (resolved[a] == resolved[b]) {
                    problems.push_back("class means must be pairwise distinct");
                    break;
                }
    }
    if (!problems.empty()) {
        std::string msg = "synthetic spec invalid:";
        for (const auto& p : problems) msg += " [" + p + "]";
        throw ConfigError(msg);
    }
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto means = spec.resolve_means();
    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.feature_dim = spec.feature_dim;
    ds.provenance = "synthetic";

    const int per_class = spec.train_per_class + spec.test_per_class;
    const std::size_t total = static_cast<std::size_t>(per_class) * spec.num_classes;
    ds.features.reserve(total * spec.feature_dim);
    ds.labels.reserve(total);
    ds.split.reserve(total);

    for (int c = 0; c < spec.num_classes; ++c) {
        RngStream rng(derive_seed(spec.seed, "synthetic-class", static_cast<std::uint64_t>(c)));
        for (int i = 0; i < per_class; ++i) {
            for (int d = 0; d < spec.feature_dim; ++d)
                ds.features.push_back(means[c][d] + spec.stddev * rng.normal());
            ds.labels.push_back(c);
            ds.split.push_back(i < spec.train_per_class ? Split::train : Split::test);
        }
    }

    if (spec.label_noise > 0.0) {
        RngStream noise(derive_seed(spec.seed, "label-noise"));
        for (std::size_t i = 0; i < ds.labels.size(); ++i) {
            if (ds.split[i] != Split::train) continue;
            if (noise.bernoulli(spec.label_noise))
                ds.labels[i] = static_cast<int>(noise.uniform_index(spec.num_classes));
        }
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

namespace {

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off,
                        const std::string& path) {
    if (off + 4 > b.size())
        throw ParseError(path + ": truncated at byte offset " + std::to_string(off) +
                         " (need 4 bytes)");
    return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file_bytes(images_path);
    const auto lab = read_file_bytes(labels_path);

    const std::uint32_t img_magic = read_be32(img, 0, images_path);
    if (img_magic != 0x00000803u)
        throw ParseError(images_path + ": expected image magic 0x00000803, got 0x" +
                         to_hex16(img_magic).substr(8) + " at byte offset 0");
    const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
    if (lab_magic != 0x00000801u)
        throw ParseError(labels_path + ": expected label magic 0x00000801, got 0x" +
                         to_hex16(lab_magic).substr(8) + " at byte offset 0");

    const std::uint32_t n_img = read_be32(img, 4, images_path);
    const std::uint32_t h = read_be32(img, 8, images_path);
    const std::uint32_t w = read_be32(img, 12, images_path);
    const std::uint32_t n_lab = read_be32(lab, 4, labels_path);
    if (n_img != n_lab)
        throw ParseError("IDX count mismatch: " + images_path + " has " + std::to_string(n_img) +
                         " images but " + labels_path + " has " + std::to_string(n_lab) + " labels");

    const std::size_t pixels = static_cast<std::size_t>(n_img) * h * w;
    if (img.size() != 16 + pixels)
        throw ParseError(images_path + ": expected " + std::to_string(16 + pixels) +
                         " bytes, got " + std::to_string(img.size()) +
                         " (truncation at byte offset " + std::to_string(img.size()) + ")");
    if (lab.size() != 8 + n_lab)
        throw ParseError(labels_path + ": expected " + std::to_string(8 + n_lab) + " bytes, got " +
                         std::to_string(lab.size()));

    Dataset ds;
    ds.feature_dim = static_cast<int>(h * w);
    ds.spatial = SpatialShape{static_cast<int>(h), static_cast<int>(w), 1};
    ds.provenance = "idx:" + images_path;
    ds.features.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) ds.features[i] = img[16 + i] / 255.0;
    ds.labels.resize(n_lab);
    int max_label = 0;
    for (std::size_t i = 0; i < n_lab; ++i) {
        ds.labels[i] = lab[8 + i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = max_label + 1;
    ds.split.assign(n_lab, Split::train);
    return ds;
}

// ---------------------------------------------------------------------------
// CIFAR binary
// ---------------------------------------------------------------------------

namespace {

void append_cifar_file(Dataset& ds, const std::string& path, int num_classes, Split split) {
    const auto bytes = read_file_bytes(path);
    const std::size_t label_bytes = (num_classes == 100) ? 2 : 1;
    const std::size_t record = label_bytes + 3072;
    if (bytes.empty() || bytes.size() % record != 0)
        throw ParseError(path + ": size " + std::to_string(bytes.size()) +
                         " is not a multiple of the record size " + std::to_string(record));
    const std::size_t n = bytes.size() / record;
    for (std::size_t r = 0; r < n; ++r) {
        const unsigned char* rec = bytes.data() + r * record;
        // Coarse/fine pair: the fine label is the second byte.
        const int label = rec[label_bytes - 1];
        if (label >= num_classes)
            throw ParseError(path + ": label " + std::to_string(label) + " out of range (C=" +
                             std::to_string(num_classes) + ") in record " + std::to_string(r));
        ds.labels.push_back(label);
        ds.split.push_back(split);
        for (std::size_t p = 0; p < 3072; ++p)
            ds.features.push_back(rec[label_bytes + p] / 255.0);
    }
}

}  // namespace

Dataset load_cifar_bin(const std::vector<std::string>& train_paths,
                       const std::vector<std::string>& test_paths, int num_classes) {
    if (num_classes != 10 && num_classes != 100)
        throw ConfigError("load_cifar_bin: num_classes must be 10 or 100");
    Dataset ds;
    ds.num_classes = num_classes;
    ds.feature_dim = 3072;
    ds.spatial = SpatialShape{32, 32, 3};
    ds.provenance = "cifar-bin";
    for (const auto& p : train_paths) append_cifar_file(ds, p, num_classes, Split::train);
    for (const auto& p : test_paths) append_cifar_file(ds, p, num_classes, Split::test);
    return ds;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

void augment_into(const double* feats, double* out, const SpatialShape& shape, RngStream& rng) {
    if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0)
        throw ConfigError("augment: features are not spatially shaped");
    const int h = shape.height, w = shape.width, ch = shape.channels;
    constexpr int pad = 4;
    // Draw order is fixed: row offset, column offset, flip.
    const int oy = static_cast<int>(rng.uniform_index(2 * pad + 1));
    const int ox = static_cast<int>(rng.uniform_index(2 * pad + 1));
    const bool flip = rng.bernoulli(0.5);

    for (int c = 0; c < ch; ++c) {
        const double* plane = feats + static_cast<std::size_t>(c) * h * w;
        double* oplane = out + static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < h; ++y) {
            const int sy = y + oy - pad;  // source row in the unpadded image
            for (int x = 0; x < w; ++x) {
                const int cx = flip ? (w - 1 - x) : x;
                const int sx = cx + ox - pad;
                oplane[y * w + x] = (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                        ? plane[sy * w + sx]
                                        : 0.0;
            }
        }
    }
}

std::vector<double> augment(const std::vector<double>& feats, const SpatialShape& shape,
                            RngStream& rng) {
    if (static_cast<int>(feats.size()) != shape.height * shape.width * shape.channels)
        throw ShapeError("augment: feature size does not match spatial shape");
    std::vector<double> out(feats.size());
    augment_into(feats.data(), out.data(), shape, rng);
    return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

ChannelStats compute_train_stats(const Dataset& ds) {
    const int ch = ds.spatial ? ds.spatial->channels : 1;
    const std::size_t plane = ds.spatial
                                  ? static_cast<std::size_t>(ds.spatial->height) * ds.spatial->width
                                  : static_cast<std::size_t>(ds.feature_dim);
    ChannelStats stats;
    stats.mean.assign(ch, 0.0);
    stats.stddev.assign(ch, 0.0);
    std::vector<std::size_t> counts(ch, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.split[i] != Split::train) continue;
        const double* s = ds.sample(i);
        for (int c = 0; c < ch; ++c)
            for (std::size_t p = 0; p < plane; ++p) {
                stats.mean[c] += s[c * plane + p];
                ++counts[c];
            }
    }
    for (int c = 0; c < ch; ++c) stats.mean[c] /= static_cast<double>(counts[c]);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.split[i] != Split::train) continue;
        const double* s = ds.sample(i);
        for (int c = 0; c < ch; ++c)
            for (std::size_t p = 0; p < plane; ++p) {
                const double d = s[c * plane + p] - stats.mean[c];
                stats.stddev[c] += d * d;
            }
    }
    for (int c = 0; c < ch; ++c) {
        stats.stddev[c] = std::sqrt(stats.stddev[c] / static_cast<double>(counts[c]));
        if (stats.stddev[c] == 0.0)
            throw NumericError("normalize: channel " + std::to_string(c) + " has zero stddev");
    }
    return stats;
}

void normalize_dataset(Dataset& ds, const ChannelStats& stats) {
    const int ch = ds.spatial ? ds.spatial->channels : 1;
    if (static_cast<int>(stats.mean.size()) != ch || static_cast<int>(stats.stddev.size()) != ch)
        throw ShapeError("normalize: stats channel count mismatch");
    for (double s : stats.stddev)
        if (s <= 0.0) throw NumericError("normalize: nonpositive stddev");
    const std::size_t plane = ds.spatial
                                  ? static_cast<std::size_t>(ds.spatial->height) * ds.spatial->width
                                  : static_cast<std::size_t>(ds.feature_dim);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double* s = ds.features.data() + i * ds.feature_dim;
        for (int c = 0; c < ch; ++c)
            for (std::size_t p = 0; p < plane; ++p)
                s[c * plane + p] = (s[c * plane + p] - stats.mean[c]) / stats.stddev[c];
    }
}

std::string channel_stats_to_json(const ChannelStats& stats) {
    nlohmann::json j;
    j["mean"] = stats.mean;
    j["stddev"] = stats.stddev;
    return j.dump(2) + "\n";
}

}  // namespace colam
