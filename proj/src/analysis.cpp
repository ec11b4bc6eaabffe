#include "colam/analysis.hpp"

#include <cmath>
#include <sstream>

namespace colam {

namespace {

double norm2(const double* v, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += v[i] * v[i];
    return std::sqrt(acc);
}

double dist(const double* a, const double* b, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

std::vector<double> unit(const double* v, int n) {
    const double nm = norm2(v, n);
    std::vector<double> out(v, v + n);
    for (auto& x : out) x /= nm;
    return out;
}

}  // namespace

TemplateSet TemplateSet::from_network(const Network& net) {
    const Layer& last = net.layers().back();
    TemplateSet set;
    set.dim = last.in_dim;
    set.num_classes = last.out_dim;
    set.templates = last.weights;
    set.normalized.resize(set.templates.size());
    for (int c = 0; c < set.num_classes; ++c) {
        const double nm = norm2(set.raw(c), set.dim);
        if (nm == 0.0)
            throw NumericError("template for class " + std::to_string(c) + " has zero norm");
        for (int i = 0; i < set.dim; ++i)
            set.normalized[static_cast<std::size_t>(c) * set.dim + i] = set.raw(c)[i] / nm;
    }
    return set;
}

RepresentationSet extract_representations(const Network& net, const Dataset& dataset, Split split) {
    if (net.layers().size() < 2) throw Error("extract_representations: network has no penultimate layer");
    const auto idx = dataset.indices_of(split);
    RepresentationSet reps;
    reps.dim = net.layers()[net.layers().size() - 2].out_dim;
    reps.source = split;
    reps.vectors.reserve(idx.size() * static_cast<std::size_t>(reps.dim));
    reps.classes.reserve(idx.size());
    for (std::size_t i : idx) {
        const auto h = net.penultimate(dataset.sample(i));
        reps.vectors.insert(reps.vectors.end(), h.begin(), h.end());
        reps.classes.push_back(dataset.labels[i]);
    }
    return reps;
}

std::vector<double> template_distances(const TemplateSet& templates) {
    const int C = templates.num_classes;
    std::vector<double> m(static_cast<std::size_t>(C) * C, 0.0);
    for (int a = 0; a < C; ++a)
        for (int b = a + 1; b < C; ++b) {
            const double d = dist(templates.unit(a), templates.unit(b), templates.dim);
            m[static_cast<std::size_t>(a) * C + b] = d;
            m[static_cast<std::size_t>(b) * C + a] = d;
        }
    return m;
}

double avg_dist_to_template(const RepresentationSet& reps, const TemplateSet& templates, int class_a,
                            int class_b) {
    if (reps.dim != templates.dim) throw ShapeError("avg_dist_to_template: dimension mismatch");
    const auto t = unit(templates.raw(class_a), templates.dim);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        if (reps.classes[i] != class_b) continue;
        const auto x = unit(reps.vec(i), reps.dim);
        acc += dist(t.data(), x.data(), reps.dim);
        ++count;
    }
    if (count == 0)
        throw Error("avg_dist_to_template: class " + std::to_string(class_b) + " has no representations");
    return acc / static_cast<double>(count);
}

double avg_dist_to_centroid(const RepresentationSet& reps, int class_a, int class_b) {
    std::vector<double> centroid(static_cast<std::size_t>(reps.dim), 0.0);
    std::size_t count_a = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        if (reps.classes[i] != class_a) continue;
        const auto x = unit(reps.vec(i), reps.dim);
        for (int d = 0; d < reps.dim; ++d) centroid[static_cast<std::size_t>(d)] += x[static_cast<std::size_t>(d)];
        ++count_a;
    }
    if (count_a == 0)
        throw Error("avg_dist_to_centroid: class " + std::to_string(class_a) + " has no representations");
    for (auto& v : centroid) v /= static_cast<double>(count_a);

    double acc = 0.0;
    std::size_t count_b = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        if (reps.classes[i] != class_b) continue;
        const auto x = unit(reps.vec(i), reps.dim);
        acc += dist(centroid.data(), x.data(), reps.dim);
        ++count_b;
    }
    if (count_b == 0)
        throw Error("avg_dist_to_centroid: class " + std::to_string(class_b) + " has no representations");
    return acc / static_cast<double>(count_b);
}

std::vector<ProjectedPoint> project_template_plane(const RepresentationSet& reps,
                                                   const TemplateSet& templates,
                                                   const std::array<int, 3>& class_ids) {
    if (class_ids[0] == class_ids[1] || class_ids[0] == class_ids[2] || class_ids[1] == class_ids[2])
        throw std::invalid_argument("project_template_plane: class ids must be distinct");
    const int n = templates.dim;
    if (reps.dim != n) throw ShapeError("project_template_plane: dimension mismatch");

    const double* t0 = templates.raw(class_ids[0]);
    const double* t1 = templates.raw(class_ids[1]);
    const double* t2 = templates.raw(class_ids[2]);

    // Orthonormal basis of the plane through the three templates.
    std::vector<double> e1(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        e1[static_cast<std::size_t>(i)] = t1[i] - t0[i];
        w[static_cast<std::size_t>(i)] = t2[i] - t0[i];
    }
    const double n1 = norm2(e1.data(), n);
    if (n1 == 0.0) throw Error("project_template_plane: templates are degenerate (coincident)");
    for (auto& v : e1) v /= n1;
    double proj = 0.0;
    for (int i = 0; i < n; ++i) proj += w[static_cast<std::size_t>(i)] * e1[static_cast<std::size_t>(i)];
    std::vector<double> e2(w);
    for (int i = 0; i < n; ++i) e2[static_cast<std::size_t>(i)] -= proj * e1[static_cast<std::size_t>(i)];
    const double n2 = norm2(e2.data(), n);
    const double scale = std::max(norm2(w.data(), n), n1);
    if (n2 <= 1e-12 * scale)
        throw Error("project_template_plane: templates are collinear, plane is degenerate");
    for (auto& v : e2) v /= n2;

    auto project = [&](const double* p) {
        double u = 0.0, v = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = p[i] - t0[i];
            u += d * e1[static_cast<std::size_t>(i)];
            v += d * e2[static_cast<std::size_t>(i)];
        }
        return std::pair<double, double>(u, v);
    };

    std::vector<ProjectedPoint> out;
    out.reserve(reps.size() + 3);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const auto [u, v] = project(reps.vec(i));
        out.push_back({"sample", reps.classes[i], u, v});
    }
    for (int cls : class_ids) {
        const auto [u, v] = project(templates.raw(cls));
        out.push_back({"template", cls, u, v});
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV emitters
// ---------------------------------------------------------------------------

std::string template_distances_csv(const std::vector<double>& matrix, int num_classes,
                                   const std::string& method, const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "pair,method,distance\n";
    for (int a = 0; a < num_classes; ++a)
        for (int b = a + 1; b < num_classes; ++b)
            out << a << "-" << b << "," << method << ","
                << format_double(matrix[static_cast<std::size_t>(a) * num_classes + b]) << "\n";
    return out.str();
}

std::string pair_metric_csv(const RepresentationSet& reps, const TemplateSet& templates,
                            bool to_template, const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "from_class,to_class,value\n";
    for (int a = 0; a < templates.num_classes; ++a)
        for (int b = 0; b < templates.num_classes; ++b) {
            const double v = to_template ? avg_dist_to_template(reps, templates, a, b)
                                         : avg_dist_to_centroid(reps, a, b);
            out << a << "," << b << "," << format_double(v) << "\n";
        }
    return out.str();
}

std::string projection_csv(const std::vector<ProjectedPoint>& points,
                           const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "kind,class,u,v\n";
    for (const auto& p : points)
        out << p.kind << "," << p.class_id << "," << format_double(p.u) << "," << format_double(p.v)
            << "\n";
    return out.str();
}

}  // namespace colam
