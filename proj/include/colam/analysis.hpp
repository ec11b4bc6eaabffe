#pragma once

#include <array>
#include <string>
#include <vector>

#include "colam/data.hpp"
#include "colam/nn.hpp"

namespace colam {

struct RepresentationSet {
    int dim = 0;
    std::vector<double> vectors;  // N x dim, row-major (penultimate activations)
    std::vector<int> classes;
    Split source = Split::train;

    std::size_t size() const { return classes.size(); }
    const double* vec(std::size_t i) const { return vectors.data() + i * dim; }
};

struct TemplateSet {
    int dim = 0;
    int num_classes = 0;
    std::vector<double> templates;   // C x dim: final-layer weight rows (bias excluded)
    std::vector<double> normalized;  // unit-L2 copies

    const double* raw(int cls) const { return templates.data() + static_cast<std::size_t>(cls) * dim; }
    const double* unit(int cls) const { return normalized.data() + static_cast<std::size_t>(cls) * dim; }

    // Throws NumericError naming the class on a zero-norm template.
    static TemplateSet from_network(const Network& net);
};

// Forward pass stopping before the final linear layer; deterministic order,
// no augmentation.
RepresentationSet extract_representations(const Network& net, const Dataset& dataset, Split split);

// Pairwise Euclidean distances between unit-normalized templates (C x C,
// symmetric, zero diagonal).
std::vector<double> template_distances(const TemplateSet& templates);

// Mean distance from the unit template of class a to unit-normalized
// representations of class b.
double avg_dist_to_template(const RepresentationSet& reps, const TemplateSet& templates, int class_a,
                            int class_b);

// Centroid = mean of class-a normalized representations; mean distance from
// it to class-b normalized representations (a == b measures tightness).
double avg_dist_to_centroid(const RepresentationSet& reps, int class_a, int class_b);

struct ProjectedPoint {
    std::string kind;  // "sample" | "template"
    int class_id = 0;
    double u = 0.0;
    double v = 0.0;
};

// Orthogonal projection onto the plane through the three template points.
// Throws Error on (nearly) collinear templates.
std::vector<ProjectedPoint> project_template_plane(const RepresentationSet& reps,
                                                   const TemplateSet& templates,
                                                   const std::array<int, 3>& class_ids);

// CSV emitters (plot-ready; rendering is external).
std::string template_distances_csv(const std::vector<double>& matrix, int num_classes,
                                   const std::string& method, const std::string& header_comment);
std::string pair_metric_csv(const RepresentationSet& reps, const TemplateSet& templates,
                            bool to_template, const std::string& header_comment);
std::string projection_csv(const std::vector<ProjectedPoint>& points,
                           const std::string& header_comment);

}  // namespace colam
