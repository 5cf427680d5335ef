#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scattermesh/cluster.hpp"
#include "scattermesh/lsa.hpp"
#include "scattermesh/vectorizer.hpp"

namespace scattermesh {

struct Descriptor {
    std::string term;
    double weight = 0.0;
};

struct DescriptorList {
    std::size_t cluster = 0;
    std::vector<Descriptor> terms;  // descending weight, ties by term index
    std::size_t negative = 0;       // entries with a negative back-transformed weight
};

// Top terms of each cluster centroid. Centroids living in a reduced space are
// mapped back to term space through `factors`, which is then required.
std::vector<DescriptorList> cluster_descriptors(const Clustering& clustering, const SvdFactors* factors,
                                                const Vocabulary& vocab, std::size_t top_k);

struct ProjectionPoint {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    std::size_t cluster = 0;
    std::string truth;  // empty when unknown
};

// Fresh two-dimensional LSA projection of the matrix rows, independent of
// whatever space was used for clustering.
std::vector<ProjectionPoint> plot_projection(const TermDocMatrix& matrix, const Clustering& clustering,
                                             const std::vector<std::string>* truth = nullptr);

// Columns "id","x","y","cluster","class".
void write_projection_csv(const std::vector<ProjectionPoint>& points, std::ostream& out);

// Two panels: true classes on the left, predicted clusters on the right.
void write_projection_svg(const std::vector<ProjectionPoint>& points, std::ostream& out);

}  // namespace scattermesh
