#include "scattermesh/descriptors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "scattermesh/error.hpp"

namespace scattermesh {

namespace {

constexpr std::array<const char*, 16> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#ad494a", "#637939", "#e7ba52", "#843c39", "#5254a3",
};

std::string format_number(double v) {
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return s.str();
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::vector<DescriptorList> cluster_descriptors(const Clustering& clustering, const SvdFactors* factors,
                                                const Vocabulary& vocab, std::size_t top_k) {
    if (top_k == 0) throw DataError("descriptor top_k must be positive");
    const auto dims = static_cast<std::size_t>(clustering.centroids.cols());
    if (!factors && dims != vocab.size()) {
        throw DataError("centroids have " + std::to_string(dims) +
                        " dimensions; SVD factors are required to map them back to the " +
                        std::to_string(vocab.size()) + "-term space");
    }

    std::vector<DescriptorList> out;
    std::vector<std::size_t> order;
    for (Eigen::Index c = 0; c < clustering.centroids.rows(); ++c) {
        Eigen::VectorXd weights = clustering.centroids.row(c).transpose();
        if (factors) weights = back_transform(weights, *factors);
        if (static_cast<std::size_t>(weights.size()) != vocab.size()) {
            throw DataError("back-transformed centroid does not match the vocabulary size");
        }

        order.resize(vocab.size());
        std::iota(order.begin(), order.end(), 0);
        const std::size_t take = std::min(top_k, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double wa = weights(static_cast<Eigen::Index>(a));
                              const double wb = weights(static_cast<Eigen::Index>(b));
                              if (wa != wb) return wa > wb;
                              return a < b;
                          });
        DescriptorList list;
        list.cluster = static_cast<std::size_t>(c);
        for (std::size_t r = 0; r < take; ++r) {
            const double w = weights(static_cast<Eigen::Index>(order[r]));
            if (w < 0.0) ++list.negative;
            list.terms.push_back({vocab.term(order[r]), w});
        }
        out.push_back(std::move(list));
    }
    return out;
}

std::vector<ProjectionPoint> plot_projection(const TermDocMatrix& matrix, const Clustering& clustering,
                                             const std::vector<std::string>* truth) {
    if (matrix.rows() < 2) throw DataError("projection needs at least two documents");
    if (clustering.assignments.size() != matrix.rows()) {
        throw DataError("clustering and matrix row counts differ");
    }
    if (truth && truth->size() != matrix.rows()) throw DataError("truth and matrix row counts differ");

    const std::size_t n = std::min<std::size_t>(2, std::min(matrix.rows(), matrix.cols()));
    const auto factors = truncated_svd(matrix, n);
    const auto embedding = project_documents(factors);

    std::vector<ProjectionPoint> out;
    out.reserve(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        ProjectionPoint p;
        p.id = i < matrix.doc_ids.size() ? matrix.doc_ids[i] : std::to_string(i);
        const auto row = static_cast<Eigen::Index>(i);
        p.x = embedding.values(row, 0);
        p.y = embedding.values.cols() > 1 ? embedding.values(row, 1) : 0.0;
        p.cluster = clustering.assignments[i];
        if (truth) p.truth = (*truth)[i];
        out.push_back(std::move(p));
    }
    return out;
}

void write_projection_csv(const std::vector<ProjectionPoint>& points, std::ostream& out) {
    csv::write_row(out, {"id", "x", "y", "cluster", "class"});
    for (const auto& p : points) {
        csv::write_row(out, {p.id, format_number(p.x), format_number(p.y), std::to_string(p.cluster), p.truth});
    }
}

void write_projection_svg(const std::vector<ProjectionPoint>& points, std::ostream& out) {
    constexpr double kPanel = 420.0;
    constexpr double kMargin = 30.0;
    constexpr double kLegend = 120.0;
    const double width = 2 * kPanel + 3 * kMargin;
    const double height = kPanel + 2 * kMargin + kLegend;

    double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
    if (!points.empty()) {
        min_x = max_x = points[0].x;
        min_y = max_y = points[0].y;
        for (const auto& p : points) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    }
    const double span_x = max_x > min_x ? max_x - min_x : 1.0;
    const double span_y = max_y > min_y ? max_y - min_y : 1.0;

    std::map<std::string, std::size_t> classes;
    std::size_t clusters = 0;
    for (const auto& p : points) {
        if (!p.truth.empty()) classes.emplace(p.truth, 0);
        clusters = std::max(clusters, p.cluster + 1);
    }
    std::size_t next = 0;
    for (auto& [label, idx] : classes) idx = next++;

    out << std::fixed << std::setprecision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    auto panel = [&](double left, const std::string& title, bool by_truth) {
        out << "<g>\n<rect x=\"" << left << "\" y=\"" << kMargin << "\" width=\"" << kPanel << "\" height=\""
            << kPanel << "\" fill=\"none\" stroke=\"#999\"/>\n";
        out << "<text x=\"" << left + kPanel / 2 << "\" y=\"" << kMargin - 10
            << "\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
        for (const auto& p : points) {
            const double x = left + 5 + (p.x - min_x) / span_x * (kPanel - 10);
            const double y = kMargin + 5 + (1.0 - (p.y - min_y) / span_y) * (kPanel - 10);
            const char* color = "#bbbbbb";
            if (by_truth) {
                if (!p.truth.empty()) color = kPalette[classes[p.truth] % kPalette.size()];
            } else {
                color = kPalette[p.cluster % kPalette.size()];
            }
            out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"2.5\" fill=\"" << color
                << "\" fill-opacity=\"0.7\"/>\n";
        }
        out << "</g>\n";
    };
    panel(kMargin, classes.empty() ? "Classes (none)" : "Classes", true);
    panel(2 * kMargin + kPanel, "Predicted clusters", false);

    const double legend_top = kPanel + 2 * kMargin + 5;
    auto legend_entry = [&](double left, std::size_t row, const char* color, const std::string& label) {
        const double y = legend_top + static_cast<double>(row % 8) * 14;
        const double x = left + static_cast<double>(row / 8) * 200;
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\"" << color
            << "\"/>\n<text x=\"" << x + 14 << "\" y=\"" << y + 9 << "\">" << xml_escape(label) << "</text>\n";
    };
    for (const auto& [label, idx] : classes) legend_entry(kMargin, idx, kPalette[idx % kPalette.size()], label);
    for (std::size_t c = 0; c < clusters; ++c) {
        legend_entry(2 * kMargin + kPanel, c, kPalette[c % kPalette.size()], "C" + std::to_string(c + 1));
    }
    out << "</svg>\n";
}

}  // namespace scattermesh
