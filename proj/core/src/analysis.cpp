#include "sslfs/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "sslfs/error.hpp"

namespace sslfs {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double angle_between_deg(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max(std::sqrt(na) * std::sqrt(nb), 1e-300);
    const double cosine = std::clamp(dot / denom, -1.0, 1.0);
    return std::acos(cosine) * kRadToDeg;
}

std::vector<std::vector<double>> columns_of(const Tensor& matrix) {
    std::vector<std::vector<double>> cols(matrix.cols(), std::vector<double>(matrix.rows()));
    for (std::size_t c = 0; c < matrix.cols(); ++c)
        for (std::size_t r = 0; r < matrix.rows(); ++r) cols[c][r] = matrix.at(r, c);
    return cols;
}

std::string format_double(double value) {
    char buffer[32];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, end);
}

}  // namespace

AngleStats pairwise_column_angles(const Tensor& columns) {
    if (columns.cols() < 2) {
        throw ContractError("pairwise_column_angles: need at least two columns");
    }
    const auto cols = columns_of(columns);
    AngleStats stats;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (std::size_t j = i + 1; j < cols.size(); ++j) {
            stats.angles_deg.push_back(angle_between_deg(cols[i], cols[j]));
        }
    }
    double total = 0.0;
    for (double a : stats.angles_deg) {
        total += a;
        const auto bin = std::min<std::size_t>(35, static_cast<std::size_t>(a / 5.0));
        ++stats.histogram[bin];
    }
    stats.mean_deg = total / static_cast<double>(stats.angles_deg.size());
    double sq = 0.0;
    for (double a : stats.angles_deg) sq += (a - stats.mean_deg) * (a - stats.mean_deg);
    stats.std_deg = std::sqrt(sq / static_cast<double>(stats.angles_deg.size()));
    return stats;
}

AngleStats prototype_angles(const ClassifierWeights& cw) {
    return pairwise_column_angles(cw.weights());
}

OccupancyStats occupancy_stats(const Tensor& features, const std::vector<std::size_t>& labels) {
    if (labels.size() != features.rows()) {
        throw DimensionError("occupancy_stats: " + std::to_string(labels.size()) +
                             " labels for " + features.shape().to_string());
    }
    std::size_t num_classes = 0;
    for (std::size_t label : labels) num_classes = std::max(num_classes, label + 1);
    if (num_classes < 2) {
        throw ContractError("occupancy_stats: need at least two classes");
    }

    const Tensor normalized = l2_normalize_rows(features.detached());
    const auto nv = normalized.values();
    const std::size_t dim = features.cols();

    std::vector<std::vector<double>> centroids(num_classes, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const std::size_t cls = labels[r];
        ++counts[cls];
        for (std::size_t d = 0; d < dim; ++d) centroids[cls][d] += nv[r * dim + d];
    }
    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        if (counts[cls] < 2) {
            throw ContractError("occupancy_stats: class " + std::to_string(cls) +
                                " has fewer than 2 samples");
        }
        double sq = 0.0;
        for (double v : centroids[cls]) sq += v * v;
        const double norm = std::max(std::sqrt(sq), 1e-300);
        for (double& v : centroids[cls]) v /= norm;
    }

    OccupancyStats stats;
    std::vector<double> sample(dim);
    double within_total = 0.0;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        std::copy_n(&nv[r * dim], dim, sample.begin());
        within_total += angle_between_deg(sample, centroids[labels[r]]);
    }
    stats.within_class_deg = within_total / static_cast<double>(features.rows());

    double between_total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < num_classes; ++i) {
        for (std::size_t j = i + 1; j < num_classes; ++j) {
            between_total += angle_between_deg(centroids[i], centroids[j]);
            ++pairs;
        }
    }
    stats.between_class_deg = between_total / static_cast<double>(pairs);
    stats.compactness_ratio =
        stats.between_class_deg > 0.0 ? stats.within_class_deg / stats.between_class_deg : 0.0;
    return stats;
}

void export_embeddings(const FeatureExtractor& fe, const Dataset& ds,
                       const std::filesystem::path& path) {
    if (ds.input_dim() != fe.input_dim()) {
        throw DimensionError("export_embeddings: dataset dim " +
                             std::to_string(ds.input_dim()) + " vs extractor input " +
                             std::to_string(fe.input_dim()));
    }
    const Tensor embedded = fe.forward(ds.features.detached());
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open embedding export: " + path.string());
    }
    const auto ev = embedded.values();
    const std::size_t dim = embedded.cols();
    for (std::size_t r = 0; r < embedded.rows(); ++r) {
        out << ds.labels[r];
        for (std::size_t d = 0; d < dim; ++d) out << ' ' << format_double(ev[r * dim + d]);
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

}  // namespace sslfs
