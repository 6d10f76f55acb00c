#ifndef SSLFS_ANALYSIS_HPP
#define SSLFS_ANALYSIS_HPP

#include <array>
#include <filesystem>
#include <vector>

#include "sslfs/data.hpp"
#include "sslfs/nn.hpp"

namespace sslfs {

// Pairwise angles between classifier prototypes (weight columns), in
// degrees. Invariant to positive column rescaling.
struct AngleStats {
    std::vector<double> angles_deg;  // C*(C-1)/2 entries, upper-triangle order
    double mean_deg = 0.0;
    double std_deg = 0.0;                    // population std
    std::array<std::size_t, 36> histogram{};  // 5-degree bins over [0, 180]
};

AngleStats prototype_angles(const ClassifierWeights& cw);
AngleStats pairwise_column_angles(const Tensor& columns);

// Angular compactness of labeled embeddings: all statistics live on the
// unit sphere because both losses score directions only.
struct OccupancyStats {
    double within_class_deg = 0.0;   // mean angle(sample, own class centroid)
    double between_class_deg = 0.0;  // mean pairwise centroid angle
    double compactness_ratio = 0.0;  // within / between
};

OccupancyStats occupancy_stats(const Tensor& features, const std::vector<std::size_t>& labels);

// One `<label> <d floats>` line per sample, shortest round-trip precision.
void export_embeddings(const FeatureExtractor& fe, const Dataset& ds,
                       const std::filesystem::path& path);

}  // namespace sslfs

#endif
