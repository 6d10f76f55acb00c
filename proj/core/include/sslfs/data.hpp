#ifndef SSLFS_DATA_HPP
#define SSLFS_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sslfs/rng.hpp"
#include "sslfs/tensor.hpp"

namespace sslfs {

struct Dataset {
    Tensor features;  // n x D
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;

    std::size_t sample_count() const { return features.rows(); }
    std::size_t input_dim() const { return features.cols(); }
    std::size_t class_count() const { return class_names.size(); }

    // Sample indices belonging to one class.
    std::vector<std::size_t> indices_of_class(std::size_t label) const;
};

struct SyntheticSpec {
    std::size_t num_classes = 30;
    std::size_t samples_per_class = 60;
    std::size_t input_dim = 16;
    double center_scale = 4.0;
    double noise_sigma = 1.0;
};

// Gaussian clusters around class centers drawn uniformly on the sphere of
// radius center_scale. All centers are drawn before any sample noise, so
// two runs with the same seed but different noise_sigma share centers.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Disjoint class-level partition (splits are never by sample).
struct SplitSpec {
    std::vector<std::size_t> base_classes;
    std::vector<std::size_t> val_classes;
    std::vector<std::size_t> novel_classes;
};

// Random class partition by fractions (must sum to 1); deterministic per seed.
SplitSpec split_by_class(const Dataset& ds, double base_fraction, double val_fraction,
                         double novel_fraction, std::uint64_t seed);
// Explicit class lists; ContractError if they overlap or index out of range.
SplitSpec split_by_class(const Dataset& ds, std::vector<std::size_t> base,
                         std::vector<std::size_t> val, std::vector<std::size_t> novel);

struct EpisodeSpec {
    std::size_t way = 5;      // N
    std::size_t shot = 5;     // K
    std::size_t queries = 16; // Q per class
};

// One N-way K-shot task. Labels are re-indexed to 0..N-1 in sampled order;
// class_map[i] is episode class i's original dataset class.
struct Episode {
    Tensor support_features;
    std::vector<std::size_t> support_labels;
    Tensor query_features;
    std::vector<std::size_t> query_labels;
    std::vector<std::size_t> class_map;
};

// N classes without replacement from `classes`, then K+Q distinct samples
// per class: first K to the support set, remaining Q to the query set.
Episode sample_episode(const Dataset& ds, const std::vector<std::size_t>& classes,
                       const EpisodeSpec& spec, Rng& rng);

// ---- FSDS text format ---------------------------------------------------
//
//   line 1: FSDS 1 <n> <D> <num_classes>
//   line 2: class names, whitespace separated
//   then n lines: <label-index> <D decimal floats>
// Floats are serialized with shortest round-trip precision, so
// save -> load -> save is byte-identical.

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace sslfs

#endif
