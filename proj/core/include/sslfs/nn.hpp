#ifndef SSLFS_NN_HPP
#define SSLFS_NN_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sslfs/rng.hpp"
#include "sslfs/tensor.hpp"

namespace sslfs {

enum class Activation : std::uint8_t { None = 0, Relu = 1 };

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::None;
};

// Relu on hidden layers, linear output: dims = [D, h1, ..., d].
std::vector<LayerSpec> mlp_spec(const std::vector<std::size_t>& dims);

// Multilayer perceptron feature embedding. While frozen, forward passes
// never put the parameters on a tape, so training an episode classifier on
// top cannot touch them.
class FeatureExtractor {
public:
    struct Layer {
        Tensor weight;  // in_dim x out_dim
        Tensor bias;    // 1 x out_dim
        Activation activation = Activation::None;
    };

    FeatureExtractor() = default;

    // Xavier-uniform weights (+-sqrt(6/(in+out))), zero biases, deterministic
    // for a fixed (spec, seed).
    static FeatureExtractor init(const std::vector<LayerSpec>& spec, std::uint64_t seed);

    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    std::size_t input_dim() const;
    std::size_t output_dim() const;

    bool frozen() const { return frozen_; }
    void set_frozen(bool frozen) { frozen_ = frozen; }

    // Copy whose parameters are watched on the tape. Frozen extractors come
    // back untouched (parameters stay constants).
    FeatureExtractor watched(GradientTape& tape) const;

    Tensor forward(const Tensor& batch) const;

    void set_layer_params(std::size_t i, Tensor weight, Tensor bias);

private:
    std::vector<Layer> layers_;
    bool frozen_ = false;
};

Tensor extract_features(const FeatureExtractor& fe, const Tensor& batch);

// Exact parameter comparison, used to verify the stage-2 freeze contract.
bool parameters_bit_identical(const FeatureExtractor& a, const FeatureExtractor& b);

// Cosine classifier head: weight matrix W (d x C, one column per class
// prototype) and the score amplification factor alpha. No bias term exists.
// Columns are kept unit length by the training loops; scoring normalizes
// again regardless, so scores depend on directions only.
class ClassifierWeights {
public:
    ClassifierWeights() = default;
    ClassifierWeights(Tensor weights, double alpha);

    // Unit-norm random columns from the given generator.
    static ClassifierWeights random_init(std::size_t feature_dim, std::size_t class_count,
                                         double alpha, Rng& rng);

    std::size_t feature_dim() const { return weights_.rows(); }
    std::size_t class_count() const { return weights_.cols(); }
    double alpha() const { return alpha_; }
    const Tensor& weights() const { return weights_; }
    void set_weights(Tensor weights);

    ClassifierWeights watched(GradientTape& tape) const;

private:
    Tensor weights_;
    double alpha_ = 10.0;
};

// Column-normalized copy of a weight matrix (differentiable).
Tensor normalize_columns(const Tensor& weights, double eps = 1e-12);

// Amplified cosine scores: score[j][i] = alpha * <w_i_hat, feat_j_hat>.
// Both the weight columns and the feature rows are L2-normalized inside,
// so every entry lies in [-alpha, alpha].
Tensor cosine_scores(const ClassifierWeights& cw, const Tensor& features);
Tensor cosine_scores(const Tensor& weights, double alpha, const Tensor& features);

// Argmax cosine-score predictions, one label per feature row.
std::vector<std::size_t> predict_classes(const ClassifierWeights& cw, const Tensor& features);

// ---- Checkpoint file format -------------------------------------------------
//
// Binary, little-endian, magic "SSLCKPT\x01":
//   u32 layer_count
//   per layer: u32 in_dim, u32 out_dim, u8 activation,
//              in*out f64 weights (row-major), out f64 biases
//   u32 class_count, u32 feature_dim, f64 alpha,
//   feature_dim*class_count f64 classifier weights (column-major)
// Round-trips are bit-exact.

struct Checkpoint {
    FeatureExtractor extractor;
    ClassifierWeights classifier;
};

void save_checkpoint(const std::filesystem::path& path, const FeatureExtractor& fe,
                     const ClassifierWeights& cw);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sslfs

#endif
