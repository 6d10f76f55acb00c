#include "sslfs/nn.hpp"

#include <cmath>
#include <utility>

#include "sslfs/error.hpp"

namespace sslfs {

std::vector<LayerSpec> mlp_spec(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) {
        throw ContractError("mlp_spec: need at least input and output dims");
    }
    std::vector<LayerSpec> spec;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = (i + 2 == dims.size());
        spec.push_back({dims[i], dims[i + 1], last ? Activation::None : Activation::Relu});
    }
    return spec;
}

FeatureExtractor FeatureExtractor::init(const std::vector<LayerSpec>& spec,
                                        std::uint64_t seed) {
    if (spec.empty()) {
        throw ContractError("FeatureExtractor::init: empty layer spec");
    }
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (spec[i].in_dim < 1 || spec[i].out_dim < 1) {
            throw ContractError("FeatureExtractor::init: layer dims must be >= 1");
        }
        if (i > 0 && spec[i].in_dim != spec[i - 1].out_dim) {
            throw ContractError("FeatureExtractor::init: layer " + std::to_string(i) +
                                " input dim " + std::to_string(spec[i].in_dim) +
                                " does not chain from " + std::to_string(spec[i - 1].out_dim));
        }
    }
    Rng rng(seed);
    FeatureExtractor fe;
    for (const LayerSpec& layer : spec) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
        std::vector<double> weights(layer.in_dim * layer.out_dim);
        for (double& w : weights) w = rng.uniform(-bound, bound);
        fe.layers_.push_back(Layer{Tensor({layer.in_dim, layer.out_dim}, std::move(weights)),
                                   Tensor::zeros(1, layer.out_dim), layer.activation});
    }
    return fe;
}

std::size_t FeatureExtractor::input_dim() const {
    if (layers_.empty()) return 0;
    return layers_.front().weight.rows();
}

std::size_t FeatureExtractor::output_dim() const {
    if (layers_.empty()) return 0;
    return layers_.back().weight.cols();
}

FeatureExtractor FeatureExtractor::watched(GradientTape& tape) const {
    if (frozen_) return *this;
    FeatureExtractor copy = *this;
    for (Layer& layer : copy.layers_) {
        layer.weight = tape.watch(layer.weight);
        layer.bias = tape.watch(layer.bias);
    }
    return copy;
}

Tensor FeatureExtractor::forward(const Tensor& batch) const {
    if (layers_.empty()) {
        throw ContractError("forward through an uninitialized extractor");
    }
    if (batch.cols() != input_dim()) {
        throw DimensionError("extractor expects " + std::to_string(input_dim()) +
                             " input columns, got " + batch.shape().to_string());
    }
    Tensor activations = batch;
    for (const Layer& layer : layers_) {
        activations = add(matmul(activations, layer.weight), layer.bias);
        if (layer.activation == Activation::Relu) {
            activations = relu(activations);
        }
    }
    return activations;
}

void FeatureExtractor::set_layer_params(std::size_t i, Tensor weight, Tensor bias) {
    Layer& layer = layers_.at(i);
    if (weight.shape() != layer.weight.shape() || bias.shape() != layer.bias.shape()) {
        throw DimensionError("set_layer_params: shape change not allowed");
    }
    layer.weight = std::move(weight);
    layer.bias = std::move(bias);
}

Tensor extract_features(const FeatureExtractor& fe, const Tensor& batch) {
    return fe.forward(batch);
}

bool parameters_bit_identical(const FeatureExtractor& a, const FeatureExtractor& b) {
    if (a.layer_count() != b.layer_count()) return false;
    for (std::size_t i = 0; i < a.layer_count(); ++i) {
        const auto wa = a.layer(i).weight.values();
        const auto wb = b.layer(i).weight.values();
        const auto ba = a.layer(i).bias.values();
        const auto bb = b.layer(i).bias.values();
        if (wa.size() != wb.size() || ba.size() != bb.size()) return false;
        for (std::size_t j = 0; j < wa.size(); ++j)
            if (wa[j] != wb[j]) return false;
        for (std::size_t j = 0; j < ba.size(); ++j)
            if (ba[j] != bb[j]) return false;
    }
    return true;
}

ClassifierWeights::ClassifierWeights(Tensor weights, double alpha)
    : weights_(std::move(weights)), alpha_(alpha) {
    if (alpha_ <= 0.0) {
        throw ContractError("ClassifierWeights: alpha must be positive");
    }
}

ClassifierWeights ClassifierWeights::random_init(std::size_t feature_dim,
                                                 std::size_t class_count, double alpha,
                                                 Rng& rng) {
    if (feature_dim < 1 || class_count < 1) {
        throw ContractError("ClassifierWeights::random_init: dims must be >= 1");
    }
    std::vector<double> values(feature_dim * class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
        double sq = 0.0;
        std::vector<double> column(feature_dim);
        for (std::size_t r = 0; r < feature_dim; ++r) {
            column[r] = rng.normal();
            sq += column[r] * column[r];
        }
        const double norm = std::max(std::sqrt(sq), 1e-12);
        for (std::size_t r = 0; r < feature_dim; ++r) values[r * class_count + c] = column[r] / norm;
    }
    return ClassifierWeights(Tensor({feature_dim, class_count}, std::move(values)), alpha);
}

void ClassifierWeights::set_weights(Tensor weights) {
    if (!weights_.empty() && weights.shape() != weights_.shape()) {
        throw DimensionError("ClassifierWeights::set_weights: shape change not allowed");
    }
    weights_ = std::move(weights);
}

ClassifierWeights ClassifierWeights::watched(GradientTape& tape) const {
    ClassifierWeights copy = *this;
    copy.weights_ = tape.watch(weights_);
    return copy;
}

Tensor normalize_columns(const Tensor& weights, double eps) {
    return transpose(l2_normalize_rows(transpose(weights), eps));
}

Tensor cosine_scores(const Tensor& weights, double alpha, const Tensor& features) {
    if (features.cols() != weights.rows()) {
        throw DimensionError("cosine_scores: feature dim " + features.shape().to_string() +
                             " does not match weights " + weights.shape().to_string());
    }
    return scale(matmul(l2_normalize_rows(features), normalize_columns(weights)), alpha);
}

Tensor cosine_scores(const ClassifierWeights& cw, const Tensor& features) {
    return cosine_scores(cw.weights(), cw.alpha(), features);
}

std::vector<std::size_t> predict_classes(const ClassifierWeights& cw, const Tensor& features) {
    const Tensor scores = cosine_scores(cw.weights().detached(), cw.alpha(), features.detached());
    std::vector<std::size_t> labels(scores.rows());
    const auto sv = scores.values();
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.cols(); ++c) {
            if (sv[r * scores.cols() + c] > sv[r * scores.cols() + best]) best = c;
        }
        labels[r] = best;
    }
    return labels;
}

}  // namespace sslfs
