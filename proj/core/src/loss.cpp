#include "sslfs/loss.hpp"

#include <string>

#include "sslfs/error.hpp"

namespace sslfs {

namespace {

void check_labels(const std::vector<std::size_t>& labels, std::size_t class_count,
                  std::size_t batch_rows) {
    if (labels.size() != batch_rows) {
        throw DimensionError("loss: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(batch_rows) + " feature rows");
    }
    for (std::size_t label : labels) {
        if (label >= class_count) {
            throw IndexError("loss: label " + std::to_string(label) + " out of range for " +
                             std::to_string(class_count) + " classes");
        }
    }
}

Tensor one_hot_column(std::size_t index, std::size_t length) {
    std::vector<double> values(length, 0.0);
    values[index] = 1.0;
    return Tensor({length, 1}, std::move(values));
}

// Adjusted prototypes for one instance, built from the already normalized
// weight matrix and feature row so batch callers can share those nodes.
Tensor adjust_normalized(const Tensor& weights_hat, const Tensor& feature_hat, double alpha,
                         std::size_t target_class, const LossOptions& opts) {
    const std::size_t class_count = weights_hat.cols();
    const Tensor pick_c = one_hot_column(target_class, class_count);
    const Tensor target = matmul(weights_hat, pick_c);  // w_c_hat, d x 1

    Tensor gap_scores = matmul(feature_hat, weights_hat);  // 1 x C cosines
    if (opts.alpha_in_gap) {
        gap_scores = scale(gap_scores, alpha);
    }
    const Tensor target_score = matmul(gap_scores, pick_c);        // 1 x 1
    const Tensor gap = abs(sub(gap_scores, target_score));         // 1 x C, gap[c] == 0
    const Tensor pulled = add(weights_hat, matmul(target, gap));   // columns w_i_hat + gap_i*w_c_hat
    // Renormalizing would perturb column c by a rounding ulp, so it is
    // written back verbatim; its gap is identically zero, which also makes
    // this the correct gradient routing.
    return set_column(normalize_columns(pulled), target_class, target);
}

}  // namespace

AdjustedWeights adjust_weights(const ClassifierWeights& cw, const Tensor& feature_row,
                               std::size_t target_class, const LossOptions& opts) {
    if (feature_row.rows() != 1 || feature_row.cols() != cw.feature_dim()) {
        throw DimensionError("adjust_weights: feature row " + feature_row.shape().to_string() +
                             " does not match feature dim " + std::to_string(cw.feature_dim()));
    }
    if (target_class >= cw.class_count()) {
        throw IndexError("adjust_weights: class " + std::to_string(target_class) +
                         " out of range for " + std::to_string(cw.class_count()));
    }
    const Tensor weights_hat = normalize_columns(cw.weights());
    const Tensor feature_hat = l2_normalize_rows(feature_row);
    return AdjustedWeights{
        adjust_normalized(weights_hat, feature_hat, cw.alpha(), target_class, opts),
        target_class};
}

Tensor ssl_probabilities(const ClassifierWeights& cw, const Tensor& feature_row,
                         std::size_t target_class, const LossOptions& opts) {
    const AdjustedWeights adjusted = adjust_weights(cw, feature_row, target_class, opts);
    const Tensor feature_hat = l2_normalize_rows(feature_row);
    Tensor scores = scale(matmul(feature_hat, adjusted.weights), cw.alpha());
    return exp(sub(scores, log_sum_exp_rows(scores)));
}

Tensor ssl_loss(const ClassifierWeights& cw, const Tensor& features,
                const std::vector<std::size_t>& labels, const LossOptions& opts) {
    if (features.rows() < 1) {
        throw ContractError("ssl_loss: empty batch");
    }
    if (features.cols() != cw.feature_dim()) {
        throw DimensionError("ssl_loss: features " + features.shape().to_string() +
                             " vs feature dim " + std::to_string(cw.feature_dim()));
    }
    check_labels(labels, cw.class_count(), features.rows());

    const Tensor weights_hat = normalize_columns(cw.weights());
    const Tensor features_hat = l2_normalize_rows(features);
    const double alpha = cw.alpha();

    std::vector<Tensor> per_instance;
    per_instance.reserve(features.rows());
    for (std::size_t j = 0; j < features.rows(); ++j) {
        const Tensor feature_hat = row_gather(features_hat, {j});
        Tensor adjusted =
            adjust_normalized(weights_hat, feature_hat, alpha, labels[j], opts);
        if (opts.detach_adjustment) {
            adjusted = adjusted.detached();
        }
        const Tensor denom =
            log_sum_exp_rows(scale(matmul(feature_hat, adjusted), alpha));
        // Numerator scores the unadjusted target prototype (equal to the
        // adjusted column c, so this is also plain cross-entropy).
        const Tensor target = matmul(weights_hat, one_hot_column(labels[j], cw.class_count()));
        const Tensor numer = scale(matmul(feature_hat, target), alpha);
        per_instance.push_back(sub(denom, numer));
    }
    return scale(sum_scalars(per_instance), 1.0 / static_cast<double>(features.rows()));
}

Tensor sl_loss(const ClassifierWeights& cw, const Tensor& features,
               const std::vector<std::size_t>& labels) {
    if (features.rows() < 1) {
        throw ContractError("sl_loss: empty batch");
    }
    if (features.cols() != cw.feature_dim()) {
        throw DimensionError("sl_loss: features " + features.shape().to_string() +
                             " vs feature dim " + std::to_string(cw.feature_dim()));
    }
    check_labels(labels, cw.class_count(), features.rows());

    const Tensor scores = cosine_scores(cw, features);
    const Tensor picked = pick_per_row(scores, labels);
    return mean(sub(log_sum_exp_rows(scores), picked));
}

}  // namespace sslfs
