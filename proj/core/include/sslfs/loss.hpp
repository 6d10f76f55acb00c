#ifndef SSLFS_LOSS_HPP
#define SSLFS_LOSS_HPP

#include <vector>

#include "sslfs/nn.hpp"
#include "sslfs/tensor.hpp"

namespace sslfs {

struct LossOptions {
    // When true, the adjusted prototypes enter the loss as constants: the
    // denominator stops feeding gradient back through the adjustment. The
    // default keeps the whole adjustment inside the computation graph.
    bool detach_adjustment = false;
    // Whether the score gap that drives the adjustment is measured with the
    // amplification factor applied (gap = |alpha*cos_i - alpha*cos_c|) or on
    // bare cosines.
    bool alpha_in_gap = true;
};

// One instance's adjusted prototype matrix. Every column has unit L2 norm
// and column `target_class` is exactly the normalized target prototype.
struct AdjustedWeights {
    Tensor weights;  // d x C
    std::size_t target_class = 0;
};

// Pull every prototype toward the target prototype by the instance's score
// gap: w_i_dot = normalize(|s_i - s_c| * w_c_hat + w_i_hat). The decision
// boundary between w_i and w_c (their angular bisector) thereby moves
// toward w_c, and backprop then pulls the instance's feature after it.
AdjustedWeights adjust_weights(const ClassifierWeights& cw, const Tensor& feature_row,
                               std::size_t target_class, const LossOptions& opts = {});

// Softmax over the amplified cosine scores against the adjusted prototypes.
Tensor ssl_probabilities(const ClassifierWeights& cw, const Tensor& feature_row,
                         std::size_t target_class, const LossOptions& opts = {});

// Self-compacting softmax loss: batch mean of
//   -log( exp(s(w_c, phi)) / sum_i exp(s(w_i_dot, phi)) )
// with the numerator scored against the unadjusted (normalized) target
// prototype. Each instance gets its own adjusted prototype set.
Tensor ssl_loss(const ClassifierWeights& cw, const Tensor& features,
                const std::vector<std::size_t>& labels, const LossOptions& opts = {});

// Plain cosine softmax cross-entropy baseline (no adjustment).
Tensor sl_loss(const ClassifierWeights& cw, const Tensor& features,
               const std::vector<std::size_t>& labels);

}  // namespace sslfs

#endif
