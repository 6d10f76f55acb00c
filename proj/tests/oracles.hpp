#ifndef SSLFS_TESTS_ORACLES_HPP
#define SSLFS_TESTS_ORACLES_HPP

// Naive reference implementations used as independent oracles. Everything
// here is plain loops over std::vector<double>; none of it goes through
// Tensor or the tape, so agreement with the library is meaningful.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

using Matrix = std::vector<std::vector<double>>;  // row-major rows

inline std::vector<double> normalize(const std::vector<double>& v, double eps = 1e-12) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double denom = std::max(std::sqrt(sq), eps);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / denom;
    return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
    return total;
}

// Forward pass of a relu MLP, one neuron at a time.
// layers[i] = {weights (in x out, row-major), biases (out), relu_flag}
struct NaiveLayer {
    std::vector<double> weights;
    std::vector<double> biases;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    bool relu = false;
};

inline std::vector<double> naive_mlp_forward(const std::vector<NaiveLayer>& layers,
                                             std::vector<double> input) {
    for (const NaiveLayer& layer : layers) {
        std::vector<double> next(layer.out_dim, 0.0);
        for (std::size_t j = 0; j < layer.out_dim; ++j) {
            double acc = layer.biases[j];
            for (std::size_t i = 0; i < layer.in_dim; ++i) {
                acc += input[i] * layer.weights[i * layer.out_dim + j];
            }
            next[j] = layer.relu && acc < 0.0 ? 0.0 : acc;
        }
        input = std::move(next);
    }
    return input;
}

// Self-compacting softmax loss by the book: per instance, per class, per
// dimension. `weight_columns[i]` is prototype w_i; features are raw rows.
inline double reference_ssl_loss(const std::vector<std::vector<double>>& weight_columns,
                                 double alpha, const Matrix& features,
                                 const std::vector<std::size_t>& labels,
                                 bool alpha_in_gap = true) {
    const std::size_t class_count = weight_columns.size();
    std::vector<std::vector<double>> w_hat(class_count);
    for (std::size_t i = 0; i < class_count; ++i) w_hat[i] = normalize(weight_columns[i]);

    double total = 0.0;
    for (std::size_t m = 0; m < features.size(); ++m) {
        const std::vector<double> phi = normalize(features[m]);
        const std::size_t c = labels[m];

        std::vector<double> gap_scores(class_count);
        for (std::size_t i = 0; i < class_count; ++i) {
            gap_scores[i] = dot(w_hat[i], phi);
            if (alpha_in_gap) gap_scores[i] *= alpha;
        }

        std::vector<double> adjusted_scores(class_count);
        for (std::size_t i = 0; i < class_count; ++i) {
            if (i == c) {
                adjusted_scores[i] = alpha * dot(w_hat[c], phi);
                continue;
            }
            const double gap = std::abs(gap_scores[i] - gap_scores[c]);
            std::vector<double> pulled(phi.size());
            for (std::size_t k = 0; k < pulled.size(); ++k) {
                pulled[k] = gap * w_hat[c][k] + w_hat[i][k];
            }
            adjusted_scores[i] = alpha * dot(normalize(pulled), phi);
        }

        double hi = adjusted_scores[0];
        for (double s : adjusted_scores) hi = std::max(hi, s);
        double sum_exp = 0.0;
        for (double s : adjusted_scores) sum_exp += std::exp(s - hi);
        const double lse = hi + std::log(sum_exp);
        const double numerator = alpha * dot(w_hat[c], phi);
        total += lse - numerator;
    }
    return total / static_cast<double>(features.size());
}

// Plain cosine softmax cross-entropy.
inline double reference_sl_loss(const std::vector<std::vector<double>>& weight_columns,
                                double alpha, const Matrix& features,
                                const std::vector<std::size_t>& labels) {
    const std::size_t class_count = weight_columns.size();
    std::vector<std::vector<double>> w_hat(class_count);
    for (std::size_t i = 0; i < class_count; ++i) w_hat[i] = normalize(weight_columns[i]);

    double total = 0.0;
    for (std::size_t m = 0; m < features.size(); ++m) {
        const std::vector<double> phi = normalize(features[m]);
        std::vector<double> scores(class_count);
        for (std::size_t i = 0; i < class_count; ++i) scores[i] = alpha * dot(w_hat[i], phi);
        double hi = scores[0];
        for (double s : scores) hi = std::max(hi, s);
        double sum_exp = 0.0;
        for (double s : scores) sum_exp += std::exp(s - hi);
        total += hi + std::log(sum_exp) - scores[labels[m]];
    }
    return total / static_cast<double>(features.size());
}

inline double angle_deg(const std::vector<double>& a, const std::vector<double>& b) {
    const double cosine =
        std::clamp(dot(normalize(a), normalize(b)), -1.0, 1.0);
    return std::acos(cosine) * 180.0 / 3.14159265358979323846;
}

}  // namespace oracles

#endif
