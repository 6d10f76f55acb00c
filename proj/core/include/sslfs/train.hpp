#ifndef SSLFS_TRAIN_HPP
#define SSLFS_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sslfs/data.hpp"
#include "sslfs/loss.hpp"
#include "sslfs/nn.hpp"

namespace sslfs {

enum class LossKind { Ssl, Sl };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& text);

enum class Stage2Init { Random, Proto };

// Hyperparameters of the two-stage protocol. Defaults: stage 1 trains 200
// epochs with batch 200, SGD lr 0.1 decayed by 0.1 every 50 epochs; stage 2
// runs 100 iterations with batch 4 at lr 0.01.
struct TrainConfig {
    LossKind stage1_loss = LossKind::Ssl;
    std::size_t epochs = 200;
    std::size_t batch_size = 200;
    double lr = 0.1;
    double lr_decay_factor = 0.1;
    std::size_t lr_decay_every = 50;
    double momentum = 0.0;       // off by default
    double weight_decay = 0.0;   // off by default

    LossKind stage2_loss = LossKind::Ssl;
    std::size_t stage2_iterations = 100;
    std::size_t stage2_batch_size = 4;
    double stage2_lr = 0.01;
    Stage2Init stage2_init = Stage2Init::Random;

    double alpha = 10.0;
    std::uint64_t seed = 0;
    bool detach_adjustment = false;
    bool alpha_in_gap = true;

    // Extractor architecture: input dim comes from the dataset.
    std::vector<std::size_t> hidden_dims{32};
    std::size_t feature_dim = 8;

    LossOptions loss_options() const { return {detach_adjustment, alpha_in_gap}; }
};

void validate(const TrainConfig& cfg);

// Canonical `key = value` dump; basis of config digests and snapshots.
std::string canonical_config_text(const TrainConfig& cfg);

// Stepwise-decayed learning rate: lr * factor^floor(epoch / every).
double step_lr(const TrainConfig& cfg, std::size_t epoch);

// Plain SGD update p - lr*g as a detached tensor.
Tensor sgd_step(const Tensor& param, const Tensor& grad, double lr);

// SGD with optional momentum and weight decay; one velocity slot per
// parameter, keyed by index.
class SgdOptimizer {
public:
    SgdOptimizer(double momentum, double weight_decay, std::size_t slots);
    Tensor step(std::size_t slot, const Tensor& param, const Tensor& grad, double lr);

private:
    double momentum_;
    double weight_decay_;
    std::vector<std::vector<double>> velocity_;
};

struct PretrainResult {
    FeatureExtractor extractor;
    ClassifierWeights classifier;
    std::vector<double> epoch_losses;
    std::vector<std::size_t> class_order;  // classifier column -> dataset class
};

// Stage 1: mini-batch SGD over the given classes' samples, training the
// extractor and the base classifier jointly with the configured loss.
// Classifier columns are re-normalized to unit length after every step.
PretrainResult pretrain(const TrainConfig& cfg, const Dataset& ds,
                        const std::vector<std::size_t>& train_classes);

// Stage 2: fit a task classifier on episode support features. The
// extractor must be frozen; its parameters cannot appear on the tape.
ClassifierWeights fit_episode_classifier(const FeatureExtractor& fe,
                                         const Tensor& support_features,
                                         const std::vector<std::size_t>& support_labels,
                                         std::size_t way, const TrainConfig& cfg, Rng& rng);

struct EvalReport {
    std::vector<double> per_episode_accuracy;
    double mean = 0.0;
    double ci95_half_width = 0.0;
    std::size_t episode_count = 0;
    EpisodeSpec episode_spec;
    std::uint64_t seed = 0;
    std::string config_digest;
};

// Mean accuracy with normal-approximation 95% half-width
// 1.96 * sample_std / sqrt(n) (n-1 denominator; 0 when n < 2).
double ci95_half_width(const std::vector<double>& values);

// Episodic evaluation: sample -> fit -> classify queries by argmax cosine
// score (the adjustment needs the true label, so it never applies at
// inference). Episode e uses sub-seed mix(seed, e), making results
// independent of execution order and of `jobs`.
EvalReport evaluate(const FeatureExtractor& fe, const Dataset& ds,
                    const std::vector<std::size_t>& classes, const EpisodeSpec& es,
                    std::size_t n_episodes, const TrainConfig& cfg, std::uint64_t seed,
                    std::size_t jobs = 1);

}  // namespace sslfs

#endif
