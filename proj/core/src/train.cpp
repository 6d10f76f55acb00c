#include "sslfs/train.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "sslfs/error.hpp"

namespace sslfs {

namespace {

// Sub-seed streams carved out of TrainConfig::seed.
constexpr std::uint64_t kExtractorStream = 0x0101;
constexpr std::uint64_t kClassifierStream = 0x0202;
constexpr std::uint64_t kShuffleStream = 0x0303;

std::string format_double(double value) {
    char buffer[32];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, end);
}

Tensor gather_rows_constant(const Tensor& source, const std::vector<std::size_t>& rows) {
    const std::size_t cols = source.cols();
    const auto sv = source.values();
    std::vector<double> out(rows.size() * cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(&sv[rows[r] * cols], cols, &out[r * cols]);
    }
    return Tensor({rows.size(), cols}, std::move(out));
}

Tensor loss_of_kind(LossKind kind, const ClassifierWeights& cw, const Tensor& features,
                    const std::vector<std::size_t>& labels, const LossOptions& opts) {
    if (kind == LossKind::Ssl) return ssl_loss(cw, features, labels, opts);
    return sl_loss(cw, features, labels);
}

// Non-graph column renormalization applied after every classifier update.
Tensor renormalized_columns(const Tensor& weights) {
    return normalize_columns(weights.detached());
}

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::Ssl ? "ssl" : "sl"; }

LossKind loss_kind_from_string(const std::string& text) {
    if (text == "ssl") return LossKind::Ssl;
    if (text == "sl") return LossKind::Sl;
    throw ContractError("unknown loss kind '" + text + "' (expected ssl or sl)");
}

void validate(const TrainConfig& cfg) {
    if (cfg.batch_size < 1 || cfg.stage2_batch_size < 1) {
        throw ContractError("TrainConfig: batch sizes must be >= 1");
    }
    if (cfg.lr <= 0.0 || cfg.stage2_lr <= 0.0) {
        throw ContractError("TrainConfig: learning rates must be positive");
    }
    if (cfg.lr_decay_factor <= 0.0 || cfg.lr_decay_factor > 1.0) {
        throw ContractError("TrainConfig: lr_decay_factor must be in (0, 1]");
    }
    if (cfg.lr_decay_every < 1) {
        throw ContractError("TrainConfig: lr_decay_every must be >= 1");
    }
    if (cfg.alpha <= 0.0) {
        throw ContractError("TrainConfig: alpha must be positive");
    }
    if (cfg.feature_dim < 1) {
        throw ContractError("TrainConfig: feature_dim must be >= 1");
    }
}

std::string canonical_config_text(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "stage1.loss = " << to_string(cfg.stage1_loss) << '\n'
        << "stage1.epochs = " << cfg.epochs << '\n'
        << "stage1.batch = " << cfg.batch_size << '\n'
        << "stage1.lr = " << format_double(cfg.lr) << '\n'
        << "stage1.lr_decay_factor = " << format_double(cfg.lr_decay_factor) << '\n'
        << "stage1.lr_decay_every = " << cfg.lr_decay_every << '\n'
        << "stage1.momentum = " << format_double(cfg.momentum) << '\n'
        << "stage1.weight_decay = " << format_double(cfg.weight_decay) << '\n'
        << "stage2.loss = " << to_string(cfg.stage2_loss) << '\n'
        << "stage2.iterations = " << cfg.stage2_iterations << '\n'
        << "stage2.batch = " << cfg.stage2_batch_size << '\n'
        << "stage2.lr = " << format_double(cfg.stage2_lr) << '\n'
        << "stage2.init = " << (cfg.stage2_init == Stage2Init::Random ? "random" : "proto")
        << '\n'
        << "alpha = " << format_double(cfg.alpha) << '\n'
        << "seed = " << cfg.seed << '\n'
        << "ssl.detach_adjustment = " << (cfg.detach_adjustment ? "true" : "false") << '\n'
        << "ssl.alpha_in_gap = " << (cfg.alpha_in_gap ? "true" : "false") << '\n';
    out << "extractor.hidden =";
    for (std::size_t h : cfg.hidden_dims) out << ' ' << h;
    out << '\n' << "extractor.feature_dim = " << cfg.feature_dim << '\n';
    return out.str();
}

double step_lr(const TrainConfig& cfg, std::size_t epoch) {
    const auto steps = static_cast<double>(epoch / cfg.lr_decay_every);
    return cfg.lr * std::pow(cfg.lr_decay_factor, steps);
}

Tensor sgd_step(const Tensor& param, const Tensor& grad, double lr) {
    if (param.shape() != grad.shape()) {
        throw DimensionError("sgd_step: param " + param.shape().to_string() + " vs grad " +
                             grad.shape().to_string());
    }
    const auto pv = param.values();
    const auto gv = grad.values();
    std::vector<double> out(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) out[i] = pv[i] - lr * gv[i];
    return Tensor(param.shape(), std::move(out));
}

SgdOptimizer::SgdOptimizer(double momentum, double weight_decay, std::size_t slots)
    : momentum_(momentum), weight_decay_(weight_decay), velocity_(slots) {}

Tensor SgdOptimizer::step(std::size_t slot, const Tensor& param, const Tensor& grad,
                          double lr) {
    if (param.shape() != grad.shape()) {
        throw DimensionError("SgdOptimizer::step: param " + param.shape().to_string() +
                             " vs grad " + grad.shape().to_string());
    }
    if (momentum_ == 0.0 && weight_decay_ == 0.0) {
        return sgd_step(param, grad, lr);
    }
    const auto pv = param.values();
    const auto gv = grad.values();
    std::vector<double>& vel = velocity_.at(slot);
    if (vel.empty()) vel.assign(pv.size(), 0.0);
    std::vector<double> out(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) {
        vel[i] = momentum_ * vel[i] + gv[i] + weight_decay_ * pv[i];
        out[i] = pv[i] - lr * vel[i];
    }
    return Tensor(param.shape(), std::move(out));
}

PretrainResult pretrain(const TrainConfig& cfg, const Dataset& ds,
                        const std::vector<std::size_t>& train_classes) {
    validate(cfg);
    if (train_classes.empty()) {
        throw ContractError("pretrain: empty class set");
    }

    // Classifier column i serves the i-th class in sorted order.
    std::vector<std::size_t> class_order = train_classes;
    std::sort(class_order.begin(), class_order.end());
    if (std::adjacent_find(class_order.begin(), class_order.end()) != class_order.end()) {
        throw ContractError("pretrain: duplicate class in train set");
    }
    std::vector<std::size_t> column_of(ds.class_count(), ds.class_count());
    for (std::size_t i = 0; i < class_order.size(); ++i) {
        if (class_order[i] >= ds.class_count()) {
            throw IndexError("pretrain: class " + std::to_string(class_order[i]) +
                             " out of range");
        }
        column_of[class_order[i]] = i;
    }

    std::vector<std::size_t> sample_indices;
    std::vector<std::size_t> sample_columns;
    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        const std::size_t column = column_of[ds.labels[i]];
        if (column < class_order.size()) {
            sample_indices.push_back(i);
            sample_columns.push_back(column);
        }
    }
    if (sample_indices.empty()) {
        throw ContractError("pretrain: train classes own no samples");
    }

    std::vector<std::size_t> dims;
    dims.push_back(ds.input_dim());
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(cfg.feature_dim);

    PretrainResult result;
    result.class_order = class_order;
    result.extractor =
        FeatureExtractor::init(mlp_spec(dims), Rng::mix(cfg.seed, kExtractorStream));
    Rng classifier_rng(Rng::mix(cfg.seed, kClassifierStream));
    result.classifier = ClassifierWeights::random_init(cfg.feature_dim, class_order.size(),
                                                       cfg.alpha, classifier_rng);

    const LossOptions opts = cfg.loss_options();
    const std::size_t param_slots = result.extractor.layer_count() * 2 + 1;
    SgdOptimizer optimizer(cfg.momentum, cfg.weight_decay, param_slots);

    std::vector<std::size_t> order(sample_indices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(Rng::mix(cfg.seed, kShuffleStream), epoch));
        shuffle_rng.shuffle(order);
        const double lr = step_lr(cfg, epoch);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> batch_rows;
            std::vector<std::size_t> batch_labels;
            batch_rows.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                batch_rows.push_back(sample_indices[order[i]]);
                batch_labels.push_back(sample_columns[order[i]]);
            }
            const Tensor batch = gather_rows_constant(ds.features, batch_rows);

            GradientTape tape;
            FeatureExtractor live_fe = result.extractor.watched(tape);
            ClassifierWeights live_cw = result.classifier.watched(tape);
            const Tensor feats = live_fe.forward(batch);
            const Tensor loss = loss_of_kind(cfg.stage1_loss, live_cw, feats, batch_labels, opts);
            loss_sum += loss.item() * static_cast<double>(batch_rows.size());

            const Gradients grads = tape.backward(loss);
            std::size_t slot = 0;
            for (std::size_t layer = 0; layer < live_fe.layer_count(); ++layer) {
                const Tensor& w = live_fe.layer(layer).weight;
                const Tensor& b = live_fe.layer(layer).bias;
                Tensor new_w = grads.contains(w)
                                   ? optimizer.step(slot, w.detached(), grads.at(w), lr)
                                   : w.detached();
                ++slot;
                Tensor new_b = grads.contains(b)
                                   ? optimizer.step(slot, b.detached(), grads.at(b), lr)
                                   : b.detached();
                ++slot;
                result.extractor.set_layer_params(layer, std::move(new_w), std::move(new_b));
            }
            const Tensor& cw_weights = live_cw.weights();
            if (grads.contains(cw_weights)) {
                Tensor updated =
                    optimizer.step(slot, cw_weights.detached(), grads.at(cw_weights), lr);
                result.classifier.set_weights(renormalized_columns(updated));
            }
        }
        result.epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return result;
}

ClassifierWeights fit_episode_classifier(const FeatureExtractor& fe,
                                         const Tensor& support_features,
                                         const std::vector<std::size_t>& support_labels,
                                         std::size_t way, const TrainConfig& cfg, Rng& rng) {
    if (!fe.frozen()) {
        throw ContractError("fit_episode_classifier: extractor must be frozen");
    }
    if (support_features.rows() < 1 || support_labels.size() != support_features.rows()) {
        throw ContractError("fit_episode_classifier: bad support set");
    }
    validate(cfg);

    // Frozen forward: constants only, nothing can reach a tape.
    const Tensor feats = fe.forward(support_features);
    const std::size_t d = feats.cols();

    ClassifierWeights task;
    if (cfg.stage2_init == Stage2Init::Random) {
        task = ClassifierWeights::random_init(d, way, cfg.alpha, rng);
    } else {
        // Prototype init: normalized mean of each class's normalized features.
        const Tensor feats_hat = l2_normalize_rows(feats);
        const auto fv = feats_hat.values();
        std::vector<double> weights(d * way, 0.0);
        std::vector<double> counts(way, 0.0);
        for (std::size_t r = 0; r < feats_hat.rows(); ++r) {
            const std::size_t cls = support_labels[r];
            counts.at(cls) += 1.0;
            for (std::size_t k = 0; k < d; ++k) weights[k * way + cls] += fv[r * d + k];
        }
        for (std::size_t cls = 0; cls < way; ++cls) {
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) sq += weights[k * way + cls] * weights[k * way + cls];
            const double norm = std::max(std::sqrt(sq), 1e-12);
            for (std::size_t k = 0; k < d; ++k) weights[k * way + cls] /= norm;
        }
        task = ClassifierWeights(Tensor({d, way}, std::move(weights)), cfg.alpha);
    }

    const LossOptions opts = cfg.loss_options();
    std::vector<std::size_t> order(feats.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();  // reshuffle before first use

    for (std::size_t iter = 0; iter < cfg.stage2_iterations; ++iter) {
        std::vector<std::size_t> batch_rows;
        std::vector<std::size_t> batch_labels;
        batch_rows.reserve(cfg.stage2_batch_size);
        for (std::size_t b = 0; b < cfg.stage2_batch_size; ++b) {
            if (cursor == order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            batch_rows.push_back(order[cursor]);
            batch_labels.push_back(support_labels[order[cursor]]);
            ++cursor;
        }
        const Tensor batch = gather_rows_constant(feats, batch_rows);

        GradientTape tape;
        ClassifierWeights live = task.watched(tape);
        const Tensor loss = loss_of_kind(cfg.stage2_loss, live, batch, batch_labels, opts);
        const Gradients grads = tape.backward(loss);
        const Tensor& w = live.weights();
        if (grads.contains(w)) {
            task.set_weights(
                renormalized_columns(sgd_step(w.detached(), grads.at(w), cfg.stage2_lr)));
        }
    }
    return task;
}

double ci95_half_width(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    const double sample_std = std::sqrt(sq / static_cast<double>(n - 1));
    return 1.96 * sample_std / std::sqrt(static_cast<double>(n));
}

EvalReport evaluate(const FeatureExtractor& fe, const Dataset& ds,
                    const std::vector<std::size_t>& classes, const EpisodeSpec& es,
                    std::size_t n_episodes, const TrainConfig& cfg, std::uint64_t seed,
                    std::size_t jobs) {
    if (n_episodes < 1) {
        throw ContractError("evaluate: n_episodes must be >= 1");
    }
    if (!fe.frozen()) {
        throw ContractError("evaluate: extractor must be frozen");
    }
    validate(cfg);

    std::vector<double> accuracies(n_episodes, 0.0);
    auto run_episode = [&](std::size_t e) {
        Rng rng(Rng::mix(seed, e));
        const Episode episode = sample_episode(ds, classes, es, rng);
        const ClassifierWeights task = fit_episode_classifier(
            fe, episode.support_features, episode.support_labels, es.way, cfg, rng);
        const Tensor query_feats = fe.forward(episode.query_features);
        const std::vector<std::size_t> predicted = predict_classes(task, query_feats);
        std::size_t hits = 0;
        for (std::size_t q = 0; q < predicted.size(); ++q) {
            if (predicted[q] == episode.query_labels[q]) ++hits;
        }
        accuracies[e] = static_cast<double>(hits) / static_cast<double>(predicted.size());
    };

    const std::size_t workers = std::max<std::size_t>(1, jobs);
    if (workers == 1) {
        for (std::size_t e = 0; e < n_episodes; ++e) run_episode(e);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t e = next.fetch_add(1);
                    if (e >= n_episodes) return;
                    try {
                        run_episode(e);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (std::thread& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    EvalReport report;
    report.per_episode_accuracy = std::move(accuracies);
    double total = 0.0;
    for (double a : report.per_episode_accuracy) total += a;
    report.mean = total / static_cast<double>(n_episodes);
    report.ci95_half_width = ci95_half_width(report.per_episode_accuracy);
    report.episode_count = n_episodes;
    report.episode_spec = es;
    report.seed = seed;
    std::ostringstream digest_src;
    digest_src << canonical_config_text(cfg) << "episode.way = " << es.way << '\n'
               << "episode.shot = " << es.shot << '\n'
               << "episode.queries = " << es.queries << '\n'
               << "eval.episodes = " << n_episodes << '\n'
               << "eval.seed = " << seed << '\n';
    report.config_digest = fnv1a64_hex(digest_src.str());
    return report;
}

}  // namespace sslfs
