#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sslfs/error.hpp"
#include "sslfs/loss.hpp"
#include "sslfs/rng.hpp"

using namespace sslfs;

namespace {

enum class LossKindLocal { Ssl, Sl };

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    std::vector<double> values(rows * cols);
    for (double& v : values) v = rng.uniform(-2, 2);
    return Tensor({rows, cols}, std::move(values));
}

std::vector<std::vector<double>> columns_of(const Tensor& m) {
    std::vector<std::vector<double>> cols(m.cols(), std::vector<double>(m.rows()));
    for (std::size_t c = 0; c < m.cols(); ++c)
        for (std::size_t r = 0; r < m.rows(); ++r) cols[c][r] = m.at(r, c);
    return cols;
}

std::vector<double> column_of(const Tensor& m, std::size_t c) {
    std::vector<double> col(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) col[r] = m.at(r, c);
    return col;
}

double column_norm(const Tensor& m, std::size_t c) {
    double sq = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) sq += m.at(r, c) * m.at(r, c);
    return std::sqrt(sq);
}

}  // namespace

TEST_CASE("adjust_weights zero-gap cases") {
    // Target column comes back as its own normalization.
    ClassifierWeights cw(Tensor({2, 2}, {3, 0, 4, 2}), 1.0);
    const AdjustedWeights adj = adjust_weights(cw, Tensor::row({0.5, 0.25}), 0);
    CHECK(adj.weights.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(adj.weights.at(1, 0) == doctest::Approx(0.8).epsilon(1e-15));

    // Equal scores for i != c leave w_i unchanged (up to normalization).
    // Feature along the bisector of two unit prototypes scores them equally.
    ClassifierWeights sym(Tensor({2, 2}, {1, 0, 0, 1}), 2.5);
    const AdjustedWeights adj2 = adjust_weights(sym, Tensor::row({1, 1}), 0);
    CHECK(adj2.weights.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(adj2.weights.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adjust_weights hand oracle: unit gap pulls to the bisector") {
    // w_c=(1,0), w_i=(0,1), phi=(1,0), alpha=1: gap = 1, so
    // w_i_dot = (w_c + w_i)/sqrt(2).
    ClassifierWeights cw(Tensor({2, 2}, {1, 0, 0, 1}), 1.0);
    const AdjustedWeights adj = adjust_weights(cw, Tensor::row({1, 0}), 0);
    CHECK(adj.weights.at(0, 1) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
    CHECK(adj.weights.at(1, 1) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
    CHECK(adj.weights.at(0, 0) == 1.0);
    CHECK(adj.weights.at(1, 0) == 0.0);
}

TEST_CASE("adjust_weights input validation") {
    ClassifierWeights cw(Tensor({2, 2}, {1, 0, 0, 1}), 1.0);
    CHECK_THROWS_AS((void)adjust_weights(cw, Tensor::row({1, 0}), 2), IndexError);
    CHECK_THROWS_AS((void)adjust_weights(cw, Tensor::row({1, 0, 0}), 0), DimensionError);
}

TEST_CASE("adjusted columns: unit norm, exact target column, monotone pull") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 2 + rng.below(15);
        const std::size_t classes = 2 + rng.below(7);
        const Tensor weights = random_matrix(d, classes, rng);
        const ClassifierWeights cw(weights, 0.5 + rng.uniform() * 15.0);
        const Tensor feature = random_matrix(1, d, rng);
        const std::size_t target = rng.below(classes);

        const AdjustedWeights adj = adjust_weights(cw, feature, target);
        const Tensor normalized = normalize_columns(weights.detached()).detached();

        for (std::size_t i = 0; i < classes; ++i) {
            CHECK(std::abs(column_norm(adj.weights, i) - 1.0) <= 1e-10);
        }
        // Exact equality with the normalized target prototype, bit for bit.
        for (std::size_t r = 0; r < d; ++r) {
            CHECK(adj.weights.at(r, target) == normalized.at(r, target));
        }
        // The adjustment never moves a prototype away from the target.
        const auto target_col = column_of(normalized, target);
        for (std::size_t i = 0; i < classes; ++i) {
            if (i == target) continue;
            const double before = oracles::angle_deg(column_of(normalized, i), target_col);
            const double after = oracles::angle_deg(column_of(adj.weights, i), target_col);
            CHECK(after <= before + 1e-9);
        }
    }
}

TEST_CASE("ssl_probabilities examples") {
    // All prototypes identical: every gap is zero and the softmax is uniform.
    ClassifierWeights same(Tensor({2, 3}, {1, 1, 1, 2, 2, 2}), 4.0);
    const Tensor uniform = ssl_probabilities(same, Tensor::row({0.3, -0.7}), 1);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(uniform.at(0, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }

    // Two classes, phi parallel to w_c and orthogonal to w_i, alpha = 1:
    // adjusted scores are (1, 1/sqrt(2)).
    ClassifierWeights cw(Tensor({2, 2}, {1, 0, 0, 1}), 1.0);
    const Tensor p = ssl_probabilities(cw, Tensor::row({1, 0}), 0);
    CHECK(p.at(0, 0) == doctest::Approx(0.5727042927955369).epsilon(1e-12));
    CHECK(p.at(0, 1) == doctest::Approx(1.0 - 0.5727042927955369).epsilon(1e-12));

    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 2 + rng.below(8);
        const std::size_t classes = 2 + rng.below(6);
        const ClassifierWeights random_cw(random_matrix(d, classes, rng), 1.0 + rng.uniform() * 10);
        const Tensor probs =
            ssl_probabilities(random_cw, random_matrix(1, d, rng), rng.below(classes));
        double total = 0.0;
        for (std::size_t i = 0; i < classes; ++i) {
            CHECK(probs.at(0, i) > 0.0);
            total += probs.at(0, i);
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("ssl_loss examples") {
    ClassifierWeights cw(Tensor({2, 2}, {1, 0, 0, 1}), 1.0);
    const Tensor loss = ssl_loss(cw, Tensor::row({1, 0}), {0});
    CHECK(loss.item() == doctest::Approx(0.5573857638961928).epsilon(1e-12));

    // Identical prototypes: loss is ln(C) no matter the feature.
    ClassifierWeights same(Tensor({3, 4}, {1, 1, 1, 1, -2, -2, -2, -2, 0.5, 0.5, 0.5, 0.5}),
                           7.0);
    const Tensor lnc = ssl_loss(same, Tensor({2, 3}, {1, 2, 3, -1, 0, 2}), {2, 0});
    CHECK(lnc.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    CHECK_THROWS_AS((void)ssl_loss(cw, Tensor::row({1, 0}), {5}), IndexError);
    CHECK(loss.item() >= 0.0);
}

TEST_CASE("sl_loss examples") {
    // Logits alpha*cos = (1, 0) with label 0.
    ClassifierWeights cw(Tensor({2, 2}, {1, 0, 0, 1}), 1.0);
    const Tensor loss = sl_loss(cw, Tensor::row({1, 0}), {0});
    CHECK(loss.item() == doctest::Approx(0.3132616875182228).epsilon(1e-12));

    ClassifierWeights same(Tensor({2, 3}, {1, 1, 1, 0, 0, 0}), 5.0);
    CHECK(sl_loss(same, Tensor::row({2, 1}), {1}).item() ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));

    // With identical columns every gap vanishes, so SSL collapses to SL.
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + rng.below(6);
        std::vector<double> col(d);
        for (double& v : col) v = rng.uniform(-2, 2);
        std::vector<double> w(d * 3);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < 3; ++c) w[r * 3 + c] = col[r];
        const ClassifierWeights dup(Tensor({d, 3}, w), 2.0 + rng.uniform() * 8);
        const Tensor feats = random_matrix(2, d, rng);
        const std::vector<std::size_t> labels = {rng.below(3), rng.below(3)};
        CHECK(ssl_loss(dup, feats, labels).item() ==
              doctest::Approx(sl_loss(dup, feats, labels).item()).epsilon(1e-12));
    }
}

TEST_CASE("vectorized losses equal the naive triple-loop references") {
    Rng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t d = 2 + rng.below(15);
        const std::size_t classes = 2 + rng.below(7);
        const std::size_t batch = 1 + rng.below(6);
        const Tensor weights = random_matrix(d, classes, rng);
        const double alpha = 0.5 + rng.uniform() * 15.0;
        const ClassifierWeights cw(weights, alpha);
        const Tensor feats = random_matrix(batch, d, rng);
        std::vector<std::size_t> labels(batch);
        for (auto& l : labels) l = rng.below(classes);

        oracles::Matrix feat_rows(batch, std::vector<double>(d));
        for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t c = 0; c < d; ++c) feat_rows[r][c] = feats.at(r, c);

        const double ref_ssl =
            oracles::reference_ssl_loss(columns_of(weights), alpha, feat_rows, labels);
        const double got_ssl = ssl_loss(cw, feats, labels).item();
        CHECK(std::abs(got_ssl - ref_ssl) <= 1e-10);

        const double ref_sl =
            oracles::reference_sl_loss(columns_of(weights), alpha, feat_rows, labels);
        CHECK(std::abs(sl_loss(cw, feats, labels).item() - ref_sl) <= 1e-10);

        // alpha_in_gap=false changes the pull strength but not the contract.
        const LossOptions bare_gap{false, false};
        const double ref_bare =
            oracles::reference_ssl_loss(columns_of(weights), alpha, feat_rows, labels, false);
        CHECK(std::abs(ssl_loss(cw, feats, labels, bare_gap).item() - ref_bare) <= 1e-10);
    }
}

TEST_CASE("loss gradients match finite differences (W and features)") {
    Rng rng(59);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 2 + rng.below(15);
        const std::size_t classes = 2 + rng.below(7);
        const std::size_t batch = 1 + rng.below(4);
        const Tensor weights = random_matrix(d, classes, rng);
        const double alpha = 0.5 + rng.uniform() * 10.0;
        const Tensor feats = random_matrix(batch, d, rng);
        std::vector<std::size_t> labels(batch);
        for (auto& l : labels) l = rng.below(classes);

        for (const LossKindLocal kind : {LossKindLocal::Ssl, LossKindLocal::Sl}) {
            const auto loss_of = [&](const Tensor& w, const Tensor& f) {
                const ClassifierWeights cw(w, alpha);
                return kind == LossKindLocal::Ssl ? ssl_loss(cw, f, labels)
                                                  : sl_loss(cw, f, labels);
            };
            const FiniteDiffReport wrt_w = finite_diff_check(
                [&](const Tensor& w) { return loss_of(w, feats); }, weights);
            const FiniteDiffReport wrt_f = finite_diff_check(
                [&](const Tensor& f) { return loss_of(weights, f); }, feats);
            worst = std::max({worst, wrt_w.max_rel_error, wrt_f.max_rel_error});
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("detach_adjustment keeps the value but changes the gradient") {
    Rng rng(61);
    const Tensor weights = random_matrix(4, 3, rng);
    const Tensor feats = random_matrix(2, 4, rng);
    const std::vector<std::size_t> labels = {0, 2};
    const LossOptions flow{};
    const LossOptions detached{true, true};

    const ClassifierWeights cw(weights, 5.0);
    CHECK(ssl_loss(cw, feats, labels, flow).item() ==
          doctest::Approx(ssl_loss(cw, feats, labels, detached).item()).epsilon(1e-15));

    const auto grad_norm = [&](const LossOptions& opts) {
        GradientTape tape;
        const ClassifierWeights live = cw.watched(tape);
        const Tensor loss = ssl_loss(live, feats, labels, opts);
        const Gradients grads = tape.backward(loss);
        double sq = 0.0;
        for (double v : grads.at(live.weights()).values()) sq += v * v;
        return std::sqrt(sq);
    };
    CHECK(grad_norm(flow) != doctest::Approx(grad_norm(detached)).epsilon(1e-9));
}
