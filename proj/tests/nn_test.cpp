#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "oracles.hpp"
#include "sslfs/error.hpp"
#include "sslfs/nn.hpp"
#include "sslfs/rng.hpp"

using namespace sslfs;

namespace {

bool tensors_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av[i] != bv[i]) return false;
    }
    return true;
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("init_extractor determinism and shape bookkeeping") {
    const auto spec = mlp_spec({4, 8, 3});
    const FeatureExtractor a = FeatureExtractor::init(spec, 42);
    const FeatureExtractor b = FeatureExtractor::init(spec, 42);
    CHECK(parameters_bit_identical(a, b));

    CHECK(a.layer_count() == 2);
    CHECK(a.input_dim() == 4);
    CHECK(a.output_dim() == 3);
    CHECK(a.layer(0).activation == Activation::Relu);
    CHECK(a.layer(1).activation == Activation::None);

    const FeatureExtractor c = FeatureExtractor::init(spec, 43);
    CHECK_FALSE(parameters_bit_identical(a, c));

    CHECK_THROWS_AS(FeatureExtractor::init({}, 0), ContractError);
}

TEST_CASE("extract_features basics") {
    // Zero weights and biases map everything to zero.
    FeatureExtractor zero = FeatureExtractor::init(mlp_spec({3, 2}), 0);
    zero.set_layer_params(0, Tensor::zeros(3, 2), Tensor::zeros(1, 2));
    const Tensor out = extract_features(zero, Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    for (double v : out.values()) CHECK(v == 0.0);

    // Identity weights pass the input through.
    FeatureExtractor identity = FeatureExtractor::init(mlp_spec({2, 2}), 0);
    identity.set_layer_params(0, Tensor({2, 2}, {1, 0, 0, 1}), Tensor::zeros(1, 2));
    const Tensor batch({2, 2}, {1.5, -2.5, 3.0, 4.0});
    CHECK(tensors_equal(extract_features(identity, batch), batch));

    CHECK_THROWS_AS((void)extract_features(identity, Tensor::zeros(1, 3)), DimensionError);
}

TEST_CASE("extract_features matches the naive per-element oracle") {
    Rng rng(5);
    const FeatureExtractor fe = FeatureExtractor::init(mlp_spec({4, 6, 3}), 99);
    std::vector<oracles::NaiveLayer> naive;
    for (std::size_t i = 0; i < fe.layer_count(); ++i) {
        const auto& layer = fe.layer(i);
        oracles::NaiveLayer nl;
        nl.weights.assign(layer.weight.values().begin(), layer.weight.values().end());
        nl.biases.assign(layer.bias.values().begin(), layer.bias.values().end());
        nl.in_dim = layer.weight.rows();
        nl.out_dim = layer.weight.cols();
        nl.relu = layer.activation == Activation::Relu;
        naive.push_back(nl);
    }
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> input(4);
        for (double& v : input) v = rng.uniform(-2, 2);
        const Tensor got = fe.forward(Tensor({1, 4}, input));
        const std::vector<double> want = oracles::naive_mlp_forward(naive, input);
        for (std::size_t j = 0; j < want.size(); ++j) {
            CHECK(got.at(0, j) == doctest::Approx(want[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("frozen extractor keeps its parameters off the tape") {
    FeatureExtractor fe = FeatureExtractor::init(mlp_spec({3, 4, 2}), 7);
    fe.set_frozen(true);
    GradientTape tape;
    const FeatureExtractor live = fe.watched(tape);
    CHECK(tape.node_count() == 0);
    const Tensor out = live.forward(Tensor::zeros(2, 3));
    CHECK_FALSE(out.on_tape());
    CHECK(tape.node_count() == 0);

    fe.set_frozen(false);
    const FeatureExtractor live2 = fe.watched(tape);
    CHECK(tape.node_count() == 4);  // two layers x (weight, bias)
    CHECK(live2.forward(Tensor::zeros(2, 3)).on_tape());
}

TEST_CASE("cosine_scores examples") {
    {
        ClassifierWeights cw(Tensor({2, 1}, {6, 8}), 10.0);
        const Tensor s = cosine_scores(cw, Tensor::row({3, 4}));
        CHECK(s.item() == doctest::Approx(10.0).epsilon(1e-12));
    }
    {
        ClassifierWeights cw(Tensor({2, 1}, {0, 1}), 3.5);
        const Tensor s = cosine_scores(cw, Tensor::row({1, 0}));
        CHECK(s.item() == doctest::Approx(0.0).epsilon(1e-12));
    }
    {
        ClassifierWeights cw(Tensor({2, 1}, {1, 0}), 2.0);
        const Tensor s = cosine_scores(cw, Tensor::row({1, 1}));
        CHECK(s.item() == doctest::Approx(1.4142135623730951).epsilon(1e-12));
    }
    ClassifierWeights cw(Tensor({2, 2}, {1, 0, 0, 1}), 2.0);
    CHECK_THROWS_AS((void)cosine_scores(cw, Tensor::zeros(1, 3)), DimensionError);
}

TEST_CASE("cosine_scores is scale invariant and bounded by alpha") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 2 + rng.below(6);
        const std::size_t classes = 2 + rng.below(5);
        std::vector<double> w(d * classes);
        for (double& v : w) v = rng.uniform(-2, 2);
        std::vector<double> feats(3 * d);
        for (double& v : feats) v = rng.uniform(-2, 2);
        const double alpha = 0.5 + rng.uniform() * 20.0;

        const ClassifierWeights cw(Tensor({d, classes}, w), alpha);
        const Tensor features({3, d}, feats);
        const Tensor scores = cosine_scores(cw, features);

        // rescale one column and every feature row by positive factors
        const double k = 0.1 + rng.uniform() * 5.0;
        const std::size_t col = rng.below(classes);
        std::vector<double> w2 = w;
        for (std::size_t r = 0; r < d; ++r) w2[r * classes + col] *= k;
        std::vector<double> feats2 = feats;
        for (double& v : feats2) v *= 2.5;
        const Tensor scores2 =
            cosine_scores(ClassifierWeights(Tensor({d, classes}, w2), alpha),
                          Tensor({3, d}, feats2));

        for (std::size_t i = 0; i < scores.size(); ++i) {
            CHECK(scores2[i] == doctest::Approx(scores[i]).epsilon(1e-12));
            CHECK(std::abs(scores[i]) <= alpha + 1e-12);
        }
    }
}

TEST_CASE("checkpoint round-trip is byte-identical") {
    const auto dir = std::filesystem::temp_directory_path() / "sslfs_nn_test";
    std::filesystem::create_directories(dir);
    const auto first = dir / "a.sslckpt";
    const auto second = dir / "b.sslckpt";

    FeatureExtractor fe = FeatureExtractor::init(mlp_spec({5, 7, 4}), 2024);
    Rng rng(1);
    const ClassifierWeights cw = ClassifierWeights::random_init(4, 6, 12.5, rng);

    save_checkpoint(first, fe, cw);
    const Checkpoint loaded = load_checkpoint(first);
    CHECK(parameters_bit_identical(fe, loaded.extractor));
    CHECK(tensors_equal(cw.weights(), loaded.classifier.weights()));
    CHECK(loaded.classifier.alpha() == 12.5);

    save_checkpoint(second, loaded.extractor, loaded.classifier);
    CHECK(read_bytes(first) == read_bytes(second));
    CHECK(read_bytes(first).substr(0, 8) == std::string("SSLCKPT\x01", 8));

    std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint loader rejects garbage") {
    const auto dir = std::filesystem::temp_directory_path() / "sslfs_nn_test_bad";
    std::filesystem::create_directories(dir);
    const auto path = dir / "bad.sslckpt";
    std::ofstream(path) << "not a checkpoint";
    CHECK_THROWS_AS((void)load_checkpoint(path), ParseError);
    CHECK_THROWS_AS((void)load_checkpoint(dir / "missing.sslckpt"), IoError);
    std::filesystem::remove_all(dir);
}
