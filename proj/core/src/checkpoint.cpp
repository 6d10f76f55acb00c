#include <cstdint>
#include <cstring>
#include <fstream>

#include "sslfs/error.hpp"
#include "sslfs/nn.hpp"

namespace sslfs {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'L', 'C', 'K', 'P', 'T', '\x01'};

void write_u32(std::ostream& out, std::uint32_t value) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

void write_u8(std::ostream& out, std::uint8_t value) {
    out.put(static_cast<char>(value));
}

void write_f64(std::ostream& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    char bytes[4];
    if (!in.read(bytes, 4)) throw ParseError("truncated checkpoint: " + path);
    std::uint32_t value = 0;
    for (int i = 3; i >= 0; --i) value = (value << 8) | static_cast<std::uint8_t>(bytes[i]);
    return value;
}

std::uint8_t read_u8(std::istream& in, const std::string& path) {
    char byte;
    if (!in.get(byte)) throw ParseError("truncated checkpoint: " + path);
    return static_cast<std::uint8_t>(byte);
}

double read_f64(std::istream& in, const std::string& path) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw ParseError("truncated checkpoint: " + path);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<std::uint8_t>(bytes[i]);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FeatureExtractor& fe,
                     const ClassifierWeights& cw) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open checkpoint for writing: " + path.string());
    }
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(fe.layer_count()));
    for (std::size_t i = 0; i < fe.layer_count(); ++i) {
        const auto& layer = fe.layer(i);
        write_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
        write_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
        write_u8(out, static_cast<std::uint8_t>(layer.activation));
        for (double w : layer.weight.values()) write_f64(out, w);
        for (double b : layer.bias.values()) write_f64(out, b);
    }
    write_u32(out, static_cast<std::uint32_t>(cw.class_count()));
    write_u32(out, static_cast<std::uint32_t>(cw.feature_dim()));
    write_f64(out, cw.alpha());
    // Column-major classifier weights.
    const Tensor& weights = cw.weights();
    for (std::size_t c = 0; c < weights.cols(); ++c)
        for (std::size_t r = 0; r < weights.rows(); ++r) write_f64(out, weights.at(r, c));
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path.string());
    }
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw ParseError("bad checkpoint magic: " + path.string());
    }
    const std::uint32_t layer_count = read_u32(in, path.string());
    if (layer_count == 0) {
        throw ParseError("checkpoint has no layers: " + path.string());
    }
    std::vector<LayerSpec> spec;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> params;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        const std::uint32_t in_dim = read_u32(in, path.string());
        const std::uint32_t out_dim = read_u32(in, path.string());
        const std::uint8_t tag = read_u8(in, path.string());
        if (tag > static_cast<std::uint8_t>(Activation::Relu)) {
            throw ParseError("unknown activation tag in checkpoint: " + path.string());
        }
        std::vector<double> weights(static_cast<std::size_t>(in_dim) * out_dim);
        for (double& w : weights) w = read_f64(in, path.string());
        std::vector<double> biases(out_dim);
        for (double& b : biases) b = read_f64(in, path.string());
        spec.push_back({in_dim, out_dim, static_cast<Activation>(tag)});
        params.emplace_back(std::move(weights), std::move(biases));
    }

    Checkpoint ckpt;
    ckpt.extractor = FeatureExtractor::init(spec, 0);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        ckpt.extractor.set_layer_params(
            i, Tensor({spec[i].in_dim, spec[i].out_dim}, std::move(params[i].first)),
            Tensor({1, spec[i].out_dim}, std::move(params[i].second)));
    }

    const std::uint32_t class_count = read_u32(in, path.string());
    const std::uint32_t feature_dim = read_u32(in, path.string());
    const double alpha = read_f64(in, path.string());
    std::vector<double> weights(static_cast<std::size_t>(feature_dim) * class_count);
    for (std::uint32_t c = 0; c < class_count; ++c)
        for (std::uint32_t r = 0; r < feature_dim; ++r)
            weights[static_cast<std::size_t>(r) * class_count + c] = read_f64(in, path.string());
    ckpt.classifier = ClassifierWeights(Tensor({feature_dim, class_count}, std::move(weights)),
                                        alpha);
    return ckpt;
}

}  // namespace sslfs
