#include "sslfs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sslfs/error.hpp"

namespace sslfs {

namespace {

std::string format_double(double value) {
    char buffer[32];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, end);
}

double parse_double(std::string_view token, std::size_t line) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError("bad float '" + std::string(token) + "'", line);
    }
    return value;
}

std::size_t parse_size(std::string_view token, std::size_t line) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError("bad integer '" + std::string(token) + "'", line);
    }
    return value;
}

std::vector<std::string_view> split_ws(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r'))
            ++pos;
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t' && text[pos] != '\r')
            ++pos;
        if (pos > start) tokens.push_back(text.substr(start, pos - start));
    }
    return tokens;
}

}  // namespace

std::vector<std::size_t> Dataset::indices_of_class(std::size_t label) const {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) indices.push_back(i);
    }
    return indices;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.num_classes < 1 || spec.samples_per_class < 1 || spec.input_dim < 1) {
        throw ContractError("generate_synthetic: counts must be >= 1");
    }
    if (spec.noise_sigma < 0.0) {
        throw ContractError("generate_synthetic: noise_sigma must be >= 0");
    }
    Rng rng(seed);

    // Centers first, then noise, so the center stream is independent of sigma.
    std::vector<std::vector<double>> centers(spec.num_classes,
                                             std::vector<double>(spec.input_dim));
    for (auto& center : centers) {
        double sq = 0.0;
        for (double& x : center) {
            x = rng.normal();
            sq += x * x;
        }
        const double norm = std::max(std::sqrt(sq), 1e-12);
        for (double& x : center) x = x / norm * spec.center_scale;
    }

    const std::size_t n = spec.num_classes * spec.samples_per_class;
    std::vector<double> features(n * spec.input_dim);
    std::vector<std::size_t> labels(n);
    std::vector<std::string> names(spec.num_classes);
    std::size_t row = 0;
    for (std::size_t cls = 0; cls < spec.num_classes; ++cls) {
        std::ostringstream name;
        name << "class" << (cls < 10 ? "0" : "") << cls;
        names[cls] = name.str();
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            labels[row] = cls;
            for (std::size_t d = 0; d < spec.input_dim; ++d) {
                features[row * spec.input_dim + d] =
                    centers[cls][d] + spec.noise_sigma * rng.normal();
            }
        }
    }
    return Dataset{Tensor({n, spec.input_dim}, std::move(features)), std::move(labels),
                   std::move(names)};
}

SplitSpec split_by_class(const Dataset& ds, double base_fraction, double val_fraction,
                         double novel_fraction, std::uint64_t seed) {
    const double total = base_fraction + val_fraction + novel_fraction;
    if (std::abs(total - 1.0) > 1e-9) {
        throw ContractError("split_by_class: fractions must sum to 1, got " +
                            std::to_string(total));
    }
    if (base_fraction < 0 || val_fraction < 0 || novel_fraction < 0) {
        throw ContractError("split_by_class: fractions must be nonnegative");
    }
    const std::size_t num_classes = ds.class_count();
    std::vector<std::size_t> order(num_classes);
    for (std::size_t i = 0; i < num_classes; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const auto n_base = static_cast<std::size_t>(
        std::llround(base_fraction * static_cast<double>(num_classes)));
    const auto n_base_val = static_cast<std::size_t>(
        std::llround((base_fraction + val_fraction) * static_cast<double>(num_classes)));

    SplitSpec split;
    for (std::size_t i = 0; i < num_classes; ++i) {
        if (i < n_base)
            split.base_classes.push_back(order[i]);
        else if (i < n_base_val)
            split.val_classes.push_back(order[i]);
        else
            split.novel_classes.push_back(order[i]);
    }
    std::sort(split.base_classes.begin(), split.base_classes.end());
    std::sort(split.val_classes.begin(), split.val_classes.end());
    std::sort(split.novel_classes.begin(), split.novel_classes.end());
    return split;
}

SplitSpec split_by_class(const Dataset& ds, std::vector<std::size_t> base,
                         std::vector<std::size_t> val, std::vector<std::size_t> novel) {
    std::unordered_set<std::size_t> seen;
    for (const auto* list : {&base, &val, &novel}) {
        for (std::size_t cls : *list) {
            if (cls >= ds.class_count()) {
                throw IndexError("split_by_class: class " + std::to_string(cls) +
                                 " out of range for " + std::to_string(ds.class_count()));
            }
            if (!seen.insert(cls).second) {
                throw ContractError("split_by_class: class " + std::to_string(cls) +
                                    " appears in more than one split");
            }
        }
    }
    return SplitSpec{std::move(base), std::move(val), std::move(novel)};
}

Episode sample_episode(const Dataset& ds, const std::vector<std::size_t>& classes,
                       const EpisodeSpec& spec, Rng& rng) {
    if (spec.way < 2 || spec.shot < 1 || spec.queries < 1) {
        throw ContractError("sample_episode: need way >= 2, shot >= 1, queries >= 1");
    }
    if (classes.size() < spec.way) {
        throw CapacityError("sample_episode: " + std::to_string(spec.way) +
                            "-way episode from only " + std::to_string(classes.size()) +
                            " classes");
    }
    const std::size_t per_class = spec.shot + spec.queries;

    Episode episode;
    const std::vector<std::size_t> picked = rng.choose(classes.size(), spec.way);
    std::vector<double> support;
    std::vector<double> query;
    const std::size_t dim = ds.input_dim();
    const auto fv = ds.features.values();
    for (std::size_t e = 0; e < spec.way; ++e) {
        const std::size_t cls = classes[picked[e]];
        episode.class_map.push_back(cls);
        const std::vector<std::size_t> members = ds.indices_of_class(cls);
        if (members.size() < per_class) {
            throw CapacityError("sample_episode: class " + std::to_string(cls) + " has " +
                                std::to_string(members.size()) + " samples, needs " +
                                std::to_string(per_class));
        }
        const std::vector<std::size_t> chosen = rng.choose(members.size(), per_class);
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t sample = members[chosen[i]];
            auto& sink = (i < spec.shot) ? support : query;
            sink.insert(sink.end(), fv.begin() + static_cast<std::ptrdiff_t>(sample * dim),
                        fv.begin() + static_cast<std::ptrdiff_t>((sample + 1) * dim));
            if (i < spec.shot)
                episode.support_labels.push_back(e);
            else
                episode.query_labels.push_back(e);
        }
    }
    episode.support_features = Tensor({spec.way * spec.shot, dim}, std::move(support));
    episode.query_features = Tensor({spec.way * spec.queries, dim}, std::move(query));
    return episode;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    if (ds.class_names.empty()) {
        throw ContractError("save_dataset: dataset has no classes");
    }
    for (const std::string& name : ds.class_names) {
        if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos) {
            throw ContractError("save_dataset: class name '" + name +
                                "' is empty or contains whitespace");
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open dataset for writing: " + path.string());
    }
    out << "FSDS 1 " << ds.sample_count() << ' ' << ds.input_dim() << ' ' << ds.class_count()
        << '\n';
    for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
        out << (i ? " " : "") << ds.class_names[i];
    }
    out << '\n';
    const auto fv = ds.features.values();
    const std::size_t dim = ds.input_dim();
    for (std::size_t row = 0; row < ds.sample_count(); ++row) {
        out << ds.labels[row];
        for (std::size_t d = 0; d < dim; ++d) {
            out << ' ' << format_double(fv[row * dim + d]);
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset: " + path.string());
    }
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) {
        throw ParseError("missing FSDS header", line_no);
    }
    const auto header = split_ws(line);
    if (header.size() != 5 || header[0] != "FSDS" || header[1] != "1") {
        throw ParseError("bad FSDS header '" + line + "'", line_no);
    }
    const std::size_t n = parse_size(header[2], line_no);
    const std::size_t dim = parse_size(header[3], line_no);
    const std::size_t num_classes = parse_size(header[4], line_no);
    if (dim < 1 || num_classes < 1) {
        throw ParseError("FSDS header declares empty dimensions", line_no);
    }

    ++line_no;
    if (!std::getline(in, line)) {
        throw ParseError("missing class-name line", line_no);
    }
    const auto name_tokens = split_ws(line);
    if (name_tokens.size() != num_classes) {
        throw ParseError("expected " + std::to_string(num_classes) + " class names, found " +
                         std::to_string(name_tokens.size()), line_no);
    }
    Dataset ds;
    for (auto token : name_tokens) ds.class_names.emplace_back(token);

    std::vector<double> features(n * dim);
    ds.labels.resize(n);
    for (std::size_t row = 0; row < n; ++row) {
        ++line_no;
        if (!std::getline(in, line)) {
            throw ParseError("expected " + std::to_string(n) + " sample rows, file ends at " +
                             std::to_string(row), line_no);
        }
        const auto tokens = split_ws(line);
        if (tokens.size() != dim + 1) {
            throw ParseError("row has " + std::to_string(tokens.size() ? tokens.size() - 1 : 0) +
                             " values, header declares " + std::to_string(dim), line_no);
        }
        const std::size_t label = parse_size(tokens[0], line_no);
        if (label >= num_classes) {
            throw ParseError("unknown label " + std::to_string(label), line_no);
        }
        ds.labels[row] = label;
        for (std::size_t d = 0; d < dim; ++d) {
            features[row * dim + d] = parse_double(tokens[d + 1], line_no);
        }
    }
    ds.features = Tensor({n, dim}, std::move(features));

    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t label : ds.labels) ++counts[label];
    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        if (counts[cls] == 0) {
            throw ParseError("class " + std::to_string(cls) + " ('" + ds.class_names[cls] +
                             "') has no samples");
        }
    }
    return ds;
}

}  // namespace sslfs
