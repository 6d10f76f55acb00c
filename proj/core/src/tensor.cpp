#include "sslfs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "sslfs/error.hpp"

namespace sslfs {

namespace {

// Broadcast role of the second operand in elementwise ops.
enum class Broadcast { none, row, col, scalar };

Broadcast broadcast_kind(const TensorShape& a, const TensorShape& b) {
    if (a == b) return Broadcast::none;
    if (b.rows == 1 && b.cols == 1) return Broadcast::scalar;
    if (b.rows == 1 && b.cols == a.cols) return Broadcast::row;
    if (b.cols == 1 && b.rows == a.rows) return Broadcast::col;
    throw DimensionError("elementwise op: cannot broadcast " + b.to_string() +
                         " against " + a.to_string());
}

// b's value at (r, c) under the given broadcast.
inline double bvalue(std::span<const double> b, const TensorShape& shape, Broadcast kind,
                     std::size_t r, std::size_t c) {
    switch (kind) {
        case Broadcast::none: return b[r * shape.cols + c];
        case Broadcast::row: return b[c];
        case Broadcast::col: return b[r];
        case Broadcast::scalar: return b[0];
    }
    return 0.0;
}

// Sum an upstream gradient down to the broadcast operand's shape.
Tensor reduce_to(const Tensor& g, const TensorShape& target, Broadcast kind) {
    if (kind == Broadcast::none) return g;
    const auto gv = g.values();
    const std::size_t rows = g.rows();
    const std::size_t cols = g.cols();
    std::vector<double> out(target.size(), 0.0);
    switch (kind) {
        case Broadcast::none:
            break;
        case Broadcast::row:
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) out[c] += gv[r * cols + c];
            break;
        case Broadcast::col:
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) out[r] += gv[r * cols + c];
            break;
        case Broadcast::scalar:
            for (double v : gv) out[0] += v;
            break;
    }
    return Tensor(target, std::move(out));
}

GradientTape* common_tape(const Tensor& a, const Tensor& b) {
    if (a.on_tape() && b.on_tape() && a.tape() != b.tape()) {
        throw ContractError("operands belong to different gradient tapes");
    }
    return a.on_tape() ? a.tape() : b.tape();
}

std::vector<int> parents_of(std::initializer_list<const Tensor*> inputs) {
    std::vector<int> parents;
    parents.reserve(inputs.size());
    for (const Tensor* t : inputs) {
        parents.push_back(t->on_tape() ? t->node() : -1);
    }
    return parents;
}

// Return the plain value in constant mode; otherwise record it. The
// pullback factory runs only when something is actually on a tape, so
// constant evaluation pays for no closures.
template <typename Factory>
Tensor finish(GradientTape* tape, Tensor value, std::initializer_list<const Tensor*> inputs,
              Factory&& make_pullback) {
    if (tape == nullptr) return value;
    return tape->record(std::move(value), parents_of(inputs), make_pullback());
}

}  // namespace

// ---- TensorShape / Tensor ---------------------------------------------------

std::string TensorShape::to_string() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

Tensor::Tensor(TensorShape shape, std::vector<double> values) : shape_(shape) {
    if (shape.size() != values.size()) {
        throw DimensionError("tensor " + shape.to_string() + " needs " +
                             std::to_string(shape.size()) + " values, got " +
                             std::to_string(values.size()));
    }
    data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0));
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
    return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
    TensorShape shape{1, values.size()};
    return Tensor(shape, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
    TensorShape shape{values.size(), 1};
    return Tensor(shape, std::move(values));
}

double Tensor::at(std::size_t r, std::size_t c) const {
    if (r >= rows() || c >= cols()) {
        throw IndexError("tensor index (" + std::to_string(r) + "," + std::to_string(c) +
                         ") out of range for " + shape_.to_string());
    }
    return (*data_)[r * cols() + c];
}

std::span<const double> Tensor::values() const {
    if (!data_) return {};
    return {data_->data(), data_->size()};
}

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("item() requires a 1x1 tensor, got " + shape_.to_string());
    }
    return (*data_)[0];
}

Tensor Tensor::detached() const {
    Tensor copy = *this;
    copy.tape_ = nullptr;
    copy.node_ = -1;
    return copy;
}

// ---- GradientTape -----------------------------------------------------------

Tensor GradientTape::watch(const Tensor& t) {
    if (t.empty()) {
        throw ContractError("cannot watch an empty tensor");
    }
    if (t.on_tape()) {
        throw ContractError("tensor is already bound to a tape; detach first");
    }
    Tensor bound = t;
    bound.tape_ = this;
    bound.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{{}, Pullback{}, t.shape()});
    return bound;
}

Tensor GradientTape::record(Tensor value, std::vector<int> parents, Pullback pullback) {
    value.tape_ = this;
    value.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{std::move(parents), std::move(pullback), value.shape()});
    return value;
}

Gradients GradientTape::backward(const Tensor& root) {
    if (root.size() != 1) {
        throw ContractError("backward root must be scalar, got " + root.shape().to_string());
    }
    if (!root.on_tape() || root.tape() != this) {
        throw ContractError("backward root is not a node of this tape");
    }

    const int root_node = root.node();
    std::vector<std::vector<double>> acc(nodes_.size());
    std::vector<bool> reached(nodes_.size(), false);
    acc[static_cast<std::size_t>(root_node)].assign(root.size(), 1.0);
    reached[static_cast<std::size_t>(root_node)] = true;

    // Parents precede children, so one descending sweep visits every node
    // only after all contributions to it have accumulated.
    std::vector<Tensor> grads(nodes_.size());
    for (int node = root_node; node >= 0; --node) {
        const auto idx = static_cast<std::size_t>(node);
        if (!reached[idx]) continue;
        grads[idx] = Tensor(nodes_[idx].shape, std::move(acc[idx]));
        acc[idx] = {};
        const Node& rec = nodes_[idx];
        if (!rec.pullback) continue;  // leaf

        std::vector<Tensor> parent_grads = rec.pullback(grads[idx]);
        if (parent_grads.size() != rec.parents.size()) {
            throw ContractError("pullback returned wrong number of gradients");
        }
        for (std::size_t p = 0; p < rec.parents.size(); ++p) {
            const int parent = rec.parents[p];
            if (parent < 0) continue;  // constant input
            const Tensor& contribution = parent_grads[p];
            if (contribution.empty()) continue;
            const auto pidx = static_cast<std::size_t>(parent);
            if (contribution.shape() != nodes_[pidx].shape) {
                throw ContractError("pullback gradient shape " +
                                    contribution.shape().to_string() + " != node shape " +
                                    nodes_[pidx].shape.to_string());
            }
            const auto cv = contribution.values();
            if (!reached[pidx]) {
                acc[pidx].assign(cv.begin(), cv.end());
                reached[pidx] = true;
            } else {
                for (std::size_t i = 0; i < cv.size(); ++i) acc[pidx][i] += cv[i];
            }
        }
    }

    Gradients result;
    result.tape_ = this;
    result.by_node_ = std::move(grads);
    return result;
}

bool Gradients::contains(const Tensor& t) const {
    return t.on_tape() && t.tape() == tape_ && t.node() >= 0 &&
           static_cast<std::size_t>(t.node()) < by_node_.size() &&
           !by_node_[static_cast<std::size_t>(t.node())].empty();
}

const Tensor& Gradients::at(const Tensor& t) const {
    if (!t.on_tape() || t.tape() != tape_) {
        throw ContractError("gradient lookup for a tensor not on this tape");
    }
    if (!contains(t)) {
        throw ContractError("no gradient recorded for node " + std::to_string(t.node()) +
                            " (unreachable from the backward root)");
    }
    return by_node_[static_cast<std::size_t>(t.node())];
}

// ---- Operations -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree: " + a.shape().to_string() +
                             " vs " + b.shape().to_string());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = av[i * k + kk];
            const double* brow = &bv[kk * n];
            double* orow = &out[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    Tensor value({m, n}, std::move(out));
    return finish(common_tape(a, b), std::move(value), {&a, &b}, [&] {
        return [a = a.detached(), b = b.detached()](const Tensor& g) {
            return std::vector<Tensor>{matmul(g, transpose(b)), matmul(transpose(a), g)};
        };
    });
}

Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    const auto av = a.values();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
    Tensor value({n, m}, std::move(out));
    return finish(a.tape(), std::move(value), {&a}, [&] {
        return [](const Tensor& g) { return std::vector<Tensor>{transpose(g)}; };
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    const Broadcast kind = broadcast_kind(a.shape(), b.shape());
    const auto av = a.values();
    const auto bv = b.values();
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<double> out(a.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out[r * cols + c] = av[r * cols + c] + bvalue(bv, b.shape(), kind, r, c);
    Tensor value(a.shape(), std::move(out));
    return finish(common_tape(a, b), std::move(value), {&a, &b}, [&] {
        return [kind, bshape = b.shape()](const Tensor& g) {
            return std::vector<Tensor>{g, reduce_to(g, bshape, kind)};
        };
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    const Broadcast kind = broadcast_kind(a.shape(), b.shape());
    const auto av = a.values();
    const auto bv = b.values();
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<double> out(a.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out[r * cols + c] = av[r * cols + c] - bvalue(bv, b.shape(), kind, r, c);
    Tensor value(a.shape(), std::move(out));
    return finish(common_tape(a, b), std::move(value), {&a, &b}, [&] {
        return [kind, bshape = b.shape()](const Tensor& g) {
            Tensor gb = reduce_to(g, bshape, kind);
            std::vector<double> neg(gb.values().begin(), gb.values().end());
            for (double& v : neg) v = -v;
            return std::vector<Tensor>{g, Tensor(bshape, std::move(neg))};
        };
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const Broadcast kind = broadcast_kind(a.shape(), b.shape());
    const auto av = a.values();
    const auto bv = b.values();
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<double> out(a.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out[r * cols + c] = av[r * cols + c] * bvalue(bv, b.shape(), kind, r, c);
    Tensor value(a.shape(), std::move(out));
    return finish(common_tape(a, b), std::move(value), {&a, &b}, [&] {
        return [kind, a = a.detached(), b = b.detached()](const Tensor& g) {
            const auto gv = g.values();
            const auto av2 = a.values();
            const auto bv2 = b.values();
            const std::size_t r2 = g.rows(), c2 = g.cols();
            std::vector<double> ga(g.size());
            std::vector<double> gb_full(g.size());
            for (std::size_t r = 0; r < r2; ++r) {
                for (std::size_t c = 0; c < c2; ++c) {
                    const std::size_t i = r * c2 + c;
                    ga[i] = gv[i] * bvalue(bv2, b.shape(), kind, r, c);
                    gb_full[i] = gv[i] * av2[i];
                }
            }
            Tensor gb = reduce_to(Tensor(g.shape(), std::move(gb_full)), b.shape(), kind);
            return std::vector<Tensor>{Tensor(g.shape(), std::move(ga)), std::move(gb)};
        };
    });
}

namespace {

template <typename Fwd, typename Dx>
Tensor elementwise_unary(const Tensor& a, Fwd&& fwd, Dx&& derivative_at) {
    const auto av = a.values();
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
    Tensor value(a.shape(), std::move(out));
    return finish(a.tape(), std::move(value), {&a}, [&] {
        return [a = a.detached(), derivative_at](const Tensor& g) {
            const auto gv = g.values();
            const auto av2 = a.values();
            std::vector<double> ga(gv.size());
            for (std::size_t i = 0; i < gv.size(); ++i) ga[i] = gv[i] * derivative_at(av2[i]);
            return std::vector<Tensor>{Tensor(g.shape(), std::move(ga))};
        };
    });
}

}  // namespace

Tensor scale(const Tensor& a, double factor) {
    return elementwise_unary(
        a, [factor](double x) { return factor * x; },
        [factor](double) { return factor; });
}

Tensor relu(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return std::exp(x); },
        [](double x) { return std::exp(x); });
}

Tensor log(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return std::log(x); },
        [](double x) { return 1.0 / x; });
}

Tensor abs(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return std::abs(x); },
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.values()) total += v;
    return finish(a.tape(), Tensor::scalar(total), {&a}, [&] {
        return [shape = a.shape()](const Tensor& g) {
            return std::vector<Tensor>{Tensor::filled(shape.rows, shape.cols, g.item())};
        };
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) {
        throw ContractError("mean of an empty tensor");
    }
    double total = 0.0;
    for (double v : a.values()) total += v;
    const double inv = 1.0 / static_cast<double>(a.size());
    return finish(a.tape(), Tensor::scalar(total * inv), {&a}, [&] {
        return [shape = a.shape(), inv](const Tensor& g) {
            return std::vector<Tensor>{Tensor::filled(shape.rows, shape.cols, g.item() * inv)};
        };
    });
}

Tensor row_gather(const Tensor& a, const std::vector<std::size_t>& row_indices) {
    const std::size_t cols = a.cols();
    const auto av = a.values();
    std::vector<double> out(row_indices.size() * cols);
    for (std::size_t r = 0; r < row_indices.size(); ++r) {
        if (row_indices[r] >= a.rows()) {
            throw IndexError("row_gather: row " + std::to_string(row_indices[r]) +
                             " out of range for " + a.shape().to_string());
        }
        std::copy_n(&av[row_indices[r] * cols], cols, &out[r * cols]);
    }
    Tensor value({row_indices.size(), cols}, std::move(out));
    return finish(a.tape(), std::move(value), {&a}, [&] {
        return [shape = a.shape(), row_indices](const Tensor& g) {
            const auto gv = g.values();
            std::vector<double> ga(shape.size(), 0.0);
            for (std::size_t r = 0; r < row_indices.size(); ++r)
                for (std::size_t c = 0; c < shape.cols; ++c)
                    ga[row_indices[r] * shape.cols + c] += gv[r * shape.cols + c];
            return std::vector<Tensor>{Tensor(shape, std::move(ga))};
        };
    });
}

Tensor pick_per_row(const Tensor& a, const std::vector<std::size_t>& column_indices) {
    if (column_indices.size() != a.rows()) {
        throw DimensionError("pick_per_row: " + std::to_string(column_indices.size()) +
                             " indices for " + a.shape().to_string());
    }
    const auto av = a.values();
    std::vector<double> out(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        if (column_indices[r] >= a.cols()) {
            throw IndexError("pick_per_row: column " + std::to_string(column_indices[r]) +
                             " out of range for " + a.shape().to_string());
        }
        out[r] = av[r * a.cols() + column_indices[r]];
    }
    Tensor value({a.rows(), 1}, std::move(out));
    return finish(a.tape(), std::move(value), {&a}, [&] {
        return [shape = a.shape(), column_indices](const Tensor& g) {
            const auto gv = g.values();
            std::vector<double> ga(shape.size(), 0.0);
            for (std::size_t r = 0; r < shape.rows; ++r)
                ga[r * shape.cols + column_indices[r]] = gv[r];
            return std::vector<Tensor>{Tensor(shape, std::move(ga))};
        };
    });
}

Tensor set_column(const Tensor& a, std::size_t c, const Tensor& column) {
    if (c >= a.cols()) {
        throw IndexError("set_column: column " + std::to_string(c) + " out of range for " +
                         a.shape().to_string());
    }
    if (column.rows() != a.rows() || column.cols() != 1) {
        throw DimensionError("set_column: column shape " + column.shape().to_string() +
                             " does not fit " + a.shape().to_string());
    }
    const auto av = a.values();
    const auto cv = column.values();
    std::vector<double> out(av.begin(), av.end());
    for (std::size_t r = 0; r < a.rows(); ++r) out[r * a.cols() + c] = cv[r];
    Tensor value(a.shape(), std::move(out));
    return finish(common_tape(a, column), std::move(value), {&a, &column}, [&] {
        return [shape = a.shape(), c](const Tensor& g) {
            const auto gv = g.values();
            std::vector<double> ga(gv.begin(), gv.end());
            std::vector<double> gcol(shape.rows);
            for (std::size_t r = 0; r < shape.rows; ++r) {
                gcol[r] = gv[r * shape.cols + c];
                ga[r * shape.cols + c] = 0.0;
            }
            return std::vector<Tensor>{Tensor(shape, std::move(ga)),
                                       Tensor({shape.rows, 1}, std::move(gcol))};
        };
    });
}

Tensor l2_normalize_rows(const Tensor& a, double eps) {
    if (eps <= 0.0) {
        throw ContractError("l2_normalize_rows: eps must be positive");
    }
    const std::size_t rows = a.rows(), cols = a.cols();
    const auto av = a.values();
    std::vector<double> out(a.size());
    std::vector<double> norms(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double sq = 0.0;
        for (std::size_t c = 0; c < cols; ++c) sq += av[r * cols + c] * av[r * cols + c];
        const double norm = std::sqrt(sq);
        const double denom = std::max(norm, eps);
        norms[r] = norm;
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] / denom;
    }
    Tensor value(a.shape(), out);
    return finish(a.tape(), std::move(value), {&a}, [&] {
        // For norm >= eps the quotient rule gives dv = (g - y <y,g>) / norm;
        // below eps the denominator is the constant eps and the map is linear.
        return [shape = a.shape(), eps, norms = std::move(norms),
                y = std::move(out)](const Tensor& g) {
            const auto gv = g.values();
            std::vector<double> ga(shape.size());
            for (std::size_t r = 0; r < shape.rows; ++r) {
                const std::size_t off = r * shape.cols;
                if (norms[r] >= eps) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < shape.cols; ++c) dot += y[off + c] * gv[off + c];
                    for (std::size_t c = 0; c < shape.cols; ++c)
                        ga[off + c] = (gv[off + c] - y[off + c] * dot) / norms[r];
                } else {
                    for (std::size_t c = 0; c < shape.cols; ++c) ga[off + c] = gv[off + c] / eps;
                }
            }
            return std::vector<Tensor>{Tensor(shape, std::move(ga))};
        };
    });
}

Tensor log_sum_exp_rows(const Tensor& a) {
    if (a.cols() < 1) {
        throw ContractError("log_sum_exp_rows: needs at least one column");
    }
    const std::size_t rows = a.rows(), cols = a.cols();
    const auto av = a.values();
    std::vector<double> out(rows);
    std::vector<double> softmax(a.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t off = r * cols;
        double hi = av[off];
        for (std::size_t c = 1; c < cols; ++c) hi = std::max(hi, av[off + c]);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            softmax[off + c] = std::exp(av[off + c] - hi);
            total += softmax[off + c];
        }
        for (std::size_t c = 0; c < cols; ++c) softmax[off + c] /= total;
        out[r] = hi + std::log(total);
    }
    Tensor value({rows, 1}, std::move(out));
    return finish(a.tape(), std::move(value), {&a}, [&] {
        return [shape = a.shape(), softmax = std::move(softmax)](const Tensor& g) {
            const auto gv = g.values();
            std::vector<double> ga(shape.size());
            for (std::size_t r = 0; r < shape.rows; ++r)
                for (std::size_t c = 0; c < shape.cols; ++c)
                    ga[r * shape.cols + c] = gv[r] * softmax[r * shape.cols + c];
            return std::vector<Tensor>{Tensor(shape, std::move(ga))};
        };
    });
}

Tensor sum_scalars(const std::vector<Tensor>& terms) {
    if (terms.empty()) {
        throw ContractError("sum_scalars: empty term list");
    }
    double total = 0.0;
    GradientTape* tape = nullptr;
    std::vector<int> parents;
    parents.reserve(terms.size());
    for (const Tensor& t : terms) {
        if (t.size() != 1) {
            throw DimensionError("sum_scalars: term has shape " + t.shape().to_string());
        }
        if (t.on_tape()) {
            if (tape != nullptr && tape != t.tape()) {
                throw ContractError("sum_scalars: terms belong to different tapes");
            }
            tape = t.tape();
        }
        parents.push_back(t.on_tape() ? t.node() : -1);
        total += t.item();
    }
    if (tape == nullptr) return Tensor::scalar(total);
    return tape->record(Tensor::scalar(total), std::move(parents),
                        [n = terms.size()](const Tensor& g) {
                            return std::vector<Tensor>(n, g);
                        });
}

// ---- finite_diff_check ------------------------------------------------------

FiniteDiffReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                                   const Tensor& x, double step) {
    if (step <= 0.0) {
        throw ContractError("finite_diff_check: step must be positive");
    }

    GradientTape tape;
    Tensor watched = tape.watch(x.detached());
    Tensor out = f(watched);
    if (out.size() != 1) {
        throw ContractError("finite_diff_check: f must return a scalar");
    }

    std::vector<double> analytic(x.size(), 0.0);
    if (out.on_tape() && out.tape() == &tape) {
        Gradients grads = tape.backward(out);
        if (grads.contains(watched)) {
            const auto gv = grads.at(watched).values();
            analytic.assign(gv.begin(), gv.end());
        }
    }

    const auto xv = x.values();
    std::vector<double> rel(x.size());
    double worst = 0.0;
    std::vector<double> probe(xv.begin(), xv.end());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double original = probe[i];
        probe[i] = original + step;
        const double f_plus = f(Tensor(x.shape(), probe)).item();
        probe[i] = original - step;
        const double f_minus = f(Tensor(x.shape(), probe)).item();
        probe[i] = original;
        const double numeric = (f_plus - f_minus) / (2.0 * step);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
        rel[i] = std::abs(numeric - analytic[i]) / denom;
        worst = std::max(worst, rel[i]);
    }
    return FiniteDiffReport{Tensor(x.shape(), std::move(rel)), worst};
}

}  // namespace sslfs
