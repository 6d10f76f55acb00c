#ifndef SSLFS_TENSOR_HPP
#define SSLFS_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sslfs {

class GradientTape;
class Gradients;

// Row/column pair. Every tensor in this library is a dense row-major
// matrix of f64; scalars are 1x1 and vectors are 1xn rows or mx1 columns.
struct TensorShape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
    bool operator==(const TensorShape&) const = default;
    std::string to_string() const;
};

// Immutable dense matrix of doubles, optionally bound to a node of a
// GradientTape. Copies share the underlying buffer, so tensors are cheap
// to pass by value and safe to read from multiple threads.
class Tensor {
public:
    Tensor() = default;
    Tensor(TensorShape shape, std::vector<double> values);

    static Tensor zeros(std::size_t rows, std::size_t cols);
    static Tensor filled(std::size_t rows, std::size_t cols, double value);
    static Tensor scalar(double value);
    static Tensor row(std::vector<double> values);
    static Tensor column(std::vector<double> values);

    const TensorShape& shape() const { return shape_; }
    std::size_t rows() const { return shape_.rows; }
    std::size_t cols() const { return shape_.cols; }
    std::size_t size() const { return shape_.size(); }
    bool empty() const { return data_ == nullptr; }

    double at(std::size_t r, std::size_t c) const;
    double operator[](std::size_t flat_index) const { return (*data_)[flat_index]; }
    std::span<const double> values() const;

    // Value of a 1x1 tensor; ContractError otherwise.
    double item() const;

    bool on_tape() const { return tape_ != nullptr; }
    GradientTape* tape() const { return tape_; }
    int node() const { return node_; }

    // Same data, no tape binding (stop-gradient).
    Tensor detached() const;

private:
    friend class GradientTape;

    TensorShape shape_;
    std::shared_ptr<const std::vector<double>> data_;
    GradientTape* tape_ = nullptr;
    int node_ = -1;
};

// Gradient lookup produced by GradientTape::backward. Holds one tensor per
// reachable tape node.
class Gradients {
public:
    bool contains(const Tensor& t) const;
    // Gradient of the backward root w.r.t. t; ContractError if t is not a
    // node of the originating tape or was unreachable from the root.
    const Tensor& at(const Tensor& t) const;

private:
    friend class GradientTape;
    const GradientTape* tape_ = nullptr;
    std::vector<Tensor> by_node_;
};

// Reverse-mode tape. Operations append nodes in topological order; each
// node stores its parent handles and a pullback mapping the upstream
// gradient to per-parent gradient contributions.
//
// A tape is confined to one thread for its forward+backward lifetime.
// Distinct tapes may run concurrently.
class GradientTape {
public:
    using Pullback = std::function<std::vector<Tensor>(const Tensor& upstream)>;

    GradientTape() = default;
    GradientTape(const GradientTape&) = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    // Registers t as a leaf (trainable parameter) and returns the bound copy.
    Tensor watch(const Tensor& t);

    // Used by operations: bind `value` to a new node with the given parents.
    Tensor record(Tensor value, std::vector<int> parents, Pullback pullback);

    // Backpropagate from a scalar root. Returns gradients for every node
    // reachable from it; accumulation handles fan-out.
    Gradients backward(const Tensor& root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        std::vector<int> parents;
        Pullback pullback;  // empty for leaves
        TensorShape shape;
    };
    std::vector<Node> nodes_;
};

// ---- Differentiable operations -------------------------------------------
//
// Every op states its output shape deterministically from the input shapes
// and records itself on the inputs' tape (mixing two tapes is an error).
// In add/sub/mul the second operand broadcasts when it is 1x1, a 1xn row,
// or an mx1 column against an mxn first operand.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);  // subgradient 0 at 0
Tensor sum(const Tensor& a);   // 1x1
Tensor mean(const Tensor& a);  // 1x1
Tensor row_gather(const Tensor& a, const std::vector<std::size_t>& row_indices);
// y[r] = a[r][column_indices[r]], as an mx1 column.
Tensor pick_per_row(const Tensor& a, const std::vector<std::size_t>& column_indices);
// Copy of a with column c replaced by the mx1 tensor `column`. Gradient to
// a's original column c is zero (it does not reach the output).
Tensor set_column(const Tensor& a, std::size_t c, const Tensor& column);
// Each row divided by max(l2_norm(row), eps). Rows with norm >= eps come
// out unit length; the eps guard keeps zero rows at zero.
Tensor l2_normalize_rows(const Tensor& a, double eps = 1e-12);
// Per-row max-shifted log(sum(exp(row))), finite for all finite inputs.
Tensor log_sum_exp_rows(const Tensor& a);
// Sum of 1x1 tensors as a single n-ary node (batch loss assembly).
Tensor sum_scalars(const std::vector<Tensor>& terms);

// ---- Verification oracle ---------------------------------------------------

struct FiniteDiffReport {
    Tensor per_element_rel_error;  // same shape as x
    double max_rel_error = 0.0;
};

// Central-difference check of the tape gradient of f at x. f must map a
// tensor to a scalar tensor and be deterministic; it is called with a
// watched copy of x for the analytic pass and with plain constants for the
// difference quotients. Relative error per element uses denominator
// max(|analytic|, |numeric|, 1e-8).
FiniteDiffReport finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                                   const Tensor& x, double step = 1e-5);

}  // namespace sslfs

#endif
