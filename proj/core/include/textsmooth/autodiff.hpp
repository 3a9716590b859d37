#pragma once

#include <functional>
#include <vector>

#include "textsmooth/tensor.hpp"

namespace textsmooth {

class Tape;

// Handle to a node on a Tape. Cheap to copy; invalid once the tape is gone.
class Value {
public:
    Value() = default;

    const Tensor& val() const;
    // Accumulated gradient; zeros until backward() reaches this node.
    const Tensor& grad() const;

    Tape* tape() const { return tape_; }
    int node() const { return node_; }
    explicit operator bool() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Value(Tape* t, int n) : tape_(t), node_(n) {}
    Tape* tape_ = nullptr;
    int node_ = -1;
};

// Reverse-mode tape. Single-threaded: one recording, one backward pass at a
// time. Node creation order is the topological order, so backward() is a
// single reverse sweep.
//
// Gradients accumulate across backward() calls until zero_grad(); training
// code typically uses a fresh tape per step instead of resetting.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Differentiable leaf (parameter or input under test).
    Value leaf(Tensor t);
    // Non-differentiable leaf; backward never propagates into it.
    Value constant(Tensor t);

    // loss must hold exactly one element. Seeds d(loss)/d(loss) = 1 and
    // sweeps the tape; leaf gradients accumulate, intermediate gradients are
    // rebuilt per call.
    void backward(const Value& loss);

    void zero_grad();

    std::size_t node_count() const { return nodes_.size(); }

    // -- low-level access used by the op definitions and optimizers --
    const Tensor& value_at(int node) const { return nodes_[static_cast<std::size_t>(node)].value; }
    const Tensor& grad_at(int node);
    bool requires_grad(int node) const { return nodes_[static_cast<std::size_t>(node)].requires_grad; }
    // Appends a node; backward(self_node) is called during the reverse sweep.
    Value emit(Tensor value, bool requires_grad,
               std::function<void(Tape&, int)> backward_fn);
    void accumulate_grad(int node, const Tensor& delta);
    Tensor& grad_buffer(int node);

private:
    struct Node {
        Tensor value;
        Tensor grad; // empty until first needed
        std::function<void(Tape&, int)> back;
        bool requires_grad = false;
        bool is_leaf = false;
    };
    std::vector<Node> nodes_;
};

// ---- recorded operations ----
// All operands must live on the same tape. Forward semantics match the
// kernels in tensor.hpp.

Value add(const Value& a, const Value& b);
Value add_row(const Value& x, const Value& row);
Value scale(const Value& x, double c);
Value mul_const(const Value& x, Tensor mask); // elementwise by a fixed tensor
Value matmul(const Value& a, const Value& b);
Value matmul_nt(const Value& a, const Value& b);
Value take_rows(const Value& x, std::vector<int> rows);
Value slice_cols(const Value& x, int c0, int c1);
Value concat_cols(const std::vector<Value>& xs);
Value softmax_rows(const Value& x);
Value layer_norm(const Value& x, const Value& gain, const Value& bias,
                 double eps = 1e-12);
Value gelu(const Value& x);
Value sum(const Value& x);
// Mean over rows of -sum_j target[i,j] * log softmax(logits)[i,j]; the
// log-softmax is fused so log(0) never appears. Returns a scalar node.
Value cross_entropy(const Value& logits, Tensor target);

} // namespace textsmooth
