#include "textsmooth/autodiff.hpp"

#include <cmath>
#include <utility>

#include "textsmooth/errors.hpp"

namespace textsmooth {

namespace {

Tape* common_tape(const Value& a, const Value& b, const char* op) {
    if (!a || !b) {
        throw ContractError(std::string(op) + ": operand not bound to a tape");
    }
    if (a.tape() != b.tape()) {
        throw ContractError(std::string(op) + ": operands live on different tapes");
    }
    return a.tape();
}

Tape* own_tape(const Value& a, const char* op) {
    if (!a) {
        throw ContractError(std::string(op) + ": operand not bound to a tape");
    }
    return a.tape();
}

} // namespace

const Tensor& Value::val() const { return tape_->value_at(node_); }
const Tensor& Value::grad() const { return tape_->grad_at(node_); }

Value Tape::leaf(Tensor t) {
    Node n;
    n.value = std::move(t);
    n.requires_grad = true;
    n.is_leaf = true;
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::constant(Tensor t) {
    Node n;
    n.value = std::move(t);
    n.requires_grad = false;
    n.is_leaf = true;
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::emit(Tensor value, bool requires_grad,
                 std::function<void(Tape&, int)> backward_fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(backward_fn);
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Tape::grad_buffer(int node) {
    Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.grad.empty()) {
        n.grad = Tensor::zeros(n.value.shape());
    }
    return n.grad;
}

const Tensor& Tape::grad_at(int node) { return grad_buffer(node); }

void Tape::accumulate_grad(int node, const Tensor& delta) {
    Tensor& g = grad_buffer(node);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += delta[i];
    }
}

void Tape::backward(const Value& loss) {
    if (!loss || loss.tape() != this) {
        throw ContractError("backward: loss is not a node of this tape");
    }
    const int top = loss.node();
    const Node& loss_node = nodes_[static_cast<std::size_t>(top)];
    if (loss_node.value.size() != 1) {
        throw ContractError("backward: loss must be scalar, got shape " +
                            loss_node.value.shape_str());
    }
    // Leaf gradients persist (accumulate across calls); intermediate
    // gradients are scratch for this sweep.
    for (std::size_t i = 0; i <= static_cast<std::size_t>(top); ++i) {
        Node& n = nodes_[i];
        if (!n.is_leaf && !n.grad.empty()) {
            std::fill(n.grad.values().begin(), n.grad.values().end(), 0.0);
        }
    }
    grad_buffer(top)[0] += 1.0;
    for (int id = top; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.back && n.requires_grad && !n.grad.empty()) {
            n.back(*this, id);
        }
    }
}

void Tape::zero_grad() {
    for (Node& n : nodes_) {
        if (!n.grad.empty()) {
            std::fill(n.grad.values().begin(), n.grad.values().end(), 0.0);
        }
    }
}

// ---- ops ----

Value add(const Value& a, const Value& b) {
    Tape* t = common_tape(a, b, "add");
    if (!a.val().same_shape(b.val())) {
        throw ShapeError("add: incompatible shapes " + a.val().shape_str() +
                         " and " + b.val().shape_str());
    }
    const int ia = a.node(), ib = b.node();
    const bool rg = t->requires_grad(ia) || t->requires_grad(ib);
    return t->emit(add(a.val(), b.val()), rg, [ia, ib](Tape& tp, int self) {
        const Tensor& g = tp.grad_at(self);
        if (tp.requires_grad(ia)) tp.accumulate_grad(ia, g);
        if (tp.requires_grad(ib)) tp.accumulate_grad(ib, g);
    });
}

Value add_row(const Value& x, const Value& row) {
    Tape* t = common_tape(x, row, "add_row");
    const int ix = x.node(), ir = row.node();
    const bool rg = t->requires_grad(ix) || t->requires_grad(ir);
    return t->emit(add_row(x.val(), row.val()), rg, [ix, ir](Tape& tp, int self) {
        const Tensor& g = tp.grad_at(self);
        if (tp.requires_grad(ix)) tp.accumulate_grad(ix, g);
        if (tp.requires_grad(ir)) {
            Tensor& rg_ = tp.grad_buffer(ir);
            const int r = g.rows(), c = g.cols();
            for (int i = 0; i < r; ++i) {
                const double* gi = g.row_ptr(i);
                for (int j = 0; j < c; ++j) {
                    rg_[static_cast<std::size_t>(j)] += gi[j];
                }
            }
        }
    });
}

Value scale(const Value& x, double c) {
    Tape* t = own_tape(x, "scale");
    const int ix = x.node();
    const bool rg = t->requires_grad(ix);
    return t->emit(scale(x.val(), c), rg, [ix, c](Tape& tp, int self) {
        if (!tp.requires_grad(ix)) return;
        tp.accumulate_grad(ix, scale(tp.grad_at(self), c));
    });
}

Value mul_const(const Value& x, Tensor mask) {
    Tape* t = own_tape(x, "mul_const");
    if (!x.val().same_shape(mask)) {
        throw ShapeError("mul_const: mask shape " + mask.shape_str() +
                         " does not match " + x.val().shape_str());
    }
    const int ix = x.node();
    const bool rg = t->requires_grad(ix);
    Tensor out = mul(x.val(), mask);
    return t->emit(std::move(out), rg,
                   [ix, m = std::move(mask)](Tape& tp, int self) {
                       if (!tp.requires_grad(ix)) return;
                       tp.accumulate_grad(ix, mul(tp.grad_at(self), m));
                   });
}

Value matmul(const Value& a, const Value& b) {
    Tape* t = common_tape(a, b, "matmul");
    const int ia = a.node(), ib = b.node();
    const bool rg = t->requires_grad(ia) || t->requires_grad(ib);
    return t->emit(matmul(a.val(), b.val()), rg, [ia, ib](Tape& tp, int self) {
        const Tensor& g = tp.grad_at(self);
        // dA = G * B^T, dB = A^T * G
        if (tp.requires_grad(ia)) tp.accumulate_grad(ia, matmul_nt(g, tp.value_at(ib)));
        if (tp.requires_grad(ib)) tp.accumulate_grad(ib, matmul_tn(tp.value_at(ia), g));
    });
}

Value matmul_nt(const Value& a, const Value& b) {
    Tape* t = common_tape(a, b, "matmul_nt");
    const int ia = a.node(), ib = b.node();
    const bool rg = t->requires_grad(ia) || t->requires_grad(ib);
    return t->emit(matmul_nt(a.val(), b.val()), rg, [ia, ib](Tape& tp, int self) {
        const Tensor& g = tp.grad_at(self);
        // C = A * B^T: dA = G * B, dB = G^T * A
        if (tp.requires_grad(ia)) tp.accumulate_grad(ia, matmul(g, tp.value_at(ib)));
        if (tp.requires_grad(ib)) tp.accumulate_grad(ib, matmul_tn(g, tp.value_at(ia)));
    });
}

Value take_rows(const Value& x, std::vector<int> rows) {
    Tape* t = own_tape(x, "take_rows");
    const int ix = x.node();
    const bool rg = t->requires_grad(ix);
    Tensor out = take_rows(x.val(), rows);
    return t->emit(std::move(out), rg,
                   [ix, rs = std::move(rows)](Tape& tp, int self) {
                       if (!tp.requires_grad(ix)) return;
                       const Tensor& g = tp.grad_at(self);
                       // Scatter into a local buffer first: repeated rows are
                       // pre-summed exactly like the expected-embedding
                       // (matmul) route sums them, keeping the two input
                       // forms bit-identical under gradient accumulation.
                       Tensor delta = Tensor::zeros(tp.value_at(ix).shape());
                       const int c = g.cols();
                       for (std::size_t i = 0; i < rs.size(); ++i) {
                           const double* gi = g.row_ptr(static_cast<int>(i));
                           double* dst = delta.row_ptr(rs[i]);
                           for (int j = 0; j < c; ++j) {
                               dst[j] += gi[j];
                           }
                       }
                       tp.accumulate_grad(ix, delta);
                   });
}

Value slice_cols(const Value& x, int c0, int c1) {
    Tape* t = own_tape(x, "slice_cols");
    const Tensor& v = x.val();
    if (c0 < 0 || c1 > v.cols() || c0 >= c1) {
        throw ShapeError("slice_cols: bad range [" + std::to_string(c0) + "," +
                         std::to_string(c1) + ") for " + v.shape_str());
    }
    const int r = v.rows(), w = c1 - c0;
    Tensor out({r, w});
    for (int i = 0; i < r; ++i) {
        const double* src = v.row_ptr(i) + c0;
        std::copy(src, src + w, out.row_ptr(i));
    }
    const int ix = x.node();
    const bool rg = t->requires_grad(ix);
    return t->emit(std::move(out), rg, [ix, c0, w](Tape& tp, int self) {
        if (!tp.requires_grad(ix)) return;
        const Tensor& g = tp.grad_at(self);
        Tensor& xg = tp.grad_buffer(ix);
        for (int i = 0; i < g.rows(); ++i) {
            const double* gi = g.row_ptr(i);
            double* dst = xg.row_ptr(i) + c0;
            for (int j = 0; j < w; ++j) {
                dst[j] += gi[j];
            }
        }
    });
}

Value concat_cols(const std::vector<Value>& xs) {
    if (xs.empty()) {
        throw ContractError("concat_cols: no operands");
    }
    Tape* t = own_tape(xs[0], "concat_cols");
    const int r = xs[0].val().rows();
    int total = 0;
    bool rg = false;
    std::vector<int> ids, widths;
    for (const Value& x : xs) {
        if (x.tape() != t) {
            throw ContractError("concat_cols: operands live on different tapes");
        }
        if (x.val().rows() != r) {
            throw ShapeError("concat_cols: row mismatch");
        }
        ids.push_back(x.node());
        widths.push_back(x.val().cols());
        total += x.val().cols();
        rg = rg || t->requires_grad(x.node());
    }
    Tensor out({r, total});
    int off = 0;
    for (const Value& x : xs) {
        const Tensor& v = x.val();
        for (int i = 0; i < r; ++i) {
            const double* src = v.row_ptr(i);
            std::copy(src, src + v.cols(), out.row_ptr(i) + off);
        }
        off += v.cols();
    }
    return t->emit(std::move(out), rg,
                   [ids, widths](Tape& tp, int self) {
                       const Tensor& g = tp.grad_at(self);
                       int off = 0;
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                           const int w = widths[k];
                           if (tp.requires_grad(ids[k])) {
                               Tensor& xg = tp.grad_buffer(ids[k]);
                               for (int i = 0; i < g.rows(); ++i) {
                                   const double* gi = g.row_ptr(i) + off;
                                   double* dst = xg.row_ptr(i);
                                   for (int j = 0; j < w; ++j) {
                                       dst[j] += gi[j];
                                   }
                               }
                           }
                           off += w;
                       }
                   });
}

Value softmax_rows(const Value& x) {
    Tape* t = own_tape(x, "softmax_rows");
    const int ix = x.node();
    const bool rg = t->requires_grad(ix);
    return t->emit(softmax_rows(x.val()), rg, [ix](Tape& tp, int self) {
        if (!tp.requires_grad(ix)) return;
        const Tensor& y = tp.value_at(self);
        const Tensor& g = tp.grad_at(self);
        Tensor& xg = tp.grad_buffer(ix);
        const int r = y.rows(), c = y.cols();
        // dx = y * (g - sum_j g_j y_j) per row
        for (int i = 0; i < r; ++i) {
            const double* yi = y.row_ptr(i);
            const double* gi = g.row_ptr(i);
            double dot = 0.0;
            for (int j = 0; j < c; ++j) {
                dot += gi[j] * yi[j];
            }
            double* dst = xg.row_ptr(i);
            for (int j = 0; j < c; ++j) {
                dst[j] += yi[j] * (gi[j] - dot);
            }
        }
    });
}

Value layer_norm(const Value& x, const Value& gain, const Value& bias, double eps) {
    Tape* t = common_tape(x, gain, "layer_norm");
    common_tape(gain, bias, "layer_norm");
    const int ix = x.node(), ig = gain.node(), ib = bias.node();
    const bool rg = t->requires_grad(ix) || t->requires_grad(ig) || t->requires_grad(ib);
    return t->emit(layer_norm(x.val(), gain.val(), bias.val(), eps), rg,
                   [ix, ig, ib, eps](Tape& tp, int self) {
                       const Tensor& xv = tp.value_at(ix);
                       const Tensor& gv = tp.value_at(ig);
                       const Tensor& g = tp.grad_at(self);
                       const int r = xv.rows(), c = xv.cols();
                       const bool need_x = tp.requires_grad(ix);
                       const bool need_g = tp.requires_grad(ig);
                       const bool need_b = tp.requires_grad(ib);
                       for (int i = 0; i < r; ++i) {
                           const double* xi = xv.row_ptr(i);
                           const double* gi = g.row_ptr(i);
                           double mean = 0.0;
                           for (int j = 0; j < c; ++j) mean += xi[j];
                           mean /= c;
                           double var = 0.0;
                           for (int j = 0; j < c; ++j) {
                               const double d = xi[j] - mean;
                               var += d * d;
                           }
                           var /= c;
                           const double inv = 1.0 / std::sqrt(var + eps);
                           if (need_g || need_b) {
                               for (int j = 0; j < c; ++j) {
                                   const double xhat = (xi[j] - mean) * inv;
                                   if (need_g) tp.grad_buffer(ig)[static_cast<std::size_t>(j)] += gi[j] * xhat;
                                   if (need_b) tp.grad_buffer(ib)[static_cast<std::size_t>(j)] += gi[j];
                               }
                           }
                           if (need_x) {
                               // dxhat = g * gain; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
                               double m1 = 0.0, m2 = 0.0;
                               for (int j = 0; j < c; ++j) {
                                   const double dxh = gi[j] * gv[static_cast<std::size_t>(j)];
                                   const double xhat = (xi[j] - mean) * inv;
                                   m1 += dxh;
                                   m2 += dxh * xhat;
                               }
                               m1 /= c;
                               m2 /= c;
                               double* dst = tp.grad_buffer(ix).row_ptr(i);
                               for (int j = 0; j < c; ++j) {
                                   const double dxh = gi[j] * gv[static_cast<std::size_t>(j)];
                                   const double xhat = (xi[j] - mean) * inv;
                                   dst[j] += inv * (dxh - m1 - xhat * m2);
                               }
                           }
                       }
                   });
}

Value gelu(const Value& x) {
    Tape* t = own_tape(x, "gelu");
    const int ix = x.node();
    const bool rg = t->requires_grad(ix);
    return t->emit(gelu(x.val()), rg, [ix](Tape& tp, int self) {
        if (!tp.requires_grad(ix)) return;
        const Tensor& xv = tp.value_at(ix);
        const Tensor& g = tp.grad_at(self);
        Tensor& xg = tp.grad_buffer(ix);
        for (std::size_t i = 0; i < xv.size(); ++i) {
            xg[i] += g[i] * gelu_grad_scalar(xv[i]);
        }
    });
}

Value sum(const Value& x) {
    Tape* t = own_tape(x, "sum");
    const int ix = x.node();
    const bool rg = t->requires_grad(ix);
    return t->emit(Tensor::scalar(sum(x.val())), rg, [ix](Tape& tp, int self) {
        if (!tp.requires_grad(ix)) return;
        const double g = tp.grad_at(self)[0];
        Tensor& xg = tp.grad_buffer(ix);
        for (std::size_t i = 0; i < xg.size(); ++i) {
            xg[i] += g;
        }
    });
}

Value cross_entropy(const Value& logits, Tensor target) {
    Tape* t = own_tape(logits, "cross_entropy");
    const int il = logits.node();
    const bool rg = t->requires_grad(il);
    const double loss = cross_entropy(logits.val(), target);
    return t->emit(Tensor::scalar(loss), rg,
                   [il, tg = std::move(target)](Tape& tp, int self) {
                       if (!tp.requires_grad(il)) return;
                       const double g = tp.grad_at(self)[0];
                       const Tensor p = softmax_rows(tp.value_at(il));
                       Tensor& lg = tp.grad_buffer(il);
                       const int r = p.rows(), c = p.cols();
                       const double w = g / r;
                       for (int i = 0; i < r; ++i) {
                           const double* pi = p.row_ptr(i);
                           const double* ti = tg.row_ptr(i);
                           double tsum = 0.0;
                           for (int j = 0; j < c; ++j) tsum += ti[j];
                           double* dst = lg.row_ptr(i);
                           for (int j = 0; j < c; ++j) {
                               dst[j] += w * (pi[j] * tsum - ti[j]);
                           }
                       }
                   });
}

} // namespace textsmooth
