#include "textsmooth/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "textsmooth/errors.hpp"

namespace textsmooth {

namespace {

std::size_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty()) {
        throw ShapeError("tensor shape must have at least one dimension");
    }
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) {
            throw ShapeError("tensor dimensions must be positive, got " +
                             std::to_string(d));
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_to_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

[[noreturn]] void throw_shape(const std::string& op, const Tensor& a, const Tensor& b) {
    throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " +
                     b.shape_str());
}

void require_2d(const Tensor& t, const char* op) {
    if (t.ndim() != 2) {
        throw ShapeError(std::string(op) + ": expected 2-d tensor, got " + t.shape_str());
    }
}

} // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size()) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_str(shape_));
    }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::filled(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    if (r == 0) {
        throw ShapeError("from_rows: no rows given");
    }
    const int c = static_cast<int>(rows.begin()->size());
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(r) * static_cast<std::size_t>(c));
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) {
            throw ShapeError("from_rows: ragged rows");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

int Tensor::rows() const {
    if (ndim() != 2) {
        throw ShapeError("rows(): tensor is not 2-d: " + shape_str());
    }
    return shape_[0];
}

int Tensor::cols() const {
    if (ndim() != 2) {
        throw ShapeError("cols(): tensor is not 2-d: " + shape_str());
    }
    return shape_[1];
}

double& Tensor::at(int r, int c) {
    return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
                 static_cast<std::size_t>(c)];
}

double Tensor::at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
                 static_cast<std::size_t>(c)];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

std::string Tensor::shape_str() const { return shape_to_str(shape_); }

// ---- kernels ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    if (a.cols() != b.rows()) {
        throw_shape("matmul", a, b);
    }
    const int m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c({m, n});
    for (int i = 0; i < m; ++i) {
        double* crow = c.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b.row_ptr(p);
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_nt");
    require_2d(b, "matmul_nt");
    if (a.cols() != b.cols()) {
        throw_shape("matmul_nt", a, b);
    }
    const int m = a.rows(), k = a.cols(), n = b.rows();
    Tensor c({m, n});
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (int j = 0; j < n; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (int p = 0; p < k; ++p) {
                acc += arow[p] * brow[p];
            }
            crow[j] = acc;
        }
    }
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_tn");
    require_2d(b, "matmul_tn");
    if (a.rows() != b.rows()) {
        throw_shape("matmul_tn", a, b);
    }
    const int k = a.rows(), m = a.cols(), n = b.cols();
    Tensor c({m, n});
    for (int p = 0; p < k; ++p) {
        const double* arow = a.row_ptr(p);
        const double* brow = b.row_ptr(p);
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c.row_ptr(i);
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
    return c;
}

Tensor softmax_rows(const Tensor& m) {
    require_2d(m, "softmax_rows");
    if (!m.all_finite()) {
        throw NumericError("softmax_rows: non-finite input");
    }
    const int r = m.rows(), c = m.cols();
    Tensor out({r, c});
    for (int i = 0; i < r; ++i) {
        const double* x = m.row_ptr(i);
        double* y = out.row_ptr(i);
        double mx = x[0];
        for (int j = 1; j < c; ++j) {
            mx = std::max(mx, x[j]);
        }
        double total = 0.0;
        for (int j = 0; j < c; ++j) {
            y[j] = std::exp(x[j] - mx);
            total += y[j];
        }
        for (int j = 0; j < c; ++j) {
            y[j] /= total;
        }
    }
    return out;
}

Tensor log_softmax_rows(const Tensor& m) {
    require_2d(m, "log_softmax_rows");
    if (!m.all_finite()) {
        throw NumericError("log_softmax_rows: non-finite input");
    }
    const int r = m.rows(), c = m.cols();
    Tensor out({r, c});
    for (int i = 0; i < r; ++i) {
        const double* x = m.row_ptr(i);
        double* y = out.row_ptr(i);
        double mx = x[0];
        for (int j = 1; j < c; ++j) {
            mx = std::max(mx, x[j]);
        }
        double total = 0.0;
        for (int j = 0; j < c; ++j) {
            total += std::exp(x[j] - mx);
        }
        const double lse = mx + std::log(total);
        for (int j = 0; j < c; ++j) {
            y[j] = x[j] - lse;
        }
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_2d(x, "layer_norm");
    const int r = x.rows(), c = x.cols();
    if (static_cast<int>(gain.size()) != c || static_cast<int>(bias.size()) != c) {
        throw ShapeError("layer_norm: gain/bias length must equal " +
                         std::to_string(c));
    }
    Tensor out({r, c});
    for (int i = 0; i < r; ++i) {
        const double* xi = x.row_ptr(i);
        double* yi = out.row_ptr(i);
        double mean = 0.0;
        for (int j = 0; j < c; ++j) {
            mean += xi[j];
        }
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            const double d = xi[j] - mean;
            var += d * d;
        }
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < c; ++j) {
            yi[j] = (xi[j] - mean) * inv * gain[static_cast<std::size_t>(j)] +
                    bias[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

double cross_entropy(const Tensor& logits, const Tensor& target) {
    require_2d(logits, "cross_entropy");
    require_2d(target, "cross_entropy");
    if (!logits.same_shape(target)) {
        throw_shape("cross_entropy", logits, target);
    }
    const int r = logits.rows(), c = logits.cols();
    for (int i = 0; i < r; ++i) {
        double s = 0.0;
        const double* t = target.row_ptr(i);
        for (int j = 0; j < c; ++j) {
            s += t[j];
        }
        if (std::fabs(s - 1.0) > 1e-6) {
            throw NumericError("cross_entropy: target row " + std::to_string(i) +
                               " sums to " + std::to_string(s) + ", expected 1");
        }
    }
    const Tensor logp = log_softmax_rows(logits);
    double loss = 0.0;
    for (int i = 0; i < r; ++i) {
        const double* t = target.row_ptr(i);
        const double* lp = logp.row_ptr(i);
        double row = 0.0;
        for (int j = 0; j < c; ++j) {
            row += t[j] * lp[j];
        }
        loss -= row;
    }
    return loss / r;
}

double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440));
}

double gelu_grad_scalar(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
    const double pdf = std::exp(-0.5 * x * x) * 0.39894228040143267794; // 1/sqrt(2*pi)
    return cdf + x * pdf;
}

Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = gelu_scalar(out[i]);
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw_shape("add", a, b);
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += b[i];
    }
    return out;
}

Tensor add_row(const Tensor& x, const Tensor& row) {
    require_2d(x, "add_row");
    if (static_cast<int>(row.size()) != x.cols()) {
        throw_shape("add_row", x, row);
    }
    Tensor out = x;
    const int r = x.rows(), c = x.cols();
    for (int i = 0; i < r; ++i) {
        double* yi = out.row_ptr(i);
        for (int j = 0; j < c; ++j) {
            yi[j] += row[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw_shape("mul", a, b);
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= b[i];
    }
    return out;
}

Tensor scale(const Tensor& x, double c) {
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= c;
    }
    return out;
}

Tensor take_rows(const Tensor& x, const std::vector<int>& rows) {
    require_2d(x, "take_rows");
    if (rows.empty()) {
        throw ShapeError("take_rows: empty row list");
    }
    const int c = x.cols();
    Tensor out({static_cast<int>(rows.size()), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        if (r < 0 || r >= x.rows()) {
            throw ShapeError("take_rows: row " + std::to_string(r) +
                             " out of range for " + x.shape_str());
        }
        const double* src = x.row_ptr(r);
        double* dst = out.row_ptr(static_cast<int>(i));
        std::copy(src, src + c, dst);
    }
    return out;
}

double sum(const Tensor& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i];
    }
    return s;
}

} // namespace textsmooth
