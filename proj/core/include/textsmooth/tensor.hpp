#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace textsmooth {

// Dense row-major tensor of 64-bit floats. Plain value type; anything that
// needs gradients goes through the Tape in autodiff.hpp.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<int> shape);
    static Tensor filled(std::vector<int> shape, double v);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // 2-d accessors
    int rows() const;
    int cols() const;
    double& at(int r, int c);
    double at(int r, int c) const;
    double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()); }
    const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    std::string shape_str() const; // "[2,3]", for error messages

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

// ---- kernels (forward math; autodiff wraps these) ----

// C[i,j] = sum_k A[i,k] * B[k,j]
Tensor matmul(const Tensor& a, const Tensor& b);
// C[i,j] = sum_k A[i,k] * B[j,k]   (A * B^T)
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// C[i,j] = sum_k A[k,i] * B[k,j]   (A^T * B); accumulates over k ascending
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// Row-wise stable softmax: shift by row max before exponentiation.
Tensor softmax_rows(const Tensor& m);
// Row-wise log-softmax, same stabilization.
Tensor log_softmax_rows(const Tensor& m);

// Per-row normalization over the last axis, then gain/bias (both length cols).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-12);

// Mean over rows of -sum_j target[i,j] * log softmax(logits)[i,j].
// Targets must be row-stochastic within 1e-6.
double cross_entropy(const Tensor& logits, const Tensor& target);

// Exact-erf GELU and its derivative.
double gelu_scalar(double x);
double gelu_grad_scalar(double x);
Tensor gelu(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor add_row(const Tensor& x, const Tensor& row); // broadcast row over rows of x
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise
Tensor scale(const Tensor& x, double c);
Tensor take_rows(const Tensor& x, const std::vector<int>& rows);
double sum(const Tensor& x);

} // namespace textsmooth
