#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace naenc {

#ifdef NAENC_SINGLE_PRECISION
using real = float;
#else
using real = double;
#endif

// Dense row-major real array, rank 0..3, with an optional same-shape
// gradient slot. The numeric currency of all model math.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<real> values);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, real value);
    static Tensor identity(std::size_t n);
    static Tensor scalar(real value) { return Tensor({1}, {value}); }
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<real> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    // Rank-2 accessors; rank-1 tensors behave as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    real& at(std::size_t i) { return values_[i]; }
    real at(std::size_t i) const { return values_[i]; }
    real& at(std::size_t i, std::size_t j) { return values_[i * cols() + j]; }
    real at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }

    std::vector<real>& values() { return values_; }
    const std::vector<real>& values() const { return values_; }
    real* data() { return values_.data(); }
    const real* data() const { return values_.data(); }

    // Gradient slot. Allocated lazily, zero-filled.
    bool has_grad() const { return !grad_.empty(); }
    std::vector<real>& grad();
    const std::vector<real>& grad() const;
    void zero_grad();
    void drop_grad() { grad_.clear(); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    std::string shape_string() const; // "[2x3]"

private:
    std::vector<std::size_t> shape_;
    std::vector<real> values_;
    std::vector<real> grad_; // empty, or values_.size() entries
};

void check_same_shape(const Tensor& a, const Tensor& b, const char* op_name);

} // namespace naenc
