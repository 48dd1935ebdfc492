#include "naenc/tensor.hpp"

#include <cmath>
#include <sstream>

#include "naenc/errors.hpp"

namespace naenc {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t extent : shape) {
        if (extent == 0) {
            throw ShapeError("tensor extents must be positive");
        }
        n *= extent;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_product(shape_), real(0)) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<real> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_product(shape_) != values_.size()) {
        throw ShapeError("tensor value count " + std::to_string(values_.size()) +
                         " does not match shape " + shape_string());
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, real value) {
    Tensor t(std::move(shape));
    for (real& v : t.values_) v = value;
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = real(1);
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<real> values) {
    return Tensor({rows, cols}, std::vector<real>(values));
}

std::size_t Tensor::rows() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape_[0];
    throw ShapeError("rows() needs a rank-1 or rank-2 tensor, got " + shape_string());
}

std::size_t Tensor::cols() const {
    if (rank() == 1) return shape_[0];
    if (rank() == 2) return shape_[1];
    throw ShapeError("cols() needs a rank-1 or rank-2 tensor, got " + shape_string());
}

std::vector<real>& Tensor::grad() {
    if (grad_.empty()) grad_.assign(values_.size(), real(0));
    return grad_;
}

const std::vector<real>& Tensor::grad() const {
    if (grad_.empty()) {
        throw Error("gradient slot not allocated");
    }
    return grad_;
}

void Tensor::zero_grad() {
    grad_.assign(values_.size(), real(0));
}

bool Tensor::all_finite() const {
    for (real v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_string() const {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) out << 'x';
        out << shape_[i];
    }
    out << ']';
    return out.str();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op_name) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op_name) + ": shapes " + a.shape_string() + " and " +
                         b.shape_string() + " differ");
    }
}

} // namespace naenc
