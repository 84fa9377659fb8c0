#include "edlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "edlab/errors.hpp"

namespace edlab {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("tensor: data length does not match shape product");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw NumericError("tensor: non-finite entry rejected");
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.assign(shape_product(t.shape_), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t = zeros(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::scalar(double value) {
    Tensor t = zeros({1});
    t.data_[0] = value;
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

double Tensor::item() const {
    if (data_.size() != 1) throw ContractError("tensor: item() on non-scalar");
    return data_[0];
}

Tensor Tensor::row(std::size_t i) const {
    if (rank() != 2) throw DimensionError("tensor: row() requires rank 2");
    if (i >= shape_[0]) throw IndexError("tensor: row index out of range");
    Tensor r = zeros({shape_[1]});
    std::memcpy(r.data(), data_.data() + i * shape_[1], shape_[1] * sizeof(double));
    return r;
}

void Tensor::set_row(std::size_t i, const Tensor& r) {
    if (rank() != 2 || r.size() != shape_[1]) throw DimensionError("tensor: set_row shape mismatch");
    std::memcpy(data_.data() + i * shape_[1], r.data(), shape_[1] * sizeof(double));
}

Tensor Tensor::transposed() const {
    if (rank() != 2) throw DimensionError("tensor: transposed() requires rank 2");
    Tensor t = zeros({shape_[1], shape_[0]});
    for (std::size_t i = 0; i < shape_[0]; ++i)
        for (std::size_t j = 0; j < shape_[1]; ++j) t.at(j, i) = at(i, j);
    return t;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (shape_product(shape) != data_.size()) throw DimensionError("tensor: reshape size mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_scaled(const Tensor& other, double s) {
    if (!same_shape(other)) throw DimensionError("tensor: add_scaled shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
}

double Tensor::l1_norm() const {
    double s = 0.0;
    for (double v : data_) s += std::fabs(v);
    return s;
}

double Tensor::l2_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

double Tensor::sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::uint64_t Tensor::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t d : shape_) mix_bytes(&d, sizeof(d));
    mix_bytes(data_.data(), data_.size() * sizeof(double));
    return h;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("tensor: operator+ shape mismatch");
    Tensor c = a;
    c.add_scaled(b, 1.0);
    return c;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("tensor: operator- shape mismatch");
    Tensor c = a;
    c.add_scaled(b, -1.0);
    return c;
}

Tensor operator*(const Tensor& a, double s) {
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= s;
    return c;
}

double dot(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) throw DimensionError("tensor: dot size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace edlab
