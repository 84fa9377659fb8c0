#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace edlab {

// Dense row-major f64 tensor. The validating constructor rejects NaN/Inf;
// factory helpers that fill with known-finite values skip the scan.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);
    static Tensor identity(std::size_t n);

    bool empty() const { return data_.empty(); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool is_scalar() const { return data_.size() == 1; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double item() const;  // value of a 1-element tensor

    Tensor row(std::size_t i) const;  // rank-2 -> rank-1 copy
    void set_row(std::size_t i, const Tensor& r);
    Tensor transposed() const;
    Tensor reshaped(std::vector<std::size_t> shape) const;

    void fill(double v);
    void add_scaled(const Tensor& other, double s);  // *this += s * other

    double l1_norm() const;   // entrywise sum of |x|
    double l2_norm() const;
    double max_abs() const;
    double sum() const;
    bool all_finite() const;

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

    // FNV-1a over shape and raw data bytes.
    std::uint64_t checksum() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double s);
double dot(const Tensor& a, const Tensor& b);

}  // namespace edlab
