#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace skillscape {

// Dense row-major 3-tensor. Model tensors are indexed [origin][major][destination].
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t n0, std::size_t n1, std::size_t n2, double fill = 0.0)
        : dims_{n0, n1, n2}, data_(n0 * n1 * n2, fill) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }

    std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
    const std::array<std::size_t, 3>& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool same_shape(const Tensor3& other) const { return dims_ == other.dims_; }

private:
    std::array<std::size_t, 3> dims_{0, 0, 0};
    std::vector<double> data_;
};

}  // namespace skillscape
