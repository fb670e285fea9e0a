#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tfcsr {

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (shape_numel(shape) != data.size())
            throw std::invalid_argument("Tensor: shape does not match data size");
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        const std::size_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

inline bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

// Copies row `index` of a batch tensor [n, ...] into its own tensor
// with the per-example shape.
inline Tensor slice_example(const Tensor& batch, std::size_t index) {
    if (batch.rank() < 1 || index >= batch.dim(0))
        throw std::invalid_argument("slice_example: index out of range");
    std::vector<std::size_t> shape(batch.shape.begin() + 1, batch.shape.end());
    const std::size_t step = shape_numel(shape);
    std::vector<double> data(batch.data.begin() + index * step,
                             batch.data.begin() + (index + 1) * step);
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace tfcsr
