#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace scone::ad {

// Dense row-major tensor of doubles. Rank is 1 (vectors) or 2 (matrices)
// everywhere in this codebase.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
        : shape(std::move(shape_)), data(std::move(data_)) {
        if (data.size() != count(shape)) {
            throw std::invalid_argument("Tensor: shape/data size mismatch");
        }
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = count(shape);
        return Tensor{std::move(shape), std::vector<double>(n, 0.0)};
    }

    static Tensor vector(std::vector<double> values) {
        std::size_t n = values.size();
        return Tensor{{n}, std::move(values)};
    }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at2(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at2(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Tensor& o) const = default;
};

} // namespace scone::ad
