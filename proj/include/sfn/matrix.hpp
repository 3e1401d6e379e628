#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sfn/error.hpp"

namespace sfn {

// Dense row-major matrix of doubles; rows are examples, columns are inputs.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values) {
        if (rows_ == 0 && cols_ == 0) cols_ = values.size();
        if (values.size() != cols_) throw LengthMismatch("row width does not match matrix");
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    // Column-major copy, one contiguous vector per input.
    std::vector<std::vector<double>> columns() const {
        std::vector<std::vector<double>> out(cols_, std::vector<double>(rows_));
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out[c][r] = (*this)(r, c);
        return out;
    }

    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// A supervised sample set: inputs plus one target per row.
struct Samples {
    Matrix X;
    std::vector<double> d;

    std::size_t size() const { return d.size(); }
    bool empty() const { return d.empty(); }
};

} // namespace sfn
