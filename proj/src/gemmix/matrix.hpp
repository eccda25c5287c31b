#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gemmix {

// Dense row-major matrix. Rows are points (samples) or stacked component
// means; columns are coordinates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    std::vector<std::vector<double>> to_rows() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Stacked component means, one row per component.
using Means = Matrix;
// Observed data points, one row per point.
using Points = Matrix;

double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// Frobenius distance between stacked means, i.e. ||mu - nu|| on R^{Md}.
double stacked_distance(const Means& a, const Means& b);
double stacked_norm(const Means& a);

bool all_finite(std::span<const double> values);

}  // namespace gemmix
