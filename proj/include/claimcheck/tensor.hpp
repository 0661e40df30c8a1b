#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace claimcheck {

/// Read-only row-major view.
struct MatRef {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    const double* row(std::size_t r) const { return data + r * cols; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Mutable row-major view.
struct MutMatRef {
    double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    double* row(std::size_t r) const { return data + r * cols; }
    double& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    operator MatRef() const { return {data, rows, cols}; }
};

/// Dense row-major matrix of doubles.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : m_rows(rows), m_cols(cols), m_data(rows * cols, fill)
    {}

    std::size_t rows() const noexcept { return m_rows; }
    std::size_t cols() const noexcept { return m_cols; }

    double& operator()(std::size_t r, std::size_t c)
    {
        assert(r < m_rows && c < m_cols);
        return m_data[r * m_cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const
    {
        assert(r < m_rows && c < m_cols);
        return m_data[r * m_cols + c];
    }

    std::span<double> row(std::size_t r) { return {m_data.data() + r * m_cols, m_cols}; }
    std::span<const double> row(std::size_t r) const { return {m_data.data() + r * m_cols, m_cols}; }

    std::span<double> values() noexcept { return m_data; }
    std::span<const double> values() const noexcept { return m_data; }

    MatRef ref() const { return {m_data.data(), m_rows, m_cols}; }
    MutMatRef mut() { return {m_data.data(), m_rows, m_cols}; }

    void fill(double v) { std::fill(m_data.begin(), m_data.end(), v); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<double> m_data;
};

}  // namespace claimcheck
