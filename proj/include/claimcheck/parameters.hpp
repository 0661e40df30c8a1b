#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "claimcheck/tensor.hpp"

namespace claimcheck {

struct TensorInfo {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const noexcept { return rows * cols; }
    friend bool operator==(const TensorInfo&, const TensorInfo&) = default;
};

/// Flat parameter storage with named 2-D tensors laid out back to back in
/// declaration order. Gradient and optimizer buffers share the same layout.
class ParameterSet {
  public:
    /// Returns the tensor's offset. Throws std::invalid_argument on a duplicate name.
    std::size_t declare(const std::string& name, std::size_t rows, std::size_t cols);

    const TensorInfo& info(const std::string& name) const;
    const TensorInfo* find(const std::string& name) const;
    const std::vector<TensorInfo>& tensors() const noexcept { return m_tensors; }

    std::size_t size() const noexcept { return m_values.size(); }
    std::span<double> values() noexcept { return m_values; }
    std::span<const double> values() const noexcept { return m_values; }

    const double* data(std::size_t offset) const { return m_values.data() + offset; }
    double* data(std::size_t offset) { return m_values.data() + offset; }

    MatRef matrix(const std::string& name) const;
    MatRef matrix(std::size_t offset, std::size_t rows, std::size_t cols) const
    {
        return {m_values.data() + offset, rows, cols};
    }

    /// Same names and shapes in the same order.
    bool same_layout(const ParameterSet& other) const { return m_tensors == other.m_tensors; }

    friend bool operator==(const ParameterSet& a, const ParameterSet& b)
    {
        return a.m_tensors == b.m_tensors && a.m_values == b.m_values;
    }

  private:
    std::vector<TensorInfo> m_tensors;
    std::unordered_map<std::string, std::size_t> m_by_name;
    std::vector<double> m_values;
};

}  // namespace claimcheck
