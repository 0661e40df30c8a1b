#include "claimcheck/parameters.hpp"

#include <stdexcept>

namespace claimcheck {

std::size_t ParameterSet::declare(const std::string& name, std::size_t rows, std::size_t cols)
{
    if (m_by_name.count(name) != 0) {
        throw std::invalid_argument("parameter declared twice: " + name);
    }
    TensorInfo t{name, rows, cols, m_values.size()};
    m_by_name.emplace(name, m_tensors.size());
    m_tensors.push_back(t);
    m_values.resize(m_values.size() + t.size(), 0.0);
    return t.offset;
}

const TensorInfo* ParameterSet::find(const std::string& name) const
{
    auto it = m_by_name.find(name);
    return it == m_by_name.end() ? nullptr : &m_tensors[it->second];
}

const TensorInfo& ParameterSet::info(const std::string& name) const
{
    const auto* t = find(name);
    if (t == nullptr) {
        throw std::out_of_range("unknown parameter: " + name);
    }
    return *t;
}

MatRef ParameterSet::matrix(const std::string& name) const
{
    const auto& t = info(name);
    return matrix(t.offset, t.rows, t.cols);
}

}  // namespace claimcheck
