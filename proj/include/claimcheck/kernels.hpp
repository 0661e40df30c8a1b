#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "claimcheck/tensor.hpp"

/// Dense kernels used by the toy encoder. Each data-parallel kernel has a
/// serial reference path and an OpenMP path selected by `Exec`. Both paths
/// evaluate every output element with the same operation order, so their
/// results are bit-identical regardless of thread count.
namespace claimcheck::kernels {

enum class Exec { Serial, Parallel };

/// y = x * w + bias. x: n x k, w: k x m, bias: m (may be null), y: n x m.
void linear_forward(MatRef x, MatRef w, const double* bias, MutMatRef y, Exec exec = Exec::Parallel);

/// Accumulates gradients of y = x * w + bias.
/// dx += dy * w^T (skipped when dx.data is null), dw += x^T * dy, dbias += colsum(dy).
void linear_backward(MatRef x, MatRef w, MatRef dy, MutMatRef dx, double* dw, double* dbias,
                     Exec exec = Exec::Parallel);

/// Which key positions each query position may attend to.
struct AttentionPattern {
    /// allowed[i] is sorted ascending.
    std::vector<std::vector<int>> allowed;

    std::size_t size() const noexcept { return allowed.size(); }
    bool permits(int i, int j) const;
};

/// Sliding-window pattern with global positions: i may attend to j iff i is
/// global, j is global, or |i - j| <= window.
AttentionPattern windowed_pattern(std::span<const std::uint8_t> global, int window);

/// Learned scalar bias per clipped relative offset j - i in [-radius, radius].
inline std::size_t relative_bucket(int i, int j, int radius)
{
    int d = j - i;
    d = d < -radius ? -radius : (d > radius ? radius : d);
    return static_cast<std::size_t>(d + radius);
}

/// Single-head scaled dot-product attention restricted to `pattern`.
/// Writes the softmax weights per row (aligned with pattern.allowed[i]) and
/// the context vectors.
void attention_forward(MatRef q, MatRef k, MatRef v, const AttentionPattern& pattern,
                       std::span<const double> rel_bias, int radius,
                       std::vector<std::vector<double>>& weights, MutMatRef ctx, Exec exec = Exec::Parallel);

/// Accumulates gradients for attention_forward into dq, dk, dv and drel.
void attention_backward(MatRef q, MatRef k, MatRef v, const AttentionPattern& pattern,
                        const std::vector<std::vector<double>>& weights, int radius, MatRef dctx,
                        MutMatRef dq, MutMatRef dk, MutMatRef dv, std::span<double> drel);

}  // namespace claimcheck::kernels
