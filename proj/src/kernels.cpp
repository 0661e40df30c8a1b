#include "claimcheck/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace claimcheck::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 15;

bool go_parallel(Exec exec, std::size_t work) { return exec == Exec::Parallel && work >= kMinParallelWork; }

void linear_forward_row(MatRef x, MatRef w, const double* bias, MutMatRef y, std::size_t i)
{
    double* out = y.row(i);
    if (bias != nullptr) {
        std::copy(bias, bias + y.cols, out);
    } else {
        std::fill(out, out + y.cols, 0.0);
    }
    const double* in = x.row(i);
    for (std::size_t p = 0; p < x.cols; ++p) {
        const double a = in[p];
        const double* wr = w.row(p);
        for (std::size_t j = 0; j < y.cols; ++j) {
            out[j] += a * wr[j];
        }
    }
}

}  // namespace

void linear_forward(MatRef x, MatRef w, const double* bias, MutMatRef y, Exec exec)
{
    const auto n = static_cast<std::ptrdiff_t>(x.rows);
    if (go_parallel(exec, x.rows * x.cols * w.cols)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            linear_forward_row(x, w, bias, y, static_cast<std::size_t>(i));
        }
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            linear_forward_row(x, w, bias, y, static_cast<std::size_t>(i));
        }
    }
}

void linear_backward(MatRef x, MatRef w, MatRef dy, MutMatRef dx, double* dw, double* dbias, Exec exec)
{
    const std::size_t n = x.rows;
    const std::size_t k = x.cols;
    const std::size_t m = dy.cols;
    const bool par = go_parallel(exec, n * k * m);

    if (dx.data != nullptr) {
        auto row = [&](std::size_t i) {
            double* out = dx.row(i);
            const double* g = dy.row(i);
            for (std::size_t p = 0; p < k; ++p) {
                const double* wr = w.row(p);
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    acc += g[j] * wr[j];
                }
                out[p] += acc;
            }
        };
        if (par) {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
                row(static_cast<std::size_t>(i));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                row(i);
            }
        }
    }

    if (dw != nullptr) {
        auto wrow = [&](std::size_t p) {
            double* out = dw + p * m;
            for (std::size_t i = 0; i < n; ++i) {
                const double a = x(i, p);
                if (a == 0.0) {
                    continue;
                }
                const double* g = dy.row(i);
                for (std::size_t j = 0; j < m; ++j) {
                    out[j] += a * g[j];
                }
            }
        };
        if (par) {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(k); ++p) {
                wrow(static_cast<std::size_t>(p));
            }
        } else {
            for (std::size_t p = 0; p < k; ++p) {
                wrow(p);
            }
        }
    }

    if (dbias != nullptr) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* g = dy.row(i);
            for (std::size_t j = 0; j < m; ++j) {
                dbias[j] += g[j];
            }
        }
    }
}

bool AttentionPattern::permits(int i, int j) const
{
    const auto& row = allowed.at(static_cast<std::size_t>(i));
    return std::binary_search(row.begin(), row.end(), j);
}

AttentionPattern windowed_pattern(std::span<const std::uint8_t> global, int window)
{
    const int n = static_cast<int>(global.size());
    std::vector<int> global_positions;
    for (int j = 0; j < n; ++j) {
        if (global[static_cast<std::size_t>(j)] != 0) {
            global_positions.push_back(j);
        }
    }
    AttentionPattern pattern;
    pattern.allowed.resize(global.size());
    for (int i = 0; i < n; ++i) {
        auto& row = pattern.allowed[static_cast<std::size_t>(i)];
        if (global[static_cast<std::size_t>(i)] != 0) {
            row.resize(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) {
                row[static_cast<std::size_t>(j)] = j;
            }
            continue;
        }
        const int lo = std::max(0, i - window);
        const int hi = std::min(n - 1, i + window);
        std::size_t g = 0;
        // merge the local band with the sorted global positions
        for (int j = lo; j <= hi; ++j) {
            while (g < global_positions.size() && global_positions[g] < j) {
                row.push_back(global_positions[g++]);
            }
            if (g < global_positions.size() && global_positions[g] == j) {
                ++g;
            }
            row.push_back(j);
        }
        while (g < global_positions.size()) {
            row.push_back(global_positions[g++]);
        }
    }
    return pattern;
}

namespace {

void attention_row(MatRef q, MatRef k, MatRef v, const AttentionPattern& pattern, std::span<const double> rel_bias,
                   int radius, double scale, std::vector<double>& w, MutMatRef ctx, std::size_t i)
{
    const auto& allowed = pattern.allowed[i];
    w.resize(allowed.size());
    const double* qi = q.row(i);
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < allowed.size(); ++a) {
        const auto j = static_cast<std::size_t>(allowed[a]);
        const double* kj = k.row(j);
        double dot = 0.0;
        for (std::size_t c = 0; c < q.cols; ++c) {
            dot += qi[c] * kj[c];
        }
        double s = dot * scale;
        if (!rel_bias.empty()) {
            s += rel_bias[relative_bucket(static_cast<int>(i), allowed[a], radius)];
        }
        w[a] = s;
        max_score = std::max(max_score, s);
    }
    double total = 0.0;
    for (double& s : w) {
        s = std::exp(s - max_score);
        total += s;
    }
    double* out = ctx.row(i);
    std::fill(out, out + ctx.cols, 0.0);
    for (std::size_t a = 0; a < allowed.size(); ++a) {
        w[a] /= total;
        const double* vj = v.row(static_cast<std::size_t>(allowed[a]));
        for (std::size_t c = 0; c < v.cols; ++c) {
            out[c] += w[a] * vj[c];
        }
    }
}

}  // namespace

void attention_forward(MatRef q, MatRef k, MatRef v, const AttentionPattern& pattern,
                       std::span<const double> rel_bias, int radius, std::vector<std::vector<double>>& weights,
                       MutMatRef ctx, Exec exec)
{
    const std::size_t n = q.rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
    weights.resize(n);
    std::size_t work = 0;
    for (const auto& row : pattern.allowed) {
        work += row.size();
    }
    work *= q.cols;
    if (go_parallel(exec, work)) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const auto r = static_cast<std::size_t>(i);
            attention_row(q, k, v, pattern, rel_bias, radius, scale, weights[r], ctx, r);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            attention_row(q, k, v, pattern, rel_bias, radius, scale, weights[i], ctx, i);
        }
    }
}

void attention_backward(MatRef q, MatRef k, MatRef v, const AttentionPattern& pattern,
                        const std::vector<std::vector<double>>& weights, int radius, MatRef dctx, MutMatRef dq,
                        MutMatRef dk, MutMatRef dv, std::span<double> drel)
{
    const std::size_t n = q.rows;
    const std::size_t h = q.cols;
    const double scale = 1.0 / std::sqrt(static_cast<double>(h));
    std::vector<double> dw;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& allowed = pattern.allowed[i];
        const auto& w = weights[i];
        const double* g = dctx.row(i);
        dw.assign(allowed.size(), 0.0);
        double weighted = 0.0;
        for (std::size_t a = 0; a < allowed.size(); ++a) {
            const auto j = static_cast<std::size_t>(allowed[a]);
            const double* vj = v.row(j);
            double* dvj = dv.row(j);
            double dot = 0.0;
            for (std::size_t c = 0; c < h; ++c) {
                dot += g[c] * vj[c];
                dvj[c] += w[a] * g[c];
            }
            dw[a] = dot;
            weighted += w[a] * dot;
        }
        const double* qi = q.row(i);
        double* dqi = dq.row(i);
        for (std::size_t a = 0; a < allowed.size(); ++a) {
            const double ds = w[a] * (dw[a] - weighted);
            if (ds == 0.0) {
                continue;
            }
            const auto j = static_cast<std::size_t>(allowed[a]);
            if (!drel.empty()) {
                drel[relative_bucket(static_cast<int>(i), allowed[a], radius)] += ds;
            }
            const double* kj = k.row(j);
            double* dkj = dk.row(j);
            const double s = ds * scale;
            for (std::size_t c = 0; c < h; ++c) {
                dqi[c] += s * kj[c];
                dkj[c] += s * qi[c];
            }
        }
    }
}

}  // namespace claimcheck::kernels
