// Serial reference vs OpenMP paths of the hot kernels.

#include <random>

#include <benchmark/benchmark.h>

#include "claimcheck/analyzer.hpp"
#include "claimcheck/kernels.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/tensor.hpp"

using namespace claimcheck;
using kernels::Exec;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (auto& v : m.values()) {
        v = n(rng);
    }
    return m;
}

template <Exec E>
void BM_LinearForward(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(n, 64, 1);
    const auto w = random_matrix(64, 128, 2);
    Matrix y(n, 128);
    for (auto _ : state) {
        kernels::linear_forward(x.ref(), w.ref(), nullptr, y.mut(), E);
        benchmark::DoNotOptimize(y.values().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <Exec E>
void BM_LinearBackward(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(n, 64, 1);
    const auto w = random_matrix(64, 128, 2);
    const auto dy = random_matrix(n, 128, 3);
    Matrix dx(n, 64);
    std::vector<double> dw(64 * 128), db(128);
    for (auto _ : state) {
        kernels::linear_backward(x.ref(), w.ref(), dy.ref(), dx.mut(), dw.data(), db.data(), E);
        benchmark::DoNotOptimize(dw.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <Exec E>
void BM_Attention(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto q = random_matrix(n, 64, 4);
    const auto k = random_matrix(n, 64, 5);
    const auto v = random_matrix(n, 64, 6);
    std::vector<std::uint8_t> global(n, 0);
    for (std::size_t i = 0; i < n; i += 24) {
        global[i] = 1;
    }
    const auto pattern = kernels::windowed_pattern(global, 16);
    const std::vector<double> rel(33, 0.01);
    std::vector<std::vector<double>> weights;
    Matrix ctx(n, 64);
    for (auto _ : state) {
        kernels::attention_forward(q.ref(), k.ref(), v.ref(), pattern, rel, 16, weights, ctx.mut(), E);
        benchmark::DoNotOptimize(ctx.values().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

const InvertedIndex& bench_index()
{
    static const InvertedIndex index = [] {
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<int> word(0, 4999), len(20, 200);
        std::vector<Document> docs;
        for (int d = 0; d < 20000; ++d) {
            Document doc;
            doc.doc_id = d;
            doc.title = "doc";
            std::string s;
            for (int i = 0, n = len(rng); i < n; ++i) {
                s += "t" + std::to_string(word(rng)) + " ";
            }
            doc.sentences = {s};
            docs.push_back(std::move(doc));
        }
        return build_index(Corpus(std::move(docs)));
    }();
    return index;
}

template <Exec E>
void BM_ScoreAll(benchmark::State& state)
{
    const auto& index = bench_index();
    const auto query = analyze("t1 t22 t333 t4444 t55 t678 t901");
    for (auto _ : state) {
        auto scores = score_all(index, query, E);
        benchmark::DoNotOptimize(scores.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(index.num_docs()));
}

}  // namespace

BENCHMARK(BM_LinearForward<Exec::Serial>)->Arg(128)->Arg(512);
BENCHMARK(BM_LinearForward<Exec::Parallel>)->Arg(128)->Arg(512);
BENCHMARK(BM_LinearBackward<Exec::Serial>)->Arg(128)->Arg(512);
BENCHMARK(BM_LinearBackward<Exec::Parallel>)->Arg(128)->Arg(512);
BENCHMARK(BM_Attention<Exec::Serial>)->Arg(128)->Arg(512);
BENCHMARK(BM_Attention<Exec::Parallel>)->Arg(128)->Arg(512);
BENCHMARK(BM_ScoreAll<Exec::Serial>);
BENCHMARK(BM_ScoreAll<Exec::Parallel>);

BENCHMARK_MAIN();
