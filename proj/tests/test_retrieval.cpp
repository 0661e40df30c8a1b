#include <cmath>
#include <filesystem>
#include <random>

#include <omp.h>

#include "doctest.h"

#include "claimcheck/analyzer.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/io.hpp"
#include "claimcheck/retrieval.hpp"
#include "bm25_oracle.hpp"
#include "test_support.hpp"

using namespace claimcheck;
namespace fs = std::filesystem;

namespace {

Document doc(int id, std::string title, std::vector<std::string> sentences)
{
    Document d;
    d.doc_id = id;
    d.title = std::move(title);
    d.sentences = std::move(sentences);
    return d;
}

Claim claim_with(int id, std::string text)
{
    Claim c;
    c.id = id;
    c.text = std::move(text);
    return c;
}

fs::path temp_path(const std::string& name)
{
    return fs::temp_directory_path() / ("claimcheck_test_retrieval_" + name);
}

}  // namespace

TEST_CASE("analyzer lowercases and splits on non-alphanumerics")
{
    CHECK(analyze("IL-6 levels, p<0.05!") == std::vector<std::string>{"il", "6", "levels", "p", "0", "05"});
    CHECK(analyze("   ").empty());
    // bytes of multi-byte characters stay inside tokens
    CHECK(analyze("caf\xc3\xa9 au lait") == std::vector<std::string>{"caf\xc3\xa9", "au", "lait"});
}

TEST_CASE("two-document example scores ln 2")
{
    const Corpus corpus({doc(1, "alpha", {"beta"}), doc(2, "gamma", {"delta"})});
    const auto index = build_index(corpus);
    const std::vector<std::string> q = {"alpha"};
    // N=2, df=1 gives idf = ln 2; tf=1 and dl=avgdl make the tf factor 1
    CHECK(bm25_score(index, q, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bm25_score(index, q, 2) == 0.0);
    const std::vector<std::string> unseen = {"omega"};
    CHECK(bm25_score(index, unseen, 1) == 0.0);
}

TEST_CASE("bm25_score matches the closed form on random corpora")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> k1(0.0, 3.0), b(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const auto corpus = testing::random_bm25_corpus(rng);
        const Bm25Params params{k1(rng), b(rng)};
        const auto index = build_index(corpus, params);
        const testing::Bm25Oracle oracle(corpus, params.k1, params.b);
        for (int q = 0; q < 5; ++q) {
            const auto query = analyze(testing::random_words(rng, 1, 6, 45));
            for (const auto& d : corpus) {
                const double expected = oracle.score(query, d.doc_id);
                const double got = bm25_score(index, query, d.doc_id);
                REQUIRE(std::abs(got - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
            }
        }
    }
}

TEST_CASE("retrieve equals exhaustive score-and-sort with doc_id tie-break")
{
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> kpick(1, 60);
    for (int trial = 0; trial < 100; ++trial) {
        const auto corpus = testing::random_bm25_corpus(rng);
        const auto index = build_index(corpus);
        const testing::Bm25Oracle oracle(corpus, 1.2, 0.75);
        const auto c = claim_with(trial, testing::random_words(rng, 1, 6, 45));
        const int k = kpick(rng);
        const auto got = retrieve(index, c, k);
        const auto expected = oracle.ranking(analyze(c.text), static_cast<std::size_t>(k));
        REQUIRE(got.entries.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            REQUIRE(got.entries[i].doc_id == expected[i].first);
            REQUIRE(std::abs(got.entries[i].score - expected[i].second) <= 1e-9 * std::max(1.0, expected[i].second));
        }
    }
    CHECK_THROWS_AS(retrieve(build_index(Corpus({doc(1, "a", {"b"})})), claim_with(1, "a"), 0), ValidationError);
}

TEST_CASE("rerank: identity, constant, reversal and failures")
{
    const Corpus corpus({doc(1, "a", {"x"}), doc(2, "b", {"x"}), doc(3, "c", {"x"}), doc(4, "d", {"x"})});
    RankedList ranked;
    ranked.claim_id = 7;
    ranked.entries = {{3, 4.0}, {1, 3.0}, {4, 2.0}, {2, 1.0}};
    const auto c = claim_with(7, "claim");

    // a scorer that reproduces the first-stage scores changes nothing
    const PairScorer identity = [&](const std::string&, const std::string& text) {
        for (const auto& e : ranked.entries) {
            if (corpus.at(e.doc_id).full_text() == text) {
                return e.score;
            }
        }
        return 0.0;
    };
    CHECK(rerank(ranked, c, corpus, identity, 4) == ranked);

    const PairScorer constant = [](const std::string&, const std::string&) { return 0.5; };
    const auto flat = rerank(ranked, c, corpus, constant, 4);
    CHECK(flat.doc_ids() == ranked.doc_ids());
    for (const auto& e : flat.entries) {
        CHECK(e.score == 0.5);
    }

    const PairScorer reverse = [&](const std::string&, const std::string& text) {
        for (const auto& e : ranked.entries) {
            if (corpus.at(e.doc_id).full_text() == text) {
                return -e.score;
            }
        }
        return 0.0;
    };
    CHECK(rerank(ranked, c, corpus, reverse, 4).doc_ids() == std::vector<int>{2, 4, 1, 3});
    // depth 2 only swaps the head; the tail keeps its BM25 scores
    const auto head = rerank(ranked, c, corpus, reverse, 2);
    CHECK(head.doc_ids() == std::vector<int>{1, 3, 4, 2});
    CHECK(head.entries[2].score == 2.0);
    CHECK(rerank(ranked, c, corpus, reverse, 0) == ranked);

    CHECK_THROWS_AS(rerank(ranked, c, corpus, constant, 5), ValidationError);
    const PairScorer failing = [&](const std::string&, const std::string& text) -> double {
        if (text == corpus.at(4).full_text()) {
            throw std::runtime_error("boom");
        }
        return 1.0;
    };
    try {
        rerank(ranked, c, corpus, failing, 4);
        FAIL("expected RerankError");
    } catch (const RerankError& e) {
        CHECK(e.claim_id() == 7);
        CHECK(e.doc_id() == 4);
    }
}

TEST_CASE("index and rankings persist losslessly")
{
    std::mt19937_64 rng(31);
    const auto corpus = testing::random_bm25_corpus(rng, 30);
    const auto index = build_index(corpus, Bm25Params{0.9, 0.4});
    const auto path = temp_path("index.json").string();
    save_index(index, path);
    const auto loaded = load_index(path);
    CHECK(loaded == index);

    std::vector<RankedList> lists;
    for (int i = 0; i < 5; ++i) {
        lists.push_back(retrieve(index, claim_with(i, testing::random_words(rng, 2, 5, 45)), 7));
    }
    const auto rpath = temp_path("rankings.jsonl").string();
    save_rankings(lists, rpath);
    CHECK(load_rankings(rpath) == lists);

    write_file(path, "{\"version\": 999}");
    CHECK_THROWS_AS(load_index(path), ValidationError);
    CHECK_THROWS_AS(load_index(temp_path("missing.json").string()), IoError);
    fs::remove(path);
    fs::remove(rpath);
}

TEST_CASE("index and scores do not depend on the thread count")
{
    std::mt19937_64 rng(37);
    const auto corpus = testing::random_bm25_corpus(rng, 50);
    const auto serial = build_index(corpus, {}, kernels::Exec::Serial);
    const auto query = analyze(testing::random_words(rng, 3, 6, 45));
    const auto reference = score_all(serial, query, kernels::Exec::Serial);
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 3, 8}) {
        omp_set_num_threads(threads);
        const auto parallel = build_index(corpus, {}, kernels::Exec::Parallel);
        CHECK(parallel == serial);
        CHECK(score_all(parallel, query, kernels::Exec::Parallel) == reference);
    }
    omp_set_num_threads(saved);
}
