#pragma once

// Closed-form BM25 computed straight from document text, plus an exhaustive
// score-and-sort ranking. Shares nothing with the index code.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "claimcheck/data_model.hpp"
#include "test_support.hpp"

namespace claimcheck::testing {

inline std::vector<std::string> oracle_tokens(const std::string& text)
{
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        const bool keep = std::isalnum(c) != 0 || c >= 0x80;
        if (keep) {
            cur.push_back(static_cast<char>(c >= 0x80 ? c : std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

struct Bm25Oracle {
    double k1 = 1.2;
    double b = 0.75;
    std::map<int, std::map<std::string, int>> tf;
    std::map<int, int> length;
    double avgdl = 0.0;

    Bm25Oracle(const Corpus& corpus, double k1_, double b_) : k1(k1_), b(b_)
    {
        double total = 0.0;
        for (const auto& d : corpus) {
            std::string text = d.title;
            for (const auto& s : d.sentences) {
                text += " " + s;
            }
            const auto toks = oracle_tokens(text);
            length[d.doc_id] = static_cast<int>(toks.size());
            total += static_cast<double>(toks.size());
            auto& m = tf[d.doc_id];
            for (const auto& t : toks) {
                ++m[t];
            }
        }
        avgdl = total / static_cast<double>(corpus.size());
    }

    double score(const std::vector<std::string>& query, int doc_id) const
    {
        const double n = static_cast<double>(tf.size());
        double s = 0.0;
        for (const auto& q : query) {
            double df = 0.0;
            for (const auto& [id, m] : tf) {
                df += m.count(q) != 0 ? 1.0 : 0.0;
            }
            if (df == 0.0) {
                continue;
            }
            const auto& m = tf.at(doc_id);
            const auto it = m.find(q);
            const double f = it == m.end() ? 0.0 : it->second;
            const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            const double dl = length.at(doc_id);
            s += idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * dl / avgdl));
        }
        return s;
    }

    /// Every document scored, sorted by score descending then doc_id ascending, cut to k.
    std::vector<std::pair<int, double>> ranking(const std::vector<std::string>& query, std::size_t k) const
    {
        std::vector<std::pair<int, double>> all;
        for (const auto& [id, _] : tf) {
            all.emplace_back(id, score(query, id));
        }
        std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
            return x.second != y.second ? x.second > y.second : x.first < y.first;
        });
        all.resize(std::min(k, all.size()));
        return all;
    }
};

/// Corpus of up to `max_docs` docs over a small vocabulary; every few docs
/// is an exact copy of an earlier one so that score ties occur.
inline Corpus random_bm25_corpus(std::mt19937_64& rng, int max_docs = 50)
{
    std::uniform_int_distribution<int> ndocs(1, max_docs);
    std::bernoulli_distribution dup(0.15);
    std::vector<Document> docs;
    const int n = ndocs(rng);
    std::uniform_int_distribution<int> id_gap(1, 9);
    int id = 0;
    for (int i = 0; i < n; ++i) {
        id += id_gap(rng);
        Document d;
        if (!docs.empty() && dup(rng)) {
            d = docs[std::uniform_int_distribution<std::size_t>(0, docs.size() - 1)(rng)];
        } else {
            d = random_document(rng, 0, 4, 8);
            d.title = "Title " + random_words(rng, 1, 3, 25);
        }
        d.doc_id = id;
        docs.push_back(std::move(d));
    }
    std::shuffle(docs.begin(), docs.end(), rng);
    return Corpus(std::move(docs));
}

}  // namespace claimcheck::testing
