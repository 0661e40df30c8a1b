#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "claimcheck/data_model.hpp"
#include "claimcheck/kernels.hpp"

namespace claimcheck {

/// Okapi BM25 free parameters. Defaults are the usual k1 = 1.2, b = 0.75.
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    /// Throws ValidationError unless k1 >= 0 and 0 <= b <= 1.
    void validate() const;

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Posting {
    int doc_id = 0;
    int tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Term statistics over title + abstract text of every document.
/// Immutable once built; safe to share across threads.
class InvertedIndex {
  public:
    static constexpr int kFormatVersion = 1;

    const Bm25Params& params() const noexcept { return m_params; }
    const std::string& analyzer_version() const noexcept { return m_analyzer_version; }
    std::size_t num_docs() const noexcept { return m_doc_ids.size(); }
    double avg_doc_length() const noexcept { return m_avg_doc_length; }

    /// Indexed doc ids, ascending.
    const std::vector<int>& doc_ids() const noexcept { return m_doc_ids; }
    /// Token counts aligned with doc_ids().
    const std::vector<int>& doc_lengths() const noexcept { return m_doc_lengths; }

    bool contains(int doc_id) const { return m_slot.count(doc_id) != 0; }
    /// Position of doc_id in doc_ids(); throws ValidationError when unknown.
    std::size_t slot(int doc_id) const;
    int doc_length(int doc_id) const { return m_doc_lengths[slot(doc_id)]; }

    /// Postings sorted by doc_id; empty for unknown terms.
    std::span<const Posting> postings(const std::string& term) const;
    std::size_t document_frequency(const std::string& term) const { return postings(term).size(); }
    const std::unordered_map<std::string, std::vector<Posting>>& all_postings() const noexcept { return m_postings; }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
    double idf(std::size_t df) const;
    /// BM25 term contribution for a document with `tf` occurrences and `length` tokens.
    double term_score(double idf, int tf, int length) const;

    friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;

  private:
    friend InvertedIndex build_index(const Corpus&, const Bm25Params&, kernels::Exec);
    friend InvertedIndex load_index(const std::string&);

    void finalize();

    Bm25Params m_params;
    std::string m_analyzer_version;
    std::vector<int> m_doc_ids;
    std::vector<int> m_doc_lengths;
    double m_avg_doc_length = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> m_postings;
    std::unordered_map<int, std::size_t> m_slot;
};

/// Indexes title + sentences of every document. The parallel path tokenizes
/// documents concurrently and merges in doc_id order, so the result does not
/// depend on thread count. Throws ValidationError for an empty corpus.
InvertedIndex build_index(const Corpus& corpus, const Bm25Params& params = {},
                          kernels::Exec exec = kernels::Exec::Parallel);

void save_index(const InvertedIndex& index, const std::string& path);
InvertedIndex load_index(const std::string& path);

/// Sum over query tokens (with multiplicity) of idf * tf*(k1+1) / (tf + k1*(1-b+b*len/avglen)).
/// Throws ValidationError for an unindexed doc_id.
double bm25_score(const InvertedIndex& index, std::span<const std::string> query, int doc_id);

/// Scores every indexed document; result aligned with index.doc_ids().
/// Serial and parallel paths are bit-identical.
std::vector<double> score_all(const InvertedIndex& index, std::span<const std::string> query,
                              kernels::Exec exec = kernels::Exec::Parallel);

struct RankedEntry {
    int doc_id = 0;
    double score = 0.0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
    int claim_id = 0;
    /// Scores non-increasing, doc ids distinct.
    std::vector<RankedEntry> entries;

    std::vector<int> doc_ids() const;
    friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Top-k documents by BM25 over the claim's tokens; ties by ascending doc_id.
RankedList retrieve(const InvertedIndex& index, const Claim& claim, int k,
                    kernels::Exec exec = kernels::Exec::Parallel);

/// Relevance of (claim text, title + abstract text). Higher is more relevant.
using PairScorer = std::function<double(const std::string& claim, const std::string& document)>;

/// Thrown when a scorer fails; names the pair.
class RerankError : public std::runtime_error {
  public:
    RerankError(int claim_id, int doc_id, const std::string& what);
    int claim_id() const noexcept { return m_claim_id; }
    int doc_id() const noexcept { return m_doc_id; }

  private:
    int m_claim_id;
    int m_doc_id;
};

/// Reorders the first `depth` entries by scorer (descending, ties keep their
/// original rank); entries past `depth` are unchanged. Scores of reranked
/// entries are replaced by scorer output.
RankedList rerank(const RankedList& ranked, const Claim& claim, const Corpus& corpus, const PairScorer& scorer,
                  std::size_t depth);

// Retrieval results file: one line per claim {"id", "doc_ids", "scores"}.
void save_rankings(const std::vector<RankedList>& rankings, const std::string& path);
std::vector<RankedList> load_rankings(const std::string& path);

}  // namespace claimcheck
