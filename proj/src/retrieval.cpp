#include "claimcheck/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "claimcheck/analyzer.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/io.hpp"

namespace claimcheck {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void Bm25Params::validate() const
{
    if (!(k1 >= 0.0) || !std::isfinite(k1)) {
        throw ValidationError("BM25 k1 must be >= 0, got " + std::to_string(k1));
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw ValidationError("BM25 b must be in [0, 1], got " + std::to_string(b));
    }
}

std::size_t InvertedIndex::slot(int doc_id) const
{
    auto it = m_slot.find(doc_id);
    if (it == m_slot.end()) {
        throw ValidationError("doc_id " + std::to_string(doc_id) + " is not indexed");
    }
    return it->second;
}

std::span<const Posting> InvertedIndex::postings(const std::string& term) const
{
    auto it = m_postings.find(term);
    if (it == m_postings.end()) {
        return {};
    }
    return it->second;
}

double InvertedIndex::idf(std::size_t df) const
{
    const double n = static_cast<double>(num_docs());
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double InvertedIndex::term_score(double idf, int tf, int length) const
{
    if (tf <= 0) {
        return 0.0;
    }
    const double f = tf;
    const double norm = m_avg_doc_length > 0.0 ? static_cast<double>(length) / m_avg_doc_length : 0.0;
    return idf * f * (m_params.k1 + 1.0) / (f + m_params.k1 * (1.0 - m_params.b + m_params.b * norm));
}

void InvertedIndex::finalize()
{
    m_slot.clear();
    for (std::size_t i = 0; i < m_doc_ids.size(); ++i) {
        m_slot.emplace(m_doc_ids[i], i);
    }
    const double total = std::accumulate(m_doc_lengths.begin(), m_doc_lengths.end(), 0.0);
    m_avg_doc_length = m_doc_ids.empty() ? 0.0 : total / static_cast<double>(m_doc_ids.size());
}

InvertedIndex build_index(const Corpus& corpus, const Bm25Params& params, kernels::Exec exec)
{
    params.validate();
    if (corpus.empty()) {
        throw ValidationError("cannot build an index over an empty corpus");
    }

    std::vector<const Document*> docs;
    docs.reserve(corpus.size());
    for (const auto& d : corpus) {
        docs.push_back(&d);
    }
    std::sort(docs.begin(), docs.end(), [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });

    // per-document term counts, computed independently then merged in doc order
    std::vector<std::map<std::string, int>> counts(docs.size());
    std::vector<int> lengths(docs.size(), 0);
    auto count_doc = [&](std::size_t i) {
        auto tokens = analyze(docs[i]->full_text());
        lengths[i] = static_cast<int>(tokens.size());
        for (auto& t : tokens) {
            ++counts[i][std::move(t)];
        }
    };
    const auto n = static_cast<std::ptrdiff_t>(docs.size());
    if (exec == kernels::Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            count_doc(static_cast<std::size_t>(i));
        }
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            count_doc(static_cast<std::size_t>(i));
        }
    }

    InvertedIndex index;
    index.m_params = params;
    index.m_analyzer_version = std::string(kAnalyzerVersion);
    index.m_doc_ids.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        index.m_doc_ids.push_back(docs[i]->doc_id);
        for (const auto& [term, tf] : counts[i]) {
            index.m_postings[term].push_back(Posting{docs[i]->doc_id, tf});
        }
    }
    index.m_doc_lengths = std::move(lengths);
    index.finalize();
    return index;
}

void save_index(const InvertedIndex& index, const std::string& path)
{
    ordered_json out;
    out["version"] = InvertedIndex::kFormatVersion;
    out["params"] = {{"k1", index.params().k1}, {"b", index.params().b}};
    out["analyzer_version"] = index.analyzer_version();
    out["num_docs"] = index.num_docs();
    out["avg_doc_length"] = index.avg_doc_length();
    ordered_json lengths = ordered_json::object();
    for (std::size_t i = 0; i < index.num_docs(); ++i) {
        lengths[std::to_string(index.doc_ids()[i])] = index.doc_lengths()[i];
    }
    out["doc_lengths"] = std::move(lengths);

    std::vector<const std::string*> terms;
    terms.reserve(index.all_postings().size());
    for (const auto& [term, _] : index.all_postings()) {
        terms.push_back(&term);
    }
    std::sort(terms.begin(), terms.end(), [](const std::string* a, const std::string* b) { return *a < *b; });
    ordered_json postings = ordered_json::object();
    for (const auto* term : terms) {
        ordered_json list = ordered_json::array();
        for (const auto& p : index.postings(*term)) {
            list.push_back({p.doc_id, p.tf});
        }
        postings[*term] = std::move(list);
    }
    out["postings"] = std::move(postings);
    write_file(path, out.dump() + "\n");
}

InvertedIndex load_index(const std::string& path)
{
    json in;
    try {
        in = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path, 1, std::string("malformed index JSON: ") + e.what());
    }
    try {
        if (in.at("version").get<int>() != InvertedIndex::kFormatVersion) {
            throw ValidationError(path + ": unsupported index version " + in.at("version").dump());
        }
        InvertedIndex index;
        index.m_params.k1 = in.at("params").at("k1").get<double>();
        index.m_params.b = in.at("params").at("b").get<double>();
        index.m_params.validate();
        index.m_analyzer_version = in.at("analyzer_version").get<std::string>();
        if (index.m_analyzer_version != kAnalyzerVersion) {
            throw ValidationError(path + ": index built with analyzer '" + index.m_analyzer_version +
                                  "', this build uses '" + std::string(kAnalyzerVersion) + "'");
        }
        std::vector<std::pair<int, int>> lengths;
        for (const auto& [key, value] : in.at("doc_lengths").items()) {
            lengths.emplace_back(std::stoi(key), value.get<int>());
        }
        std::sort(lengths.begin(), lengths.end());
        for (const auto& [id, len] : lengths) {
            index.m_doc_ids.push_back(id);
            index.m_doc_lengths.push_back(len);
        }
        index.finalize();
        if (index.num_docs() != in.at("num_docs").get<std::size_t>()) {
            throw ValidationError(path + ": num_docs disagrees with doc_lengths");
        }
        for (const auto& [term, list] : in.at("postings").items()) {
            auto& out = index.m_postings[term];
            for (const auto& p : list) {
                Posting posting{p.at(0).get<int>(), p.at(1).get<int>()};
                if (!index.contains(posting.doc_id)) {
                    throw ValidationError(path + ": posting for '" + term + "' references unindexed doc " +
                                          std::to_string(posting.doc_id));
                }
                if (!out.empty() && out.back().doc_id >= posting.doc_id) {
                    throw ValidationError(path + ": postings for '" + term + "' not sorted by doc_id");
                }
                out.push_back(posting);
            }
        }
        return index;
    } catch (const json::exception& e) {
        throw ValidationError(path + ": malformed index: " + e.what());
    }
}

namespace {

int term_frequency(std::span<const Posting> postings, int doc_id)
{
    auto it = std::lower_bound(postings.begin(), postings.end(), doc_id,
                               [](const Posting& p, int id) { return p.doc_id < id; });
    return (it != postings.end() && it->doc_id == doc_id) ? it->tf : 0;
}

struct QueryTerm {
    std::span<const Posting> postings;
    double idf = 0.0;
};

std::vector<QueryTerm> resolve_query(const InvertedIndex& index, std::span<const std::string> query)
{
    std::vector<QueryTerm> terms;
    terms.reserve(query.size());
    for (const auto& t : query) {
        auto postings = index.postings(t);
        if (postings.empty()) {
            continue;
        }
        terms.push_back({postings, index.idf(postings.size())});
    }
    return terms;
}

double score_slot(const InvertedIndex& index, const std::vector<QueryTerm>& terms, std::size_t slot)
{
    const int doc_id = index.doc_ids()[slot];
    const int length = index.doc_lengths()[slot];
    double score = 0.0;
    for (const auto& t : terms) {
        score += index.term_score(t.idf, term_frequency(t.postings, doc_id), length);
    }
    return score;
}

}  // namespace

double bm25_score(const InvertedIndex& index, std::span<const std::string> query, int doc_id)
{
    const auto slot = index.slot(doc_id);
    return score_slot(index, resolve_query(index, query), slot);
}

std::vector<double> score_all(const InvertedIndex& index, std::span<const std::string> query, kernels::Exec exec)
{
    const auto terms = resolve_query(index, query);
    std::vector<double> scores(index.num_docs(), 0.0);
    if (terms.empty()) {
        return scores;
    }
    const auto n = static_cast<std::ptrdiff_t>(scores.size());
    if (exec == kernels::Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            scores[static_cast<std::size_t>(i)] = score_slot(index, terms, static_cast<std::size_t>(i));
        }
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            scores[static_cast<std::size_t>(i)] = score_slot(index, terms, static_cast<std::size_t>(i));
        }
    }
    return scores;
}

std::vector<int> RankedList::doc_ids() const
{
    std::vector<int> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) {
        ids.push_back(e.doc_id);
    }
    return ids;
}

RankedList retrieve(const InvertedIndex& index, const Claim& claim, int k, kernels::Exec exec)
{
    if (k < 1) {
        throw ValidationError("retrieve: k must be >= 1");
    }
    const auto query = analyze(claim.text);
    const auto scores = score_all(index, query, exec);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    const auto take = std::min(order.size(), static_cast<std::size_t>(k));
    // doc_ids() is ascending, so slot order is the doc_id tie-break
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });

    RankedList out;
    out.claim_id = claim.id;
    out.entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.entries.push_back({index.doc_ids()[order[i]], scores[order[i]]});
    }
    return out;
}

RerankError::RerankError(int claim_id, int doc_id, const std::string& what)
    : std::runtime_error("rerank failed for claim " + std::to_string(claim_id) + ", doc " + std::to_string(doc_id) +
                         ": " + what),
      m_claim_id(claim_id), m_doc_id(doc_id)
{}

RankedList rerank(const RankedList& ranked, const Claim& claim, const Corpus& corpus, const PairScorer& scorer,
                  std::size_t depth)
{
    if (depth > ranked.entries.size()) {
        throw ValidationError("rerank depth " + std::to_string(depth) + " exceeds list length " +
                              std::to_string(ranked.entries.size()));
    }
    RankedList out = ranked;
    for (std::size_t i = 0; i < depth; ++i) {
        auto& e = out.entries[i];
        try {
            e.score = scorer(claim.text, corpus.at(e.doc_id).full_text());
        } catch (const std::exception& ex) {
            throw RerankError(claim.id, e.doc_id, ex.what());
        }
    }
    std::stable_sort(out.entries.begin(), out.entries.begin() + static_cast<std::ptrdiff_t>(depth),
                     [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
    return out;
}

void save_rankings(const std::vector<RankedList>& rankings, const std::string& path)
{
    auto out = open_output(path);
    for (const auto& r : rankings) {
        ordered_json line;
        line["id"] = r.claim_id;
        line["doc_ids"] = r.doc_ids();
        ordered_json scores = ordered_json::array();
        for (const auto& e : r.entries) {
            scores.push_back(e.score);
        }
        line["scores"] = std::move(scores);
        out << line.dump() << '\n';
    }
}

std::vector<RankedList> load_rankings(const std::string& path)
{
    auto in = open_input(path);
    std::vector<RankedList> out;
    for_each_line(in, [&](const std::string& text, std::size_t line) {
        try {
            auto obj = json::parse(text);
            RankedList r;
            r.claim_id = obj.at("id").get<int>();
            auto ids = obj.at("doc_ids").get<std::vector<int>>();
            std::vector<double> scores(ids.size(), 0.0);
            if (auto s = obj.find("scores"); s != obj.end()) {
                scores = s->get<std::vector<double>>();
                if (scores.size() != ids.size()) {
                    throw ParseError(path, line, "doc_ids and scores differ in length");
                }
            }
            for (std::size_t i = 0; i < ids.size(); ++i) {
                r.entries.push_back({ids[i], scores[i]});
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(path, line, e.what());
        }
    });
    return out;
}

}  // namespace claimcheck
