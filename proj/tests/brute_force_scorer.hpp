#pragma once

// A deliberately naive second implementation of the four metric variants.
// It shares nothing with src/evaluation.cpp beyond the data types: every
// count is obtained by enumerating the definition with plain loops.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "claimcheck/data_model.hpp"
#include "claimcheck/evaluation.hpp"

namespace claimcheck::testing {

struct BruteCounts {
    std::int64_t correct = 0;
    std::int64_t predicted = 0;
    std::int64_t gold = 0;
};

struct BruteResult {
    BruteCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline BruteResult brute_finish(BruteCounts c)
{
    BruteResult r;
    r.counts = c;
    if (c.predicted > 0) {
        r.precision = double(c.correct) / double(c.predicted);
    }
    if (c.gold > 0) {
        r.recall = double(c.correct) / double(c.gold);
    }
    if (r.precision + r.recall > 0) {
        r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    }
    return r;
}

inline bool brute_member(int x, const std::vector<int>& xs)
{
    for (int y : xs) {
        if (y == x) {
            return true;
        }
    }
    return false;
}

inline bool brute_subset(const std::vector<int>& small, const std::vector<int>& big)
{
    for (int x : small) {
        if (!brute_member(x, big)) {
            return false;
        }
    }
    return true;
}

/// Linear search for the gold evidence of a pair; null when the pair is NEI.
inline const DocEvidence* brute_gold(const std::vector<Claim>& gold, int claim_id, int doc_id)
{
    for (const auto& c : gold) {
        if (c.id != claim_id) {
            continue;
        }
        for (const auto& kv : c.evidence) {
            if (kv.first == doc_id) {
                return &kv.second;
            }
        }
    }
    return nullptr;
}

inline std::vector<int> brute_cap(const std::vector<int>& sentences, std::optional<int> cap)
{
    std::vector<int> out;
    for (int s : sentences) {
        if (cap && int(out.size()) >= *cap) {
            break;
        }
        out.push_back(s);
    }
    return out;
}

inline BruteResult brute_abstract(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                                  bool with_rationale, std::optional<int> cap = std::nullopt)
{
    BruteCounts c;
    for (const auto& claim : gold) {
        for (const auto& kv : claim.evidence) {
            (void)kv;
            c.gold += 1;
        }
    }
    for (const auto& p : preds) {
        if (p.label == Label::Nei) {
            continue;
        }
        c.predicted += 1;
        const DocEvidence* ev = brute_gold(gold, p.claim_id, p.doc_id);
        if (ev == nullptr || ev->label != p.label) {
            continue;
        }
        if (!with_rationale) {
            c.correct += 1;
            continue;
        }
        const auto chosen = brute_cap(p.rationale, cap);
        bool found = false;
        for (const auto& r : ev->rationales) {
            if (brute_subset(r.sentences, chosen)) {
                found = true;
            }
        }
        if (found) {
            c.correct += 1;
        }
    }
    return brute_finish(c);
}

inline BruteResult brute_sentence(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                                  bool with_label, std::optional<int> cap = std::nullopt)
{
    BruteCounts c;
    for (const auto& claim : gold) {
        for (const auto& kv : claim.evidence) {
            std::vector<int> seen;
            for (const auto& r : kv.second.rationales) {
                for (int s : r.sentences) {
                    if (!brute_member(s, seen)) {
                        seen.push_back(s);
                    }
                }
            }
            c.gold += std::int64_t(seen.size());
        }
    }
    for (const auto& p : preds) {
        if (p.label == Label::Nei) {
            continue;
        }
        const auto chosen = brute_cap(p.rationale, cap);
        const DocEvidence* ev = brute_gold(gold, p.claim_id, p.doc_id);
        for (int s : chosen) {
            c.predicted += 1;
            if (ev == nullptr || (with_label && ev->label != p.label)) {
                continue;
            }
            bool ok = false;
            for (const auto& r : ev->rationales) {
                if (brute_member(s, r.sentences) && brute_subset(r.sentences, chosen)) {
                    ok = true;
                }
            }
            if (ok) {
                c.correct += 1;
            }
        }
    }
    return brute_finish(c);
}

/// Variants in the library's kAllVariants order.
inline std::vector<BruteResult> brute_all(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                                          std::optional<int> cap = std::nullopt)
{
    return {brute_sentence(preds, gold, false, cap), brute_sentence(preds, gold, true, cap),
            brute_abstract(preds, gold, false, cap), brute_abstract(preds, gold, true, cap)};
}

/// Exact integer counts, ratios within 1e-12.
inline bool agrees(const MetricResult& lib, const BruteResult& ref)
{
    auto close = [](double a, double b) { return a - b <= 1e-12 && b - a <= 1e-12; };
    return lib.counts.correct == ref.counts.correct && lib.counts.predicted == ref.counts.predicted &&
           lib.counts.gold == ref.counts.gold && close(lib.precision, ref.precision) &&
           close(lib.recall, ref.recall) && close(lib.f1, ref.f1);
}

/// Scores one variant on the gold evidence and predictions whose (claim, doc)
/// pair is in `keep`; everything else is dropped.
inline BruteResult brute_restricted(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                                    const std::set<std::pair<int, int>>& keep, std::size_t variant_index)
{
    std::vector<Claim> g;
    for (const auto& c : gold) {
        Claim copy;
        copy.id = c.id;
        copy.text = c.text;
        for (const auto& [d, ev] : c.evidence) {
            if (keep.count({c.id, d}) != 0) {
                copy.evidence.emplace(d, ev);
            }
        }
        g.push_back(std::move(copy));
    }
    std::vector<Prediction> p;
    for (const auto& pr : preds) {
        if (keep.count({pr.claim_id, pr.doc_id}) != 0) {
            p.push_back(pr);
        }
    }
    return brute_all(p, g)[variant_index];
}

}  // namespace claimcheck::testing
