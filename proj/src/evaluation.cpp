#include "claimcheck/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "claimcheck/errors.hpp"
#include "claimcheck/io.hpp"

namespace claimcheck {

std::string_view variant_key(MetricVariant v)
{
    switch (v) {
    case MetricVariant::SentenceSelectionOnly: return "sentence_selection_only";
    case MetricVariant::SentenceSelectionLabel: return "sentence_selection_label";
    case MetricVariant::AbstractLabelOnly: return "abstract_label_only";
    case MetricVariant::AbstractLabelRationale: return "abstract_label_rationale";
    }
    return "?";
}

std::string_view variant_title(MetricVariant v)
{
    switch (v) {
    case MetricVariant::SentenceSelectionOnly: return "Sentence Selection-Only";
    case MetricVariant::SentenceSelectionLabel: return "Sentence Selection+Label";
    case MetricVariant::AbstractLabelOnly: return "Abstract Label-Only";
    case MetricVariant::AbstractLabelRationale: return "Abstract Label+Rationale";
    }
    return "?";
}

std::optional<MetricVariant> parse_variant(std::string_view key)
{
    for (auto v : kAllVariants) {
        if (variant_key(v) == key) {
            return v;
        }
    }
    return std::nullopt;
}

double f1(double precision, double recall)
{
    const double denom = precision + recall;
    return denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
}

double percent_1dp(double ratio) { return std::floor(ratio * 1000.0 + 0.5) / 10.0; }

MetricResult MetricResult::from_counts(MetricVariant variant, const MetricCounts& counts)
{
    MetricResult r;
    r.variant = variant;
    r.counts = counts;
    r.precision = counts.predicted == 0 ? 0.0 : static_cast<double>(counts.correct) / static_cast<double>(counts.predicted);
    r.recall = counts.gold == 0 ? 0.0 : static_cast<double>(counts.correct) / static_cast<double>(counts.gold);
    r.f1 = claimcheck::f1(r.precision, r.recall);
    return r;
}

namespace {

std::vector<int> counted_sentences(const Prediction& p, const ScoringOptions& opts)
{
    std::vector<int> s = p.rationale;
    if (opts.max_rationale_sentences && static_cast<int>(s.size()) > *opts.max_rationale_sentences) {
        s.resize(static_cast<std::size_t>(std::max(0, *opts.max_rationale_sentences)));
    }
    return s;
}

bool contains_all(const std::vector<int>& sorted_haystack, const std::vector<int>& needles)
{
    return std::all_of(needles.begin(), needles.end(), [&](int s) {
        return std::binary_search(sorted_haystack.begin(), sorted_haystack.end(), s);
    });
}

const DocEvidence* find_evidence(const std::map<int, const Claim*>& claims, int claim_id, int doc_id)
{
    auto c = claims.find(claim_id);
    if (c == claims.end()) {
        return nullptr;
    }
    auto e = c->second->evidence.find(doc_id);
    return e == c->second->evidence.end() ? nullptr : &e->second;
}

}  // namespace

MetricResult abstract_level(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                            bool require_rationale, const ScoringOptions& opts)
{
    const auto claims = index_claims(gold);
    MetricCounts counts;
    for (const auto& c : gold) {
        counts.gold += static_cast<std::int64_t>(c.evidence.size());
    }
    for (const auto& p : preds) {
        if (p.label == Label::Nei) {
            continue;
        }
        ++counts.predicted;
        const auto* ev = find_evidence(claims, p.claim_id, p.doc_id);
        if (ev == nullptr || ev->label != p.label) {
            continue;
        }
        if (require_rationale) {
            const auto sentences = counted_sentences(p, opts);
            const bool any = std::any_of(ev->rationales.begin(), ev->rationales.end(),
                                         [&](const Rationale& r) { return contains_all(sentences, r.sentences); });
            if (!any) {
                continue;
            }
        }
        ++counts.correct;
    }
    return MetricResult::from_counts(
        require_rationale ? MetricVariant::AbstractLabelRationale : MetricVariant::AbstractLabelOnly, counts);
}

MetricResult sentence_level(const std::vector<Prediction>& preds, const std::vector<Claim>& gold, bool require_label,
                            const ScoringOptions& opts)
{
    const auto claims = index_claims(gold);
    MetricCounts counts;
    for (const auto& c : gold) {
        for (const auto& [doc_id, ev] : c.evidence) {
            counts.gold += static_cast<std::int64_t>(ev.sentence_union().size());
        }
    }
    for (const auto& p : preds) {
        if (p.label == Label::Nei) {
            continue;
        }
        const auto sentences = counted_sentences(p, opts);
        counts.predicted += static_cast<std::int64_t>(sentences.size());
        const auto* ev = find_evidence(claims, p.claim_id, p.doc_id);
        if (ev == nullptr || (require_label && ev->label != p.label)) {
            continue;
        }
        std::set<int> credited;
        for (const auto& r : ev->rationales) {
            if (contains_all(sentences, r.sentences)) {
                credited.insert(r.sentences.begin(), r.sentences.end());
            }
        }
        counts.correct += static_cast<std::int64_t>(credited.size());
    }
    return MetricResult::from_counts(
        require_label ? MetricVariant::SentenceSelectionLabel : MetricVariant::SentenceSelectionOnly, counts);
}

MetricResult evaluate_variant(MetricVariant variant, const std::vector<Prediction>& preds,
                              const std::vector<Claim>& gold, const ScoringOptions& opts)
{
    switch (variant) {
    case MetricVariant::SentenceSelectionOnly: return sentence_level(preds, gold, false, opts);
    case MetricVariant::SentenceSelectionLabel: return sentence_level(preds, gold, true, opts);
    case MetricVariant::AbstractLabelOnly: return abstract_level(preds, gold, false, opts);
    case MetricVariant::AbstractLabelRationale: return abstract_level(preds, gold, true, opts);
    }
    throw std::invalid_argument("unknown metric variant");
}

std::vector<MetricResult> evaluate_all(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                                       const ScoringOptions& opts)
{
    std::vector<MetricResult> out;
    for (auto v : kAllVariants) {
        out.push_back(evaluate_variant(v, preds, gold, opts));
    }
    return out;
}

std::vector<Prediction> annotations_as_predictions(const std::vector<Claim>& annotator)
{
    std::vector<Prediction> preds;
    for (const auto& c : annotator) {
        for (const auto& [doc_id, ev] : c.evidence) {
            preds.push_back(Prediction{c.id, doc_id, ev.label, ev.sentence_union()});
        }
    }
    return preds;
}

namespace {

std::set<std::pair<int, int>> annotated_pairs(const std::vector<Claim>& claims)
{
    std::set<std::pair<int, int>> pairs;
    for (const auto& c : claims) {
        for (int d : c.cited_doc_ids) {
            pairs.emplace(c.id, d);
        }
        for (const auto& [d, _] : c.evidence) {
            pairs.emplace(c.id, d);
        }
    }
    return pairs;
}

std::string describe_pairs(const std::vector<std::pair<int, int>>& pairs)
{
    std::string out;
    for (const auto& [c, d] : pairs) {
        if (!out.empty()) {
            out += ", ";
        }
        out += "(" + std::to_string(c) + ", " + std::to_string(d) + ")";
    }
    return out;
}

}  // namespace

std::vector<MetricResult> human_agreement(const std::vector<Claim>& annotator_a, const std::vector<Claim>& annotator_b,
                                          const Corpus& corpus)
{
    validate_claims(annotator_a, corpus);
    validate_claims(annotator_b, corpus);
    const auto pa = annotated_pairs(annotator_a);
    const auto pb = annotated_pairs(annotator_b);
    if (pa != pb) {
        std::vector<std::pair<int, int>> only_a;
        std::vector<std::pair<int, int>> only_b;
        std::set_difference(pa.begin(), pa.end(), pb.begin(), pb.end(), std::back_inserter(only_a));
        std::set_difference(pb.begin(), pb.end(), pa.begin(), pa.end(), std::back_inserter(only_b));
        throw ValidationError("annotators cover different (claim, doc) pairs; only in A: [" + describe_pairs(only_a) +
                              "]; only in B: [" + describe_pairs(only_b) + "]");
    }
    return evaluate_all(annotations_as_predictions(annotator_b), annotator_a);
}

std::vector<CategoryAnnotation> load_annotations(const std::string& path)
{
    auto in = open_input(path);
    std::vector<CategoryAnnotation> out;
    std::set<std::pair<int, int>> seen;
    for_each_line(in, [&](const std::string& text, std::size_t line) {
        try {
            auto obj = nlohmann::json::parse(text);
            CategoryAnnotation a;
            a.claim_id = obj.at("claim_id").get<int>();
            a.doc_id = obj.at("doc_id").get<int>();
            a.context = obj.at("context").get<bool>();
            a.background = obj.at("background").get<bool>();
            a.numerical = obj.at("numerical").get<bool>();
            if (!seen.emplace(a.claim_id, a.doc_id).second) {
                throw ParseError(path, line, "duplicate annotation for the same (claim, doc) pair");
            }
            out.push_back(a);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, line, e.what());
        }
    });
    return out;
}

std::string_view category_name(Category c)
{
    switch (c) {
    case Category::Context: return "Context";
    case Category::Background: return "Background";
    case Category::Numerical: return "Numerical";
    }
    return "?";
}

namespace {

bool category_value(const CategoryAnnotation& a, Category c)
{
    switch (c) {
    case Category::Context: return a.context;
    case Category::Background: return a.background;
    case Category::Numerical: return a.numerical;
    }
    return false;
}

using PairSet = std::set<std::pair<int, int>>;

MetricResult score_restricted(MetricVariant variant, const std::vector<Prediction>& preds,
                              const std::vector<Claim>& gold, const PairSet& keep, bool complement,
                              const ScoringOptions& opts)
{
    auto wanted = [&](int c, int d) { return (keep.count({c, d}) != 0) != complement; };
    std::vector<Claim> g;
    g.reserve(gold.size());
    for (const auto& c : gold) {
        Claim copy;
        copy.id = c.id;
        copy.text = c.text;
        for (const auto& [d, ev] : c.evidence) {
            if (wanted(c.id, d)) {
                copy.evidence.emplace(d, ev);
            }
        }
        g.push_back(std::move(copy));
    }
    std::vector<Prediction> p;
    for (const auto& pr : preds) {
        if (wanted(pr.claim_id, pr.doc_id)) {
            p.push_back(pr);
        }
    }
    return evaluate_variant(variant, p, g, opts);
}

}  // namespace

CategoryBreakdown by_category(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                              const std::vector<CategoryAnnotation>& annotations, MetricVariant variant,
                              const ScoringOptions& opts)
{
    const auto claims = index_claims(gold);
    PairSet all;
    for (const auto& a : annotations) {
        if (find_evidence(claims, a.claim_id, a.doc_id) == nullptr) {
            throw ValidationError("annotated pair (" + std::to_string(a.claim_id) + ", " + std::to_string(a.doc_id) +
                                  ") is not gold evidence");
        }
        all.emplace(a.claim_id, a.doc_id);
    }

    CategoryBreakdown out;
    for (auto cat : kAllCategories) {
        for (bool value : {false, true}) {
            PairSet bucket;
            for (const auto& a : annotations) {
                if (category_value(a, cat) == value) {
                    bucket.emplace(a.claim_id, a.doc_id);
                }
            }
            CategoryBucket b;
            b.category = cat;
            b.value = value;
            b.pairs = bucket.size();
            b.result = score_restricted(variant, preds, gold, bucket, false, opts);
            out.buckets.push_back(b);
        }
    }
    out.annotated = score_restricted(variant, preds, gold, all, false, opts);
    out.annotated_pairs = all.size();
    out.remainder = score_restricted(variant, preds, gold, all, true, opts);

    PairSet rest;
    for (const auto& c : gold) {
        for (const auto& [d, _] : c.evidence) {
            if (all.count({c.id, d}) == 0) {
                rest.emplace(c.id, d);
            }
        }
    }
    for (const auto& p : preds) {
        if (p.label != Label::Nei && all.count({p.claim_id, p.doc_id}) == 0) {
            rest.emplace(p.claim_id, p.doc_id);
        }
    }
    out.remainder_pairs = rest.size();
    return out;
}

}  // namespace claimcheck
