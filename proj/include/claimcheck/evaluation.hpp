#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimcheck/data_model.hpp"

namespace claimcheck {

enum class MetricVariant : std::uint8_t {
    SentenceSelectionOnly,
    SentenceSelectionLabel,
    AbstractLabelOnly,
    AbstractLabelRationale,
};

/// All variants in report column order (sentence-level first).
inline constexpr std::array<MetricVariant, 4> kAllVariants = {
    MetricVariant::SentenceSelectionOnly, MetricVariant::SentenceSelectionLabel, MetricVariant::AbstractLabelOnly,
    MetricVariant::AbstractLabelRationale};

std::string_view variant_key(MetricVariant v);
std::string_view variant_title(MetricVariant v);
std::optional<MetricVariant> parse_variant(std::string_view key);

struct MetricCounts {
    std::int64_t correct = 0;
    std::int64_t predicted = 0;
    std::int64_t gold = 0;

    friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

/// Ratios in [0, 1]; presentation multiplies by 100.
struct MetricResult {
    MetricVariant variant = MetricVariant::AbstractLabelOnly;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    MetricCounts counts;

    static MetricResult from_counts(MetricVariant variant, const MetricCounts& counts);
};

/// Harmonic mean; 0 when p + r == 0. Scale-agnostic (ratios or percents).
double f1(double precision, double recall);

/// Half-up rounding of a [0, 1] ratio to one decimal on the percent scale.
double percent_1dp(double ratio);

struct ScoringOptions {
    /// Only the first N predicted rationale sentences (ascending) count. No cap by default.
    std::optional<int> max_rationale_sentences;
};

/// Unit: (claim, doc) pair. A non-NEI prediction is correct when the label
/// matches gold and, with `require_rationale`, some gold rationale is fully
/// contained in the predicted sentences.
MetricResult abstract_level(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                            bool require_rationale, const ScoringOptions& opts = {});

/// Unit: predicted rationale sentence. Correct when it belongs to a gold
/// rationale whose sentences were all predicted for that pair and, with
/// `require_label`, the predicted label matches gold. Gold count is the
/// per-pair union of rationale sentences.
MetricResult sentence_level(const std::vector<Prediction>& preds, const std::vector<Claim>& gold, bool require_label,
                            const ScoringOptions& opts = {});

MetricResult evaluate_variant(MetricVariant variant, const std::vector<Prediction>& preds,
                              const std::vector<Claim>& gold, const ScoringOptions& opts = {});
/// One result per entry of kAllVariants, in that order.
std::vector<MetricResult> evaluate_all(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                                       const ScoringOptions& opts = {});

/// Gold evidence of `annotator` expressed as predictions (label + rationale union per pair).
std::vector<Prediction> annotations_as_predictions(const std::vector<Claim>& annotator);

/// Scores annotator B against annotator A as gold. Both must annotate the same
/// (claim, doc) pairs (cited or evidence docs); otherwise ValidationError lists
/// the symmetric difference.
std::vector<MetricResult> human_agreement(const std::vector<Claim>& annotator_a, const std::vector<Claim>& annotator_b,
                                          const Corpus& corpus);

struct CategoryAnnotation {
    int claim_id = 0;
    int doc_id = 0;
    bool context = false;
    bool background = false;
    bool numerical = false;
};

std::vector<CategoryAnnotation> load_annotations(const std::string& path);

enum class Category : std::uint8_t { Context, Background, Numerical };
inline constexpr std::array<Category, 3> kAllCategories = {Category::Context, Category::Background,
                                                           Category::Numerical};
std::string_view category_name(Category c);

struct CategoryBucket {
    Category category = Category::Context;
    bool value = false;
    /// Annotated pairs in the bucket.
    std::size_t pairs = 0;
    MetricResult result;
};

struct CategoryBreakdown {
    /// Context:no, Context:yes, Background:no, ... in that order.
    std::vector<CategoryBucket> buckets;
    /// Annotated pairs overall.
    MetricResult annotated;
    std::size_t annotated_pairs = 0;
    /// Gold and predicted pairs that carry no annotation.
    MetricResult remainder;
    std::size_t remainder_pairs = 0;
};

/// Partitions pairs along each category axis independently and scores
/// `variant` per bucket. Throws ValidationError when an annotation names a
/// pair that is not gold evidence.
CategoryBreakdown by_category(const std::vector<Prediction>& preds, const std::vector<Claim>& gold,
                              const std::vector<CategoryAnnotation>& annotations, MetricVariant variant,
                              const ScoringOptions& opts = {});

}  // namespace claimcheck
