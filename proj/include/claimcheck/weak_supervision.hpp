#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "claimcheck/data_model.hpp"
#include "claimcheck/retrieval.hpp"

namespace claimcheck {

enum class IcoDirection : std::uint8_t { SigIncreased, SigDecreased, NoSigDiff };

std::string_view direction_name(IcoDirection d);
std::optional<IcoDirection> parse_direction(std::string_view text);

struct IcoPrompt {
    int doc_id = 0;
    std::string intervention;
    std::string comparator;
    std::string outcome;
    IcoDirection direction = IcoDirection::SigIncreased;
    std::optional<std::vector<int>> rationale_indices;

    friend bool operator==(const IcoPrompt&, const IcoPrompt&) = default;
};

/// JSONL {"doc_id", "intervention", "comparator", "outcome", "direction", "rationale_indices"?}.
std::vector<IcoPrompt> load_ico_prompts(const std::string& path);
nlohmann::ordered_json ico_prompt_json(const IcoPrompt& p);
IcoPrompt ico_prompt_from_json(const nlohmann::ordered_json& j);

/// "{I} {increases|decreases} {O} compared to {C}", comparator clause dropped when empty.
std::string ico_claim_text(const IcoPrompt& p, bool increases);

/// SUPPORTS claim with the direction's verb, then the REFUTES claim with the
/// opposite verb, ids first_id and first_id + 1. NO_SIG_DIFF yields nothing.
std::vector<Claim> ico_to_claims(const IcoPrompt& prompt, int first_id);

struct NegationRule {
    std::string pattern;
    std::string replacement;
};

/// does not -> does, do not -> do, is not -> is, are not -> are, cannot -> can.
const std::vector<NegationRule>& default_negation_rules();

/// Declarative-finding gate: no '?', at least 4 tokens, and a finding verb
/// from a fixed lexicon.
bool is_claim_like(std::string_view title);

/// Rewrites the first occurrence (whole words) of the first matching rule;
/// nullopt when no rule matches.
std::optional<std::pair<std::string, const NegationRule*>> apply_negation(const std::string& title,
                                                                          const std::vector<NegationRule>& rules);

/// Title as a SUPPORTS claim against its own abstract (label only, no
/// rationales), plus a REFUTES claim for the negation-stripped title when a
/// rule matches. Non-claim-like titles yield nothing.
std::vector<Claim> title_to_claims(const Document& doc, int first_id,
                                   const std::vector<NegationRule>& rules = default_negation_rules());

/// Regenerates a weakly-labelled claim from its trace; the result equals the
/// original when the claim was produced by this module.
Claim replay_generated(const Claim& generated, const Corpus& corpus);

inline constexpr int kDefaultPool = 1000;
inline constexpr int kDefaultSample = 20;

/// Top `pool_size` BM25 docs minus the claim's evidence docs, then a uniform
/// sample of `sample_size` without replacement seeded by (seed, claim id).
/// Returns every eligible doc when fewer remain. Output keeps rank order.
std::vector<int> mine_hard_negatives(const Claim& claim, const InvertedIndex& index, int pool_size = kDefaultPool,
                                     int sample_size = kDefaultSample, std::uint64_t seed = 0);

/// {"id": claim_id, "doc_ids": [...]} per line.
void save_negatives(const std::map<int, std::vector<int>>& negatives, const std::string& path);
std::map<int, std::vector<int>> load_negatives(const std::string& path);

}  // namespace claimcheck
