#pragma once

#include <map>
#include <vector>

#include "claimcheck/data_model.hpp"
#include "claimcheck/toy_model.hpp"

namespace claimcheck {

/// Oracle-setting candidates: cited docs plus any evidence docs, ascending.
std::vector<int> oracle_candidates(const Claim& claim);

/// assemble -> forward -> decode for each candidate, in doc_id order. Errors on
/// individual documents are collected and rethrown together as one
/// ValidationError naming every failing (claim, doc) pair.
std::vector<Prediction> predict_batch(const VerifierModel& model, const Claim& claim,
                                      const std::vector<const Document*>& candidates, double threshold);

/// Runs predict_batch over many claims in parallel. `candidates` maps
/// claim_id to doc ids; claims without an entry get no predictions. Output is
/// ordered by (claim order, doc_id) regardless of thread count.
std::vector<Prediction> predict_claims(const VerifierModel& model, const std::vector<Claim>& claims,
                                       const Corpus& corpus, const std::map<int, std::vector<int>>& candidates,
                                       double threshold);

std::map<int, std::vector<int>> oracle_candidate_map(const std::vector<Claim>& claims);

}  // namespace claimcheck
