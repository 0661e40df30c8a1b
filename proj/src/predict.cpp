#include "claimcheck/predict.hpp"

#include <algorithm>
#include <set>

#include "claimcheck/errors.hpp"

namespace claimcheck {

std::vector<int> oracle_candidates(const Claim& claim)
{
    std::set<int> ids(claim.cited_doc_ids.begin(), claim.cited_doc_ids.end());
    for (const auto& [doc_id, _] : claim.evidence) {
        ids.insert(doc_id);
    }
    return {ids.begin(), ids.end()};
}

std::map<int, std::vector<int>> oracle_candidate_map(const std::vector<Claim>& claims)
{
    std::map<int, std::vector<int>> out;
    for (const auto& c : claims) {
        out[c.id] = oracle_candidates(c);
    }
    return out;
}

namespace {

struct PairJob {
    const Claim* claim;
    const Document* doc;
};

std::string pair_error(int claim_id, int doc_id, const std::string& what)
{
    return "claim " + std::to_string(claim_id) + ", doc " + std::to_string(doc_id) + ": " + what;
}

std::vector<Prediction> run_jobs(const VerifierModel& model, const std::vector<PairJob>& jobs, double threshold)
{
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ValidationError("threshold must lie strictly between 0 and 1");
    }
    std::vector<Prediction> preds(jobs.size());
    std::vector<std::string> errors(jobs.size());
    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& job = jobs[static_cast<std::size_t>(i)];
        try {
            const auto input = model.assemble(job.claim->text, *job.doc);
            auto pred = decode(model.forward(input), threshold);
            pred.claim_id = job.claim->id;
            pred.doc_id = job.doc->doc_id;
            preds[static_cast<std::size_t>(i)] = std::move(pred);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = pair_error(job.claim->id, job.doc->doc_id, e.what());
        }
    }
    std::string combined;
    for (const auto& e : errors) {
        if (!e.empty()) {
            combined += (combined.empty() ? "" : "; ") + e;
        }
    }
    if (!combined.empty()) {
        throw ValidationError("prediction failed for " + combined);
    }
    return preds;
}

}  // namespace

std::vector<Prediction> predict_batch(const VerifierModel& model, const Claim& claim,
                                      const std::vector<const Document*>& candidates, double threshold)
{
    std::vector<PairJob> jobs;
    for (const auto* doc : candidates) {
        jobs.push_back({&claim, doc});
    }
    std::stable_sort(jobs.begin(), jobs.end(),
                     [](const PairJob& a, const PairJob& b) { return a.doc->doc_id < b.doc->doc_id; });
    return run_jobs(model, jobs, threshold);
}

std::vector<Prediction> predict_claims(const VerifierModel& model, const std::vector<Claim>& claims,
                                       const Corpus& corpus, const std::map<int, std::vector<int>>& candidates,
                                       double threshold)
{
    std::vector<PairJob> jobs;
    for (const auto& claim : claims) {
        auto it = candidates.find(claim.id);
        if (it == candidates.end()) {
            continue;
        }
        std::vector<int> ids = it->second;
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (int doc_id : ids) {
            const auto* doc = corpus.find(doc_id);
            if (doc == nullptr) {
                throw ValidationError(pair_error(claim.id, doc_id, "document not in corpus"));
            }
            jobs.push_back({&claim, doc});
        }
    }
    return run_jobs(model, jobs, threshold);
}

}  // namespace claimcheck
