#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "claimcheck/checkpoint.hpp"
#include "claimcheck/data_model.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/toy_model.hpp"

namespace claimcheck {

struct DatasetSpec {
    std::string claims;
    std::string corpus;
    double weight = 1.0;
    /// Optional mined negatives ({"id", "doc_ids"} per line) added as NEI pairs.
    std::string negatives;

    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct StageConfig {
    std::string name = "stage";
    std::vector<DatasetSpec> datasets;
    /// Dev set (claims + corpus, oracle candidates) for early stopping.
    std::optional<DatasetSpec> dev;

    int epochs = 20;
    int batch_size = 8;
    double learning_rate = 1e-4;
    double warmup_fraction = 0.1;
    double lambda_rationale = 15.0;
    std::uint64_t seed = 13;
    int max_length = 512;
    int patience = 5;
    double threshold = 0.5;
    /// Provenances admitted into training; everything else is filtered out.
    std::vector<Provenance> provenance = {Provenance::Human, Provenance::WeakIco, Provenance::WeakTitle};
    std::optional<int> few_shot;
    std::uint64_t few_shot_seed = 13;

    /// Architecture used when no input checkpoint is given.
    ModelConfig model;

    std::string checkpoint_in;
    /// Also restore Adam state from checkpoint_in.
    bool resume_optimizer = false;
    std::string checkpoint_out;
    /// Per-epoch JSONL log; defaults to "<checkpoint_out>.log.jsonl".
    std::string log;
    /// Optional per-batch JSONL record of parameter deltas.
    std::string probe_log;

    void validate() const;
};

/// Parses and validates `key = value` lines ('#' comments, blank lines ignored). Relative
/// paths are resolved against the config file's directory. Unknown keys and
/// malformed values raise ParseError with the line number.
StageConfig parse_stage_config(const std::string& path);
/// Canonical `key = value` text for a config; parsing it yields the same config.
std::string format_stage_config(const StageConfig& cfg);

struct TrainingExample {
    int claim_id = 0;
    int doc_id = 0;
    AssembledInput input;
    Label label = Label::Nei;
    RationaleTargets targets;
};

/// Builds one example per (claim, candidate doc) where candidates are the
/// cited docs, evidence docs and any negatives for the claim. Evidence pairs
/// without rationale annotation get absent targets; NEI pairs get all-zero
/// targets. Documents the verifier cannot encode are skipped and counted.
struct ExampleSet {
    std::vector<TrainingExample> examples;
    std::size_t skipped = 0;
};
ExampleSet build_examples(const VerifierModel& model, const std::vector<Claim>& claims, const Corpus& corpus,
                          const std::map<int, std::vector<int>>& negatives = {});

inline constexpr int kDefaultFewShot = 45;

/// Uniform sample of `n` claims without replacement, in input order; the
/// whole set when n == size. Throws ValidationError when n > size.
std::vector<Claim> sample_few_shot(const std::vector<Claim>& claims, int n, std::uint64_t seed);

std::vector<Claim> filter_provenance(const std::vector<Claim>& claims, const std::vector<Provenance>& keep);

/// Learning rate for 1-based step `step` of `total`: linear warmup over the
/// first warmup_fraction of steps, then linear decay.
double scheduled_lr(double base, std::int64_t step, std::int64_t total, double warmup_fraction);

/// Adam with two parameter groups. The rationale head is only stepped when
/// the batch carried rationale targets, so its moments and values are left
/// untouched by label-only batches.
class GroupedAdam {
  public:
    GroupedAdam(std::size_t size, std::pair<std::size_t, std::size_t> rationale_range);
    GroupedAdam(AdamState state, std::pair<std::size_t, std::size_t> rationale_range);

    void step(std::span<double> params, std::span<const double> grad, double lr, bool update_rationale_head);
    const AdamState& state() const noexcept { return m_state; }

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

  private:
    void update_range(std::span<double> params, std::span<const double> grad, double lr, std::size_t begin,
                      std::size_t end, std::int64_t t);

    AdamState m_state;
    std::pair<std::size_t, std::size_t> m_rationale;
};

struct BatchReport {
    int epoch = 0;
    std::int64_t step = 0;
    std::size_t examples = 0;
    std::size_t rationale_examples = 0;
    double loss = 0.0;
    /// L1 norm of the change in rationale-head and remaining parameters.
    double rationale_head_delta = 0.0;
    double body_delta = 0.0;
};

struct EpochReport {
    int epoch = 0;
    std::int64_t steps = 0;
    std::size_t examples = 0;
    double mean_loss = 0.0;
    std::vector<MetricResult> dev;
    bool improved = false;
};

struct StageResult {
    Checkpoint checkpoint;
    std::vector<EpochReport> epochs;
    int best_epoch = 0;
    /// Dev abstract-level label+rationale F1 of the returned checkpoint.
    double best_dev_f1 = 0.0;
    std::vector<MetricResult> best_dev;
    std::size_t skipped_examples = 0;
};

class TrainingDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TrainingHooks {
    std::function<void(const BatchReport&)> on_batch;
    std::function<void(const EpochReport&)> on_epoch;
};

/// Minibatch training on the multitask loss. Per-example gradients are
/// computed in parallel and summed in a fixed order, so results do not depend
/// on the thread count. Writes checkpoint_out, its resolved config copy and
/// the log when checkpoint_out is set. Throws TrainingDiverged (after saving
/// the last good parameters) on a non-finite loss.
StageResult run_stage(const StageConfig& cfg, const TrainingHooks& hooks = {});

/// Every dataset a checkpoint was trained on, earliest stage first, as
/// recorded in checkpoint meta ("ancestry" + "datasets").
nlohmann::ordered_json training_lineage(const Checkpoint& ckpt);

/// Throws ValidationError when any of `paths` (by content digest) appears in
/// the checkpoint's training lineage. Used to keep zero-shot evaluation
/// honest.
void audit_unseen(const Checkpoint& ckpt, const std::vector<std::string>& paths);

struct LambdaReport {
    std::vector<std::pair<double, double>> scores;  // (lambda, dev label+rationale F1), ascending lambda
    double best_lambda = 0.0;
};

/// Trains one model per grid value and picks the best dev abstract-level
/// label+rationale F1; ties go to the smaller lambda.
LambdaReport tune_lambda(std::vector<double> grid, const StageConfig& base);

}  // namespace claimcheck
