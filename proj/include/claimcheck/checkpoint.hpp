#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "claimcheck/toy_model.hpp"

namespace claimcheck {

/// Adam moments plus step counters. The rationale head keeps its own
/// counter because it is only stepped on batches that carry rationale targets.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    /// Optimizer steps taken (drives the learning-rate schedule).
    std::int64_t step = 0;
    std::int64_t body_updates = 0;
    std::int64_t rationale_updates = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct Checkpoint {
    ModelConfig model;
    LossConfig loss;
    std::vector<double> values;
    std::optional<AdamState> optimizer;
    /// Free-form provenance (stage name, epoch, dev score); not used to restore state.
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

inline constexpr std::string_view kCheckpointMagic = "claimcheck-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// One file: a header line "<magic> v<version>", one line of JSON (config,
/// tensor table, optimizer counters), then raw little-endian float64 values
/// followed by the Adam moments when present.
void save_checkpoint(const Checkpoint& ckpt, const ParameterSet& layout, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const VerifierModel& model, const LossConfig& loss,
                           std::optional<AdamState> optimizer = std::nullopt);
VerifierModel model_from_checkpoint(const Checkpoint& ckpt);

nlohmann::ordered_json model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);

}  // namespace claimcheck
