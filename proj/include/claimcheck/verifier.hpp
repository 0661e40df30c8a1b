#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "claimcheck/data_model.hpp"
#include "claimcheck/tensor.hpp"

namespace claimcheck {

/// Contract every encoder satisfies: global positions attend to and are
/// attended by every position, all other positions see a local window of
/// radius `window` plus the global positions, and one vector comes back per
/// input position.
struct EncoderSpec {
    std::string tokenizer = "hash-word-v1";
    int vocab_size = 4096;
    int max_length = 512;
    int window = 16;
    int hidden = 64;
    int layers = 2;
    int ffn = 128;
    /// Offsets |j - i| beyond this share one learned attention bias.
    int relative_radius = 16;

    void validate() const;
    friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

struct LossConfig {
    double lambda_rationale = 15.0;

    void validate() const;
    friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

/// Word-level hashing tokenizer over the retrieval analyzer's tokens.
/// Ids 0..3 are reserved for PAD, CLS, SEP and UNK.
class Tokenizer {
  public:
    static constexpr int kPad = 0;
    static constexpr int kCls = 1;
    static constexpr int kSep = 2;
    static constexpr int kUnk = 3;
    static constexpr int kNumSpecial = 4;
    static constexpr std::string_view kName = "hash-word-v1";

    explicit Tokenizer(int vocab_size);

    std::vector<int> encode(std::string_view text) const;
    int token_id(std::string_view token) const;
    int vocab_size() const noexcept { return m_vocab_size; }

  private:
    int m_vocab_size;
};

/// CLS claim SEP title SEP s1 SEP_1 ... sn SEP_n.
struct AssembledInput {
    std::vector<int> token_ids;
    int cls_position = 0;
    /// Position of the separator following each retained sentence.
    std::vector<int> sentence_marker_positions;
    /// 1 at CLS, every claim token, and every separator.
    std::vector<std::uint8_t> global_attention_mask;
    bool truncated = false;
    int claim_length = 0;
    int title_length = 0;

    std::size_t size() const noexcept { return token_ids.size(); }
    std::size_t retained_sentences() const noexcept { return sentence_marker_positions.size(); }

    friend bool operator==(const AssembledInput&, const AssembledInput&) = default;
};

/// Builds the encoder input. Trailing whole sentences are dropped to fit
/// `max_length`; claim and title are never cut. Throws ValidationError for a
/// document without sentences or when claim + title alone do not fit.
AssembledInput assemble_input(std::string_view claim, const Document& document, const Tokenizer& tokenizer,
                              int max_length);

/// Label probabilities in Label order (SUPPORTS, REFUTES, NEI) and one
/// rationale probability per retained sentence.
struct VerifierOutput {
    std::array<double, kNumLabels> label_probs{};
    std::vector<double> rationale_probs;

    friend bool operator==(const VerifierOutput&, const VerifierOutput&) = default;
};

class Encoder {
  public:
    virtual ~Encoder() = default;
    virtual int hidden_size() const = 0;
    /// One row per input position.
    virtual Matrix encode(const AssembledInput& input) const = 0;
};

class ParameterSet;

/// Views onto the label and rationale head weights inside a ParameterSet.
/// Label head: tanh(h W1 + b1) W2 + b2, softmax over 3. Rationale head: the
/// same shape with 2 outputs, applied to every sentence separator.
class ClassificationHeads {
  public:
    struct Layout {
        std::size_t label_w1, label_b1, label_w2, label_b2;
        std::size_t rationale_w1, rationale_b1, rationale_w2, rationale_b2;
        int hidden = 0;
        int head_hidden = 0;
    };

    ClassificationHeads(const ParameterSet& params, const Layout& layout) : m_params(&params), m_layout(layout) {}

    /// Registers head tensors into `params` and returns their layout.
    static Layout declare(ParameterSet& params, int hidden, int head_hidden);

    std::array<double, kNumLabels> label_logits(std::span<const double> cls) const;
    /// Logit pairs (not-rationale, rationale) per marker row.
    Matrix rationale_logits(MatRef markers) const;

    const Layout& layout() const noexcept { return m_layout; }

  private:
    const ParameterSet* m_params;
    Layout m_layout;
};

/// Encodes, then applies both heads. Throws ValidationError when the encoder
/// returns a different number of rows than input positions.
VerifierOutput forward(const Encoder& encoder, const ClassificationHeads& heads, const AssembledInput& input);

/// Per-sentence binary targets over the retained sentences, or nullopt when
/// the instance has no rationale annotation.
using RationaleTargets = std::optional<std::vector<std::uint8_t>>;

/// L = CE(label) + lambda * mean_i BCE(rationale_i). The rationale term is
/// exactly zero when targets are absent, whatever lambda is.
double multitask_loss(const VerifierOutput& output, Label gold, const RationaleTargets& rationale,
                      const LossConfig& cfg);

/// Converts gold rationale indices to per-sentence targets over `retained`
/// sentences; indices past the truncation point are dropped.
std::vector<std::uint8_t> rationale_targets(std::span<const int> gold_indices, std::size_t retained);

/// Threshold rationale probabilities, take the argmax label; non-NEI with no
/// rationale becomes NEI, NEI clears the rationale. claim_id/doc_id are 0.
Prediction decode(const VerifierOutput& output, double threshold);

}  // namespace claimcheck
