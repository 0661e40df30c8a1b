#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "claimcheck/kernels.hpp"
#include "claimcheck/parameters.hpp"
#include "claimcheck/verifier.hpp"

namespace claimcheck {

struct ModelConfig {
    EncoderSpec encoder;
    int head_hidden = 64;
    std::uint64_t seed = 13;

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Small pre-norm transformer honoring the windowed/global attention
/// contract: learned token and position embeddings, single-head attention
/// with a learned relative-offset bias, tanh feed-forward, final layer norm.
/// Holds views into a ParameterSet owned elsewhere.
class ToyEncoder final : public Encoder {
  public:
    struct LayerLayout {
        std::size_t ln1_gain, ln1_bias;
        std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
        std::size_t rel_bias;
        std::size_t ln2_gain, ln2_bias;
        std::size_t w1, b1, w2, b2;
    };
    struct Layout {
        std::size_t token_embedding = 0;
        std::size_t position_embedding = 0;
        std::vector<LayerLayout> layers;
        std::size_t final_gain = 0;
        std::size_t final_bias = 0;
    };

    struct LayerNormCache {
        Matrix normalized;
        std::vector<double> inv_std;
    };
    struct LayerTrace {
        Matrix input;
        LayerNormCache ln1;
        Matrix attn_in, q, k, v, ctx;
        std::vector<std::vector<double>> weights;
        Matrix mid;
        LayerNormCache ln2;
        Matrix ffn_in, ffn_act;
    };
    /// Everything backward() needs from one forward pass.
    struct Trace {
        std::vector<int> tokens;
        kernels::AttentionPattern pattern;
        std::vector<LayerTrace> layers;
        LayerNormCache final_ln;
        Matrix output;
    };

    /// Registers encoder tensors with canonical "encoder.*" names.
    static Layout declare(ParameterSet& params, const EncoderSpec& spec);

    ToyEncoder(const EncoderSpec& spec, const ParameterSet& params, Layout layout);

    int hidden_size() const override { return m_spec.hidden; }
    Matrix encode(const AssembledInput& input) const override;

    Trace encode_traced(const AssembledInput& input, kernels::Exec exec = kernels::Exec::Parallel) const;
    /// Accumulates d(loss)/d(parameters) into `grad` given d(loss)/d(output).
    void backward(const Trace& trace, MatRef d_output, std::span<double> grad) const;

    /// Dense attention weights of one layer; zero wherever the pattern forbids.
    Matrix attention_matrix(const AssembledInput& input, int layer) const;

    const EncoderSpec& spec() const noexcept { return m_spec; }
    const Layout& layout() const noexcept { return m_layout; }

  private:
    EncoderSpec m_spec;
    const ParameterSet* m_params;
    Layout m_layout;
};

/// Toy encoder plus both classification heads over one flat parameter set,
/// initialized deterministically from the config seed.
class VerifierModel {
  public:
    explicit VerifierModel(const ModelConfig& config);
    /// Adopts existing parameter values; throws ValidationError on a size mismatch.
    VerifierModel(const ModelConfig& config, std::span<const double> values);

    const ModelConfig& config() const noexcept { return m_config; }
    const ParameterSet& parameters() const noexcept { return m_params; }
    ParameterSet& parameters() noexcept { return m_params; }
    const Tokenizer& tokenizer() const noexcept { return m_tokenizer; }

    ToyEncoder encoder() const { return ToyEncoder(m_config.encoder, m_params, m_encoder_layout); }
    ClassificationHeads heads() const { return ClassificationHeads(m_params, m_head_layout); }

    AssembledInput assemble(std::string_view claim, const Document& document) const;
    VerifierOutput forward(const AssembledInput& input) const;

    /// Returns the multitask loss and adds its gradient into `grad`
    /// (same layout as parameters()). Absent rationale targets contribute
    /// nothing to the loss or to any gradient.
    double loss_and_gradient(const AssembledInput& input, Label gold, const RationaleTargets& rationale,
                             double lambda_rationale, std::span<double> grad,
                             kernels::Exec exec = kernels::Exec::Serial) const;

    /// [begin, end) of the rationale-head tensors in the flat parameter vector.
    std::pair<std::size_t, std::size_t> rationale_head_range() const;

  private:
    void declare_layout();

    ModelConfig m_config;
    ParameterSet m_params;
    Tokenizer m_tokenizer;
    ToyEncoder::Layout m_encoder_layout;
    ClassificationHeads::Layout m_head_layout{};
};

}  // namespace claimcheck
