#include "claimcheck/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "claimcheck/analyzer.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/kernels.hpp"
#include "claimcheck/parameters.hpp"

namespace claimcheck {

void EncoderSpec::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ValidationError("encoder spec: " + what);
        }
    };
    require(tokenizer == Tokenizer::kName, "unknown tokenizer '" + tokenizer + "'");
    require(vocab_size > Tokenizer::kNumSpecial, "vocab_size must exceed the reserved ids");
    require(max_length >= 4, "max_length must be >= 4");
    require(window >= 0, "window must be >= 0");
    require(hidden > 0 && layers >= 0 && ffn > 0, "hidden, ffn must be positive and layers non-negative");
    require(relative_radius >= 0, "relative_radius must be >= 0");
}

void LossConfig::validate() const
{
    if (!(lambda_rationale >= 0.0) || !std::isfinite(lambda_rationale)) {
        throw ValidationError("lambda_rationale must be a finite non-negative number");
    }
}

Tokenizer::Tokenizer(int vocab_size) : m_vocab_size(vocab_size)
{
    if (vocab_size <= kNumSpecial) {
        throw ValidationError("tokenizer vocab_size must exceed " + std::to_string(kNumSpecial));
    }
}

int Tokenizer::token_id(std::string_view token) const
{
    // 64-bit FNV-1a
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : token) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    const auto buckets = static_cast<std::uint64_t>(m_vocab_size - kNumSpecial);
    return kNumSpecial + static_cast<int>(h % buckets);
}

std::vector<int> Tokenizer::encode(std::string_view text) const
{
    std::vector<int> ids;
    for (const auto& t : analyze(text)) {
        ids.push_back(token_id(t));
    }
    return ids;
}

AssembledInput assemble_input(std::string_view claim, const Document& document, const Tokenizer& tokenizer,
                              int max_length)
{
    if (document.sentences.empty()) {
        throw ValidationError("doc " + std::to_string(document.doc_id) + " has an empty abstract");
    }
    const auto claim_ids = tokenizer.encode(claim);
    const auto title_ids = tokenizer.encode(document.title);
    const std::size_t fixed = claim_ids.size() + title_ids.size() + 3;
    if (max_length < 0 || fixed > static_cast<std::size_t>(max_length)) {
        throw ValidationError("doc " + std::to_string(document.doc_id) + ": claim and title need " +
                              std::to_string(fixed) + " positions, max_length is " + std::to_string(max_length));
    }

    AssembledInput in;
    in.claim_length = static_cast<int>(claim_ids.size());
    in.title_length = static_cast<int>(title_ids.size());
    auto push = [&](int id, bool global) {
        in.token_ids.push_back(id);
        in.global_attention_mask.push_back(global ? 1 : 0);
    };

    in.cls_position = 0;
    push(Tokenizer::kCls, true);
    for (int id : claim_ids) {
        push(id, true);
    }
    push(Tokenizer::kSep, true);
    for (int id : title_ids) {
        push(id, false);
    }
    push(Tokenizer::kSep, true);

    for (const auto& sentence : document.sentences) {
        const auto ids = tokenizer.encode(sentence);
        if (in.token_ids.size() + ids.size() + 1 > static_cast<std::size_t>(max_length)) {
            in.truncated = true;
            break;
        }
        for (int id : ids) {
            push(id, false);
        }
        in.sentence_marker_positions.push_back(static_cast<int>(in.token_ids.size()));
        push(Tokenizer::kSep, true);
    }
    return in;
}

ClassificationHeads::Layout ClassificationHeads::declare(ParameterSet& params, int hidden, int head_hidden)
{
    const auto h = static_cast<std::size_t>(hidden);
    const auto hh = static_cast<std::size_t>(head_hidden);
    Layout l;
    l.hidden = hidden;
    l.head_hidden = head_hidden;
    l.label_w1 = params.declare("heads.label.w1", h, hh);
    l.label_b1 = params.declare("heads.label.b1", 1, hh);
    l.label_w2 = params.declare("heads.label.w2", hh, kNumLabels);
    l.label_b2 = params.declare("heads.label.b2", 1, kNumLabels);
    l.rationale_w1 = params.declare("heads.rationale.w1", h, hh);
    l.rationale_b1 = params.declare("heads.rationale.b1", 1, hh);
    l.rationale_w2 = params.declare("heads.rationale.w2", hh, 2);
    l.rationale_b2 = params.declare("heads.rationale.b2", 1, 2);
    return l;
}

namespace {

// tanh(x W1 + b1) W2 + b2 over every row of x
Matrix two_layer(const ParameterSet& p, MatRef x, std::size_t w1, std::size_t b1, std::size_t w2, std::size_t b2,
                 std::size_t hidden, std::size_t head_hidden, std::size_t out)
{
    Matrix mid(x.rows, head_hidden);
    kernels::linear_forward(x, p.matrix(w1, hidden, head_hidden), p.data(b1), mid.mut(), kernels::Exec::Serial);
    for (double& v : mid.values()) {
        v = std::tanh(v);
    }
    Matrix logits(x.rows, out);
    kernels::linear_forward(mid.ref(), p.matrix(w2, head_hidden, out), p.data(b2), logits.mut(),
                            kernels::Exec::Serial);
    return logits;
}

}  // namespace

std::array<double, kNumLabels> ClassificationHeads::label_logits(std::span<const double> cls) const
{
    const auto h = static_cast<std::size_t>(m_layout.hidden);
    auto logits = two_layer(*m_params, MatRef{cls.data(), 1, h}, m_layout.label_w1, m_layout.label_b1,
                            m_layout.label_w2, m_layout.label_b2, h, static_cast<std::size_t>(m_layout.head_hidden),
                            kNumLabels);
    return {logits(0, 0), logits(0, 1), logits(0, 2)};
}

Matrix ClassificationHeads::rationale_logits(MatRef markers) const
{
    return two_layer(*m_params, markers, m_layout.rationale_w1, m_layout.rationale_b1, m_layout.rationale_w2,
                     m_layout.rationale_b2, static_cast<std::size_t>(m_layout.hidden),
                     static_cast<std::size_t>(m_layout.head_hidden), 2);
}

namespace {

template <std::size_t N>
std::array<double, N> softmax(const std::array<double, N>& logits)
{
    const double m = *std::max_element(logits.begin(), logits.end());
    std::array<double, N> out{};
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = std::exp(logits[i] - m);
        total += out[i];
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

}  // namespace

VerifierOutput forward(const Encoder& encoder, const ClassificationHeads& heads, const AssembledInput& input)
{
    const Matrix encoded = encoder.encode(input);
    if (encoded.rows() != input.size()) {
        throw ValidationError("encoder returned " + std::to_string(encoded.rows()) + " rows for " +
                              std::to_string(input.size()) + " input positions");
    }
    if (encoded.cols() != static_cast<std::size_t>(heads.layout().hidden)) {
        throw ValidationError("encoder hidden size does not match the heads");
    }

    VerifierOutput out;
    out.label_probs = softmax(heads.label_logits(encoded.row(static_cast<std::size_t>(input.cls_position))));

    const std::size_t n = input.retained_sentences();
    Matrix markers(n, encoded.cols());
    for (std::size_t i = 0; i < n; ++i) {
        auto src = encoded.row(static_cast<std::size_t>(input.sentence_marker_positions[i]));
        std::copy(src.begin(), src.end(), markers.row(i).begin());
    }
    const Matrix logits = heads.rationale_logits(markers.ref());
    out.rationale_probs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.rationale_probs[i] = softmax(std::array<double, 2>{logits(i, 0), logits(i, 1)})[1];
    }
    return out;
}

namespace {

double neg_log(double p) { return -std::log(std::max(p, std::numeric_limits<double>::min())); }

}  // namespace

double multitask_loss(const VerifierOutput& output, Label gold, const RationaleTargets& rationale,
                      const LossConfig& cfg)
{
    double loss = neg_log(output.label_probs[static_cast<std::size_t>(gold)]);
    if (!rationale || output.rationale_probs.empty()) {
        return loss;
    }
    if (rationale->size() != output.rationale_probs.size()) {
        throw std::invalid_argument("rationale targets do not match the retained sentence count");
    }
    double bce = 0.0;
    for (std::size_t i = 0; i < rationale->size(); ++i) {
        const double p = output.rationale_probs[i];
        bce += (*rationale)[i] != 0 ? neg_log(p) : neg_log(1.0 - p);
    }
    return loss + cfg.lambda_rationale * bce / static_cast<double>(rationale->size());
}

std::vector<std::uint8_t> rationale_targets(std::span<const int> gold_indices, std::size_t retained)
{
    std::vector<std::uint8_t> targets(retained, 0);
    for (int s : gold_indices) {
        if (s >= 0 && static_cast<std::size_t>(s) < retained) {
            targets[static_cast<std::size_t>(s)] = 1;
        }
    }
    return targets;
}

Prediction decode(const VerifierOutput& output, double threshold)
{
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("decode threshold must lie in (0, 1)");
    }
    Prediction p;
    const auto best = std::max_element(output.label_probs.begin(), output.label_probs.end());
    p.label = static_cast<Label>(best - output.label_probs.begin());
    if (p.label == Label::Nei) {
        return p;
    }
    for (std::size_t i = 0; i < output.rationale_probs.size(); ++i) {
        if (output.rationale_probs[i] >= threshold) {
            p.rationale.push_back(static_cast<int>(i));
        }
    }
    if (p.rationale.empty()) {
        p.label = Label::Nei;
    }
    return p;
}

}  // namespace claimcheck
