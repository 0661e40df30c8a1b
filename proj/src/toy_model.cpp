#include "claimcheck/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "claimcheck/errors.hpp"

namespace claimcheck {

using kernels::Exec;

namespace {

constexpr double kLayerNormEps = 1e-5;

void layer_norm_forward(MatRef x, const double* gain, const double* bias, ToyEncoder::LayerNormCache& cache,
                        MutMatRef y)
{
    const std::size_t n = x.rows;
    const std::size_t h = x.cols;
    cache.normalized = Matrix(n, h);
    cache.inv_std.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* in = x.row(i);
        double mean = 0.0;
        for (std::size_t c = 0; c < h; ++c) {
            mean += in[c];
        }
        mean /= static_cast<double>(h);
        double var = 0.0;
        for (std::size_t c = 0; c < h; ++c) {
            const double d = in[c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(h);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.inv_std[i] = inv;
        auto norm = cache.normalized.row(i);
        double* out = y.row(i);
        for (std::size_t c = 0; c < h; ++c) {
            norm[c] = (in[c] - mean) * inv;
            out[c] = gain[c] * norm[c] + bias[c];
        }
    }
}

// dx += d(layer_norm)/dx applied to dy
void layer_norm_backward(const ToyEncoder::LayerNormCache& cache, const double* gain, MatRef dy, MutMatRef dx,
                         double* dgain, double* dbias)
{
    const std::size_t n = dy.rows;
    const std::size_t h = dy.cols;
    std::vector<double> dnorm(h);
    for (std::size_t i = 0; i < n; ++i) {
        const double* g = dy.row(i);
        auto norm = cache.normalized.row(i);
        double mean_d = 0.0;
        double mean_dn = 0.0;
        for (std::size_t c = 0; c < h; ++c) {
            dgain[c] += g[c] * norm[c];
            dbias[c] += g[c];
            dnorm[c] = g[c] * gain[c];
            mean_d += dnorm[c];
            mean_dn += dnorm[c] * norm[c];
        }
        mean_d /= static_cast<double>(h);
        mean_dn /= static_cast<double>(h);
        double* out = dx.row(i);
        for (std::size_t c = 0; c < h; ++c) {
            out[c] += cache.inv_std[i] * (dnorm[c] - mean_d - norm[c] * mean_dn);
        }
    }
}

}  // namespace

void ModelConfig::validate() const
{
    encoder.validate();
    if (head_hidden <= 0) {
        throw ValidationError("head_hidden must be positive");
    }
}

ToyEncoder::Layout ToyEncoder::declare(ParameterSet& params, const EncoderSpec& spec)
{
    const auto h = static_cast<std::size_t>(spec.hidden);
    const auto f = static_cast<std::size_t>(spec.ffn);
    Layout l;
    l.token_embedding = params.declare("encoder.embed.token", static_cast<std::size_t>(spec.vocab_size), h);
    l.position_embedding = params.declare("encoder.embed.position", static_cast<std::size_t>(spec.max_length), h);
    for (int i = 0; i < spec.layers; ++i) {
        const std::string p = "encoder.layer" + std::to_string(i) + ".";
        LayerLayout ll{};
        ll.ln1_gain = params.declare(p + "ln1.gain", 1, h);
        ll.ln1_bias = params.declare(p + "ln1.bias", 1, h);
        ll.wq = params.declare(p + "attn.wq", h, h);
        ll.bq = params.declare(p + "attn.bq", 1, h);
        ll.wk = params.declare(p + "attn.wk", h, h);
        ll.bk = params.declare(p + "attn.bk", 1, h);
        ll.wv = params.declare(p + "attn.wv", h, h);
        ll.bv = params.declare(p + "attn.bv", 1, h);
        ll.wo = params.declare(p + "attn.wo", h, h);
        ll.bo = params.declare(p + "attn.bo", 1, h);
        ll.rel_bias = params.declare(p + "attn.relative_bias", 1, static_cast<std::size_t>(2 * spec.relative_radius + 1));
        ll.ln2_gain = params.declare(p + "ln2.gain", 1, h);
        ll.ln2_bias = params.declare(p + "ln2.bias", 1, h);
        ll.w1 = params.declare(p + "ffn.w1", h, f);
        ll.b1 = params.declare(p + "ffn.b1", 1, f);
        ll.w2 = params.declare(p + "ffn.w2", f, h);
        ll.b2 = params.declare(p + "ffn.b2", 1, h);
        l.layers.push_back(ll);
    }
    l.final_gain = params.declare("encoder.final_ln.gain", 1, h);
    l.final_bias = params.declare("encoder.final_ln.bias", 1, h);
    return l;
}

ToyEncoder::ToyEncoder(const EncoderSpec& spec, const ParameterSet& params, Layout layout)
    : m_spec(spec), m_params(&params), m_layout(std::move(layout))
{}

Matrix ToyEncoder::encode(const AssembledInput& input) const { return encode_traced(input).output; }

ToyEncoder::Trace ToyEncoder::encode_traced(const AssembledInput& input, Exec exec) const
{
    const std::size_t n = input.size();
    const auto h = static_cast<std::size_t>(m_spec.hidden);
    const auto f = static_cast<std::size_t>(m_spec.ffn);
    if (n > static_cast<std::size_t>(m_spec.max_length)) {
        throw ValidationError("input of " + std::to_string(n) + " positions exceeds max_length " +
                              std::to_string(m_spec.max_length));
    }
    if (input.global_attention_mask.size() != n) {
        throw ValidationError("global attention mask length does not match the input");
    }
    const ParameterSet& p = *m_params;

    Trace tr;
    tr.tokens = input.token_ids;
    tr.pattern = kernels::windowed_pattern(input.global_attention_mask, m_spec.window);

    Matrix x(n, h);
    for (std::size_t t = 0; t < n; ++t) {
        const int id = input.token_ids[t];
        if (id < 0 || id >= m_spec.vocab_size) {
            throw ValidationError("token id " + std::to_string(id) + " outside the vocabulary");
        }
        const double* te = p.data(m_layout.token_embedding + static_cast<std::size_t>(id) * h);
        const double* pe = p.data(m_layout.position_embedding + t * h);
        auto row = x.row(t);
        for (std::size_t c = 0; c < h; ++c) {
            row[c] = te[c] + pe[c];
        }
    }

    tr.layers.reserve(m_layout.layers.size());
    for (const auto& L : m_layout.layers) {
        LayerTrace lt;
        lt.input = x;
        lt.attn_in = Matrix(n, h);
        layer_norm_forward(x.ref(), p.data(L.ln1_gain), p.data(L.ln1_bias), lt.ln1, lt.attn_in.mut());
        lt.q = Matrix(n, h);
        lt.k = Matrix(n, h);
        lt.v = Matrix(n, h);
        kernels::linear_forward(lt.attn_in.ref(), p.matrix(L.wq, h, h), p.data(L.bq), lt.q.mut(), exec);
        kernels::linear_forward(lt.attn_in.ref(), p.matrix(L.wk, h, h), p.data(L.bk), lt.k.mut(), exec);
        kernels::linear_forward(lt.attn_in.ref(), p.matrix(L.wv, h, h), p.data(L.bv), lt.v.mut(), exec);
        lt.ctx = Matrix(n, h);
        const std::span<const double> rel(p.data(L.rel_bias), static_cast<std::size_t>(2 * m_spec.relative_radius + 1));
        kernels::attention_forward(lt.q.ref(), lt.k.ref(), lt.v.ref(), tr.pattern, rel, m_spec.relative_radius,
                                   lt.weights, lt.ctx.mut(), exec);
        Matrix attn_out(n, h);
        kernels::linear_forward(lt.ctx.ref(), p.matrix(L.wo, h, h), p.data(L.bo), attn_out.mut(), exec);
        lt.mid = x;
        for (std::size_t i = 0; i < n * h; ++i) {
            lt.mid.values()[i] += attn_out.values()[i];
        }

        lt.ffn_in = Matrix(n, h);
        layer_norm_forward(lt.mid.ref(), p.data(L.ln2_gain), p.data(L.ln2_bias), lt.ln2, lt.ffn_in.mut());
        lt.ffn_act = Matrix(n, f);
        kernels::linear_forward(lt.ffn_in.ref(), p.matrix(L.w1, h, f), p.data(L.b1), lt.ffn_act.mut(), exec);
        for (double& v : lt.ffn_act.values()) {
            v = std::tanh(v);
        }
        Matrix ffn_out(n, h);
        kernels::linear_forward(lt.ffn_act.ref(), p.matrix(L.w2, f, h), p.data(L.b2), ffn_out.mut(), exec);
        x = lt.mid;
        for (std::size_t i = 0; i < n * h; ++i) {
            x.values()[i] += ffn_out.values()[i];
        }
        tr.layers.push_back(std::move(lt));
    }

    tr.output = Matrix(n, h);
    layer_norm_forward(x.ref(), p.data(m_layout.final_gain), p.data(m_layout.final_bias), tr.final_ln,
                       tr.output.mut());
    return tr;
}

void ToyEncoder::backward(const Trace& tr, MatRef d_output, std::span<double> grad) const
{
    const std::size_t n = tr.tokens.size();
    const auto h = static_cast<std::size_t>(m_spec.hidden);
    const auto f = static_cast<std::size_t>(m_spec.ffn);
    const ParameterSet& p = *m_params;
    constexpr Exec serial = Exec::Serial;

    Matrix dx(n, h);
    layer_norm_backward(tr.final_ln, p.data(m_layout.final_gain), d_output, dx.mut(), grad.data() + m_layout.final_gain,
                        grad.data() + m_layout.final_bias);

    for (std::size_t li = m_layout.layers.size(); li-- > 0;) {
        const auto& L = m_layout.layers[li];
        const auto& lt = tr.layers[li];

        // x_out = mid + W2 tanh(W1 LN2(mid) + b1) + b2
        Matrix d_act(n, f);
        kernels::linear_backward(lt.ffn_act.ref(), p.matrix(L.w2, f, h), dx.ref(), d_act.mut(), grad.data() + L.w2,
                                 grad.data() + L.b2, serial);
        for (std::size_t i = 0; i < n * f; ++i) {
            const double a = lt.ffn_act.values()[i];
            d_act.values()[i] *= 1.0 - a * a;
        }
        Matrix d_ffn_in(n, h);
        kernels::linear_backward(lt.ffn_in.ref(), p.matrix(L.w1, h, f), d_act.ref(), d_ffn_in.mut(),
                                 grad.data() + L.w1, grad.data() + L.b1, serial);
        Matrix d_mid = dx;
        layer_norm_backward(lt.ln2, p.data(L.ln2_gain), d_ffn_in.ref(), d_mid.mut(), grad.data() + L.ln2_gain,
                            grad.data() + L.ln2_bias);

        // mid = input + Wo attn(LN1(input)) + bo
        Matrix d_ctx(n, h);
        kernels::linear_backward(lt.ctx.ref(), p.matrix(L.wo, h, h), d_mid.ref(), d_ctx.mut(), grad.data() + L.wo,
                                 grad.data() + L.bo, serial);
        Matrix dq(n, h);
        Matrix dk(n, h);
        Matrix dv(n, h);
        std::span<double> drel(grad.data() + L.rel_bias, static_cast<std::size_t>(2 * m_spec.relative_radius + 1));
        kernels::attention_backward(lt.q.ref(), lt.k.ref(), lt.v.ref(), tr.pattern, lt.weights,
                                    m_spec.relative_radius, d_ctx.ref(), dq.mut(), dk.mut(), dv.mut(), drel);
        Matrix d_attn_in(n, h);
        kernels::linear_backward(lt.attn_in.ref(), p.matrix(L.wq, h, h), dq.ref(), d_attn_in.mut(), grad.data() + L.wq,
                                 grad.data() + L.bq, serial);
        kernels::linear_backward(lt.attn_in.ref(), p.matrix(L.wk, h, h), dk.ref(), d_attn_in.mut(), grad.data() + L.wk,
                                 grad.data() + L.bk, serial);
        kernels::linear_backward(lt.attn_in.ref(), p.matrix(L.wv, h, h), dv.ref(), d_attn_in.mut(), grad.data() + L.wv,
                                 grad.data() + L.bv, serial);
        dx = d_mid;
        layer_norm_backward(lt.ln1, p.data(L.ln1_gain), d_attn_in.ref(), dx.mut(), grad.data() + L.ln1_gain,
                            grad.data() + L.ln1_bias);
    }

    for (std::size_t t = 0; t < n; ++t) {
        double* te = grad.data() + m_layout.token_embedding + static_cast<std::size_t>(tr.tokens[t]) * h;
        double* pe = grad.data() + m_layout.position_embedding + t * h;
        auto row = dx.row(t);
        for (std::size_t c = 0; c < h; ++c) {
            te[c] += row[c];
            pe[c] += row[c];
        }
    }
}

Matrix ToyEncoder::attention_matrix(const AssembledInput& input, int layer) const
{
    const auto tr = encode_traced(input, Exec::Serial);
    const auto& lt = tr.layers.at(static_cast<std::size_t>(layer));
    Matrix dense(input.size(), input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const auto& allowed = tr.pattern.allowed[i];
        for (std::size_t a = 0; a < allowed.size(); ++a) {
            dense(i, static_cast<std::size_t>(allowed[a])) = lt.weights[i][a];
        }
    }
    return dense;
}

void VerifierModel::declare_layout()
{
    m_encoder_layout = ToyEncoder::declare(m_params, m_config.encoder);
    m_head_layout = ClassificationHeads::declare(m_params, m_config.encoder.hidden, m_config.head_hidden);
}

VerifierModel::VerifierModel(const ModelConfig& config)
    : m_config(config), m_tokenizer((config.validate(), config.encoder.vocab_size))
{
    declare_layout();

    std::mt19937_64 rng(m_config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](const TensorInfo& t, double stddev) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            m_params.values()[t.offset + i] = stddev * normal(rng);
        }
    };
    auto constant = [&](const TensorInfo& t, double v) {
        std::fill_n(m_params.values().begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(), v);
    };
    // declaration order fixes the random stream, so initialization is a pure function of the seed
    for (const auto& t : m_params.tensors()) {
        const auto ends_with = [&](std::string_view s) {
            return t.name.size() >= s.size() && t.name.compare(t.name.size() - s.size(), s.size(), s) == 0;
        };
        const double fan_in = static_cast<double>(t.rows);
        if (t.name == "encoder.embed.token") {
            fill(t, 1.0);
        } else if (t.name == "encoder.embed.position") {
            fill(t, 0.1);
        } else if (ends_with(".gain")) {
            constant(t, 1.0);
        } else if (ends_with("relative_bias") || t.rows == 1) {
            constant(t, 0.0);
        } else if (ends_with("attn.wo") || ends_with("ffn.w2")) {
            fill(t, 0.5 / std::sqrt(fan_in));
        } else {
            fill(t, 1.0 / std::sqrt(fan_in));
        }
    }
}

VerifierModel::VerifierModel(const ModelConfig& config, std::span<const double> values)
    : m_config(config), m_tokenizer((config.validate(), config.encoder.vocab_size))
{
    declare_layout();
    if (values.size() != m_params.size()) {
        throw ValidationError("parameter count " + std::to_string(values.size()) + " does not match the model (" +
                              std::to_string(m_params.size()) + ")");
    }
    std::copy(values.begin(), values.end(), m_params.values().begin());
}

AssembledInput VerifierModel::assemble(std::string_view claim, const Document& document) const
{
    return assemble_input(claim, document, m_tokenizer, m_config.encoder.max_length);
}

VerifierOutput VerifierModel::forward(const AssembledInput& input) const
{
    return claimcheck::forward(encoder(), heads(), input);
}

std::pair<std::size_t, std::size_t> VerifierModel::rationale_head_range() const
{
    const auto& last = m_params.info("heads.rationale.b2");
    return {m_head_layout.rationale_w1, last.offset + last.size()};
}

double VerifierModel::loss_and_gradient(const AssembledInput& input, Label gold, const RationaleTargets& rationale,
                                        double lambda_rationale, std::span<double> grad, Exec exec) const
{
    if (grad.size() != m_params.size()) {
        throw std::invalid_argument("gradient buffer does not match the parameter count");
    }
    const auto enc = encoder();
    const auto tr = enc.encode_traced(input, exec);
    const auto h = static_cast<std::size_t>(m_config.encoder.hidden);
    const auto hh = static_cast<std::size_t>(m_config.head_hidden);
    const auto& HL = m_head_layout;
    Matrix d_out(input.size(), h);

    // label head on CLS
    const auto cls = static_cast<std::size_t>(input.cls_position);
    const MatRef cls_row{tr.output.row(cls).data(), 1, h};
    Matrix label_mid(1, hh);
    kernels::linear_forward(cls_row, m_params.matrix(HL.label_w1, h, hh), m_params.data(HL.label_b1), label_mid.mut(),
                            kernels::Exec::Serial);
    for (double& v : label_mid.values()) {
        v = std::tanh(v);
    }
    Matrix label_logits(1, kNumLabels);
    kernels::linear_forward(label_mid.ref(), m_params.matrix(HL.label_w2, hh, kNumLabels), m_params.data(HL.label_b2),
                            label_logits.mut(), kernels::Exec::Serial);
    const double lmax = *std::max_element(label_logits.values().begin(), label_logits.values().end());
    double lsum = 0.0;
    for (double v : label_logits.values()) {
        lsum += std::exp(v - lmax);
    }
    const double log_z = lmax + std::log(lsum);
    const auto gold_idx = static_cast<std::size_t>(gold);
    double loss = log_z - label_logits(0, gold_idx);

    Matrix d_label_logits(1, kNumLabels);
    for (std::size_t c = 0; c < kNumLabels; ++c) {
        d_label_logits(0, c) = std::exp(label_logits(0, c) - log_z) - (c == gold_idx ? 1.0 : 0.0);
    }
    Matrix d_label_mid(1, hh);
    kernels::linear_backward(label_mid.ref(), m_params.matrix(HL.label_w2, hh, kNumLabels), d_label_logits.ref(),
                             d_label_mid.mut(), grad.data() + HL.label_w2, grad.data() + HL.label_b2,
                             kernels::Exec::Serial);
    for (std::size_t c = 0; c < hh; ++c) {
        const double a = label_mid(0, c);
        d_label_mid(0, c) *= 1.0 - a * a;
    }
    kernels::linear_backward(cls_row, m_params.matrix(HL.label_w1, h, hh), d_label_mid.ref(),
                             MutMatRef{d_out.row(cls).data(), 1, h}, grad.data() + HL.label_w1,
                             grad.data() + HL.label_b1, kernels::Exec::Serial);

    // rationale head on each sentence separator
    const std::size_t n = input.retained_sentences();
    if (rationale && n > 0) {
        if (rationale->size() != n) {
            throw std::invalid_argument("rationale targets do not match the retained sentence count");
        }
        Matrix markers(n, h);
        for (std::size_t i = 0; i < n; ++i) {
            auto src = tr.output.row(static_cast<std::size_t>(input.sentence_marker_positions[i]));
            std::copy(src.begin(), src.end(), markers.row(i).begin());
        }
        Matrix mid(n, hh);
        kernels::linear_forward(markers.ref(), m_params.matrix(HL.rationale_w1, h, hh), m_params.data(HL.rationale_b1),
                                mid.mut(), kernels::Exec::Serial);
        for (double& v : mid.values()) {
            v = std::tanh(v);
        }
        Matrix logits(n, 2);
        kernels::linear_forward(mid.ref(), m_params.matrix(HL.rationale_w2, hh, 2), m_params.data(HL.rationale_b2),
                                logits.mut(), kernels::Exec::Serial);
        const double scale = lambda_rationale / static_cast<double>(n);
        Matrix d_logits(n, 2);
        double bce = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = std::max(logits(i, 0), logits(i, 1));
            const double lz = m + std::log(std::exp(logits(i, 0) - m) + std::exp(logits(i, 1) - m));
            const std::size_t y = (*rationale)[i] != 0 ? 1 : 0;
            bce += lz - logits(i, y);
            for (std::size_t c = 0; c < 2; ++c) {
                d_logits(i, c) = scale * (std::exp(logits(i, c) - lz) - (c == y ? 1.0 : 0.0));
            }
        }
        loss += scale * bce;

        Matrix d_mid(n, hh);
        kernels::linear_backward(mid.ref(), m_params.matrix(HL.rationale_w2, hh, 2), d_logits.ref(), d_mid.mut(),
                                 grad.data() + HL.rationale_w2, grad.data() + HL.rationale_b2, kernels::Exec::Serial);
        for (std::size_t i = 0; i < n * hh; ++i) {
            const double a = mid.values()[i];
            d_mid.values()[i] *= 1.0 - a * a;
        }
        Matrix d_markers(n, h);
        kernels::linear_backward(markers.ref(), m_params.matrix(HL.rationale_w1, h, hh), d_mid.ref(), d_markers.mut(),
                                 grad.data() + HL.rationale_w1, grad.data() + HL.rationale_b1, kernels::Exec::Serial);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = d_out.row(static_cast<std::size_t>(input.sentence_marker_positions[i]));
            auto src = d_markers.row(i);
            for (std::size_t c = 0; c < h; ++c) {
                dst[c] += src[c];
            }
        }
    }

    enc.backward(tr, d_out.ref(), grad);
    return loss;
}

}  // namespace claimcheck
