#pragma once

#include <algorithm>
#include <cstdlib>
#include <string_view>
#include <vector>

#include "claimcheck/toy_model.hpp"
#include "claimcheck/verifier.hpp"

namespace claimcheck::testing {

// Rescans an assembled sequence against the layout grammar; returns the
// number of violations.
inline int grammar_violations(const AssembledInput& in, const Tokenizer& tok, std::string_view claim, const Document& doc)
{
    int bad = 0;
    const auto claim_ids = tok.encode(claim);
    const auto title_ids = tok.encode(doc.title);
    std::size_t pos = 0;
    auto expect = [&](int id) {
        if (pos >= in.token_ids.size() || in.token_ids[pos] != id) {
            ++bad;
        }
        ++pos;
    };
    expect(Tokenizer::kCls);
    for (int id : claim_ids) {
        expect(id);
    }
    expect(Tokenizer::kSep);
    for (int id : title_ids) {
        expect(id);
    }
    expect(Tokenizer::kSep);
    std::vector<int> markers;
    for (std::size_t s = 0; s < in.retained_sentences(); ++s) {
        for (int id : tok.encode(doc.sentences[s])) {
            expect(id);
        }
        markers.push_back(static_cast<int>(pos));
        expect(Tokenizer::kSep);
    }
    if (pos != in.token_ids.size()) {
        ++bad;
    }
    if (markers != in.sentence_marker_positions) {
        ++bad;
    }
    // global count and placement
    std::size_t global = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const bool should = i == 0 || i <= claim_ids.size() || in.token_ids[i] == Tokenizer::kSep;
        if ((in.global_attention_mask[i] != 0) != should) {
            ++bad;
        }
        global += in.global_attention_mask[i];
    }
    if (global != claim_ids.size() + in.retained_sentences() + 3) {
        ++bad;
    }
    if (!std::is_sorted(markers.begin(), markers.end()) ||
        std::adjacent_find(markers.begin(), markers.end()) != markers.end()) {
        ++bad;
    }
    return bad;
}

/// Attention weights that are nonzero where the window/global rule forbids
/// attention, summed over all layers.
inline std::size_t mask_violations(const VerifierModel& model, const AssembledInput& in)
{
    std::size_t bad = 0;
    const auto enc = model.encoder();
    const int window = model.config().encoder.window;
    for (int layer = 0; layer < model.config().encoder.layers; ++layer) {
        const auto att = enc.attention_matrix(in, layer);
        for (std::size_t i = 0; i < in.size(); ++i) {
            for (std::size_t j = 0; j < in.size(); ++j) {
                const bool allowed = in.global_attention_mask[i] || in.global_attention_mask[j] ||
                                     std::abs(static_cast<int>(i) - static_cast<int>(j)) <= window;
                if (!allowed && att(i, j) != 0.0) {
                    ++bad;
                }
            }
        }
    }
    return bad;
}

}  // namespace claimcheck::testing
