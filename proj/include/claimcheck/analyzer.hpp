#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace claimcheck {

/// Tag persisted with every index; bump when tokenization changes.
inline constexpr std::string_view kAnalyzerVersion = "lower-alnum-v1";

/// Lowercases ASCII and splits on every byte that is not an ASCII letter or
/// digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
/// No stemming, no stopwords.
std::vector<std::string> analyze(std::string_view text);

}  // namespace claimcheck
