#pragma once

#include <sstream>
#include <string>
#include <vector>

namespace claimcheck::testing {

inline std::vector<std::string> split_words(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

/// True when a and b have the same word count and differ at exactly one
/// position, where one side says "increases" and the other "decreases".
inline bool differ_by_one_verb(const std::string& a, const std::string& b)
{
    const auto wa = split_words(a);
    const auto wb = split_words(b);
    if (wa.size() != wb.size()) {
        return false;
    }
    int diffs = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        if (wa[i] != wb[i]) {
            ++diffs;
            const bool verbs = (wa[i] == "increases" && wb[i] == "decreases") ||
                               (wa[i] == "decreases" && wb[i] == "increases");
            if (!verbs) {
                return false;
            }
        }
    }
    return diffs == 1;
}

}  // namespace claimcheck::testing
