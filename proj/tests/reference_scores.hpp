#pragma once

// Published (precision, recall, F1) triples on the percent scale, one row per
// system/setting, columns in kAllVariants order.

#include <array>
#include <string_view>

namespace claimcheck::testing {

struct ScoreTriple {
    double p;
    double r;
    double f1;
};

struct ScoreRow {
    std::string_view name;
    std::array<ScoreTriple, 4> cells;
};

inline constexpr std::array<ScoreRow, 11> kReferenceRows = {{
    // full-data runs
    {"oracle/vert5erini", {{{87.9, 68.6, 77.1}, {79.6, 62.2, 69.8}, {90.7, 74.3, 81.7}, {87.4, 71.6, 78.7}}}},
    {"oracle/paragraphjoint", {{{88.7, 63.8, 74.2}, {76.7, 55.1, 64.1}, {87.2, 64.4, 74.1}, {84.8, 62.6, 72.0}}}},
    {"oracle/full-context", {{{90.1, 78.6, 84.0}, {80.5, 70.3, 75.0}, {87.4, 75.2, 80.9}, {85.9, 73.9, 79.4}}}},
    {"oracle/human", {{{70.7, 70.7, 70.7}, {67.4, 67.4, 67.4}, {94.8, 84.1, 89.1}, {90.3, 80.1, 84.9}}}},
    {"open/vert5erini", {{{63.0, 69.2, 66.0}, {60.6, 66.5, 63.4}, {64.0, 73.0, 68.2}, {62.8, 71.6, 67.0}}}},
    {"open/paragraphjoint", {{{79.9, 63.2, 70.6}, {68.9, 54.6, 60.9}, {75.8, 63.5, 69.1}, {73.7, 61.7, 67.2}}}},
    {"open/full-context", {{{74.5, 74.1, 74.2}, {67.4, 67.0, 67.2}, {73.8, 71.2, 72.5}, {72.4, 69.8, 71.1}}}},
    // zero- and few-shot runs
    {"zero-shot/fever", {{{77.4, 6.5, 12.0}, {74.2, 6.2, 11.5}, {83.9, 11.7, 20.5}, {74.2, 10.4, 18.2}}}},
    {"zero-shot/fever+adapt", {{{81.0, 13.8, 23.6}, {68.2, 11.6, 19.9}, {74.6, 19.8, 31.3}, {69.5, 18.5, 29.2}}}},
    {"few-shot/fever", {{{46.3, 38.9, 42.3}, {44.0, 37.0, 40.2}, {62.3, 53.6, 57.6}, {52.9, 45.5, 48.9}}}},
    {"few-shot/fever+adapt", {{{48.1, 46.8, 47.4}, {44.2, 43.0, 43.6}, {61.5, 61.3, 61.4}, {52.9, 52.7, 52.8}}}},
}};

/// Slack for values that were each rounded to one decimal.
inline constexpr double kRoundingSlack = 0.15;

}  // namespace claimcheck::testing
