#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "claimcheck/toy_model.hpp"
#include "test_support.hpp"

namespace claimcheck::testing {

struct GradientReport {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst_relative = 0.0;
    std::string worst_parameter;
};

inline constexpr double kGradientRelTol = 1e-4;
// gradients this small are indistinguishable from finite-difference noise
inline constexpr double kGradientAbsFloor = 1e-9;

inline std::string parameter_name(const ParameterSet& params, std::size_t index)
{
    for (const auto& t : params.tensors()) {
        if (index >= t.offset && index < t.offset + t.size()) {
            return t.name + "[" + std::to_string(index - t.offset) + "]";
        }
    }
    return "?";
}

/// For every parameter of a tiny toy model, compares the analytic gradient of
/// the multitask loss with a central difference of forward() + multitask_loss().
inline GradientReport run_gradient_check(int instances, std::uint64_t seed)
{
    GradientReport report;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> label_pick(0, 2);
    std::uniform_real_distribution<double> lambda_pick(0.5, 20.0);
    std::bernoulli_distribution coin(0.4);
    constexpr double step = 1e-5;

    for (int inst = 0; inst < instances; ++inst) {
        VerifierModel model(tiny_config(seed * 1000 + static_cast<std::uint64_t>(inst)));
        const auto doc = random_document(rng, inst, 5, 5);
        const auto claim = random_words(rng, 1, 5);
        const auto input = model.assemble(claim, doc);
        const auto gold = static_cast<Label>(label_pick(rng));
        std::vector<std::uint8_t> flags(input.retained_sentences());
        for (auto& f : flags) {
            f = coin(rng) ? 1 : 0;
        }
        const RationaleTargets targets = flags;
        const double lambda = lambda_pick(rng);

        std::vector<double> grad(model.parameters().size(), 0.0);
        model.loss_and_gradient(input, gold, targets, lambda, grad);

        auto loss_at = [&]() {
            return multitask_loss(model.forward(input), gold, targets, LossConfig{lambda});
        };
        auto values = model.parameters().values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = loss_at();
            values[i] = saved - step;
            const double down = loss_at();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = grad[i];
            const double diff = std::abs(numeric - analytic);
            const double scale = std::max(std::abs(numeric), std::abs(analytic));
            ++report.checked;
            if (diff <= kGradientAbsFloor) {
                continue;
            }
            const double rel = diff / scale;
            if (rel > report.worst_relative) {
                report.worst_relative = rel;
                report.worst_parameter = parameter_name(model.parameters(), i);
            }
            if (rel > kGradientRelTol) {
                ++report.failures;
            }
        }
    }
    return report;
}

}  // namespace claimcheck::testing
