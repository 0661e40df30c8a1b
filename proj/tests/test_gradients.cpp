// Central finite differences against the hand-written backward pass.

#include <cmath>
#include <random>

#include "doctest.h"

#include "claimcheck/toy_model.hpp"
#include "gradient_check.hpp"
#include "test_support.hpp"

using namespace claimcheck;

TEST_CASE("analytic gradients match central differences on random small instances")
{
    const auto report = testing::run_gradient_check(/*instances=*/10, /*seed=*/101);
    INFO("worst relative error " << report.worst_relative << " at " << report.worst_parameter);
    CHECK(report.failures == 0);
    CHECK(report.checked > 0);
}

TEST_CASE("rationale-head gradient is exactly zero without rationale targets")
{
    std::mt19937_64 rng(5);
    for (double lambda : {0.0, 1.0, 15.0, 1000.0}) {
        VerifierModel model(testing::tiny_config(19));
        const auto doc = testing::random_document(rng, 1);
        const auto in = model.assemble(testing::random_words(rng, 1, 4), doc);
        std::vector<double> grad(model.parameters().size(), 0.0);
        model.loss_and_gradient(in, Label::Supports, std::nullopt, lambda, grad);
        const auto [begin, end] = model.rationale_head_range();
        for (std::size_t i = begin; i < end; ++i) {
            REQUIRE(grad[i] == 0.0);
        }
        // the label path still trains the encoder
        double norm = 0.0;
        for (std::size_t i = 0; i < begin; ++i) {
            norm += std::abs(grad[i]);
        }
        CHECK(norm > 0.0);
    }
}
