#include <doctest.h>

#include <cmath>
#include <vector>

#include "hadam/optim.hpp"
#include "hadam/rng.hpp"

using namespace hadam;

namespace {

HAdamConfig config(int k, double eps = 0.0)
{
    HAdamConfig c;
    c.order = k;
    c.epsilon = eps;
    return c;
}

std::vector<double> random_grad(Rng& rng, std::size_t dim, double scale = 1.0)
{
    std::vector<double> g(dim);
    for (double& v : g) v = scale * rng.normal();
    return g;
}

} // namespace

TEST_CASE("HAdamConfig validation")
{
    CHECK_NOTHROW(HAdamConfig{}.validate());
    auto bad = [](auto mutate) {
        HAdamConfig c;
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(bad([](HAdamConfig& c) { c.order = 1; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](HAdamConfig& c) { c.alpha = 0.0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](HAdamConfig& c) { c.beta1 = 1.0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](HAdamConfig& c) { c.beta2 = -0.1; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(bad([](HAdamConfig& c) { c.epsilon = -1e-8; }).validate(), std::invalid_argument);
    CHECK(bad([](HAdamConfig& c) { c.order = 3; }).odd_order_warning());
    CHECK_FALSE(HAdamConfig{}.odd_order_warning());
}

TEST_CASE("init_state")
{
    const auto s = init_state(2, {1.0, 1.0});
    CHECK(s.m == std::vector<double>{0.0, 0.0});
    CHECK(s.v == std::vector<double>{0.0, 0.0});
    CHECK(s.x == std::vector<double>{1.0, 1.0});
    CHECK(s.t == 0);
    CHECK(init_state(1, {0.0}).dim() == 1);
    CHECK(init_state(1'000'000, std::vector<double>(1'000'000, 0.0)).v.size() == 1'000'000);
    CHECK_THROWS_AS(init_state(3, {1.0}), std::domain_error);
}

TEST_CASE("first step has magnitude alpha")
{
    auto s = init_state(1, {0.0});
    const double g[] = {2.0};
    const auto d = hadam_step(s, g, config(4));
    CHECK(d.delta[0] == doctest::Approx(-0.001).epsilon(1e-14));
    CHECK(d.max_abs_delta == doctest::Approx(0.001).epsilon(1e-14));
    CHECK_FALSE(d.diverged);
    CHECK(s.t == 1);

    auto r = init_state(1, {0.0});
    CHECK(adam_reference_step(r, g, config(2)).delta[0] == doctest::Approx(-0.001).epsilon(1e-14));
}

TEST_CASE("negative gradient at odd order diverges through the naive root")
{
    auto s = init_state(1, {0.0});
    const double g[] = {-3.0};
    const auto d = hadam_step(s, g, config(3, 1e-8));
    CHECK(s.v[0] == doctest::Approx((1 - 0.999) * -27.0));
    CHECK(d.diverged);
    CHECK(d.nan_components == 1);
    CHECK(std::isnan(d.max_abs_delta));
    CHECK(std::isnan(s.x[0]));

    // Same stream with the signed root stays finite.
    HAdamConfig signed_cfg = config(3, 1e-8);
    signed_cfg.root_policy = RootPolicy::signed_;
    auto t = init_state(1, {0.0});
    CHECK_FALSE(hadam_step(t, g, signed_cfg).diverged);
}

TEST_CASE("hand-computed three-step Adam trace")
{
    // g = 1, 1, 1; alpha = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    const double expected_m[] = {0.09999999999999998, 0.18999999999999995, 0.2709999999999999};
    const double expected_v[] = {0.0010000000000000009, 0.0019990000000000016, 0.0029970010000000026};
    const double expected_x[] = {-0.000999999683772334, -0.0019999994601096567, -0.0029999992774441785};
    auto s = init_state(1, {0.0});
    const double g[] = {1.0};
    for (int t = 0; t < 3; ++t) {
        adam_reference_step(s, g, config(2, 1e-8));
        CHECK(s.m[0] == doctest::Approx(expected_m[t]).epsilon(1e-15));
        CHECK(s.v[0] == doctest::Approx(expected_v[t]).epsilon(1e-15));
        CHECK(s.x[0] == doctest::Approx(expected_x[t]).epsilon(1e-13));
    }
}

TEST_CASE("zero gradient is a fixed point when eps > 0")
{
    auto s = init_state(3, {0.5, -1.0, 2.0});
    const std::vector<double> zero(3, 0.0);
    for (int t = 0; t < 50; ++t) {
        adam_reference_step(s, zero, config(2, 1e-8));
        hadam_step(s, zero, config(2, 1e-8));
    }
    CHECK(s.x == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("order 2 matches reference Adam on random gradient streams")
{
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        HAdamConfig c = config(2, trial % 2 ? 1e-8 : 0.0);
        c.beta1 = rng.uniform(0.0, 0.99);
        c.beta2 = rng.uniform(0.9, 0.9999);
        c.alpha = rng.uniform(1e-4, 1e-1);
        const std::size_t dim = 1 + rng.below(8);
        std::vector<double> x0(dim);
        for (double& v : x0) v = rng.normal();
        auto a = init_state(dim, x0);
        auto b = init_state(dim, x0);
        const std::size_t steps = 1 + rng.below(1000);
        double gap = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            const auto g = random_grad(rng, dim, std::exp(rng.uniform(-3, 3)));
            hadam_step(a, g, c);
            adam_reference_step(b, g, c);
            for (std::size_t i = 0; i < dim; ++i) gap = std::max(gap, std::abs(a.x[i] - b.x[i]));
        }
        CHECK(gap <= 1e-12);
    }
}

TEST_CASE("reference Adam refuses other orders and explicit bias mode")
{
    auto s = init_state(1, {0.0});
    const double g[] = {1.0};
    CHECK_THROWS_AS(adam_reference_step(s, g, config(4)), std::invalid_argument);
    HAdamConfig c = config(2);
    c.bias_mode = BiasMode::explicit_;
    CHECK_THROWS_AS(adam_reference_step(s, g, c), std::invalid_argument);
}

TEST_CASE("gradient dimension mismatch is rejected")
{
    auto s = init_state(2, {0.0, 0.0});
    const double g[] = {1.0};
    CHECK_THROWS_AS(hadam_step(s, g, config(2)), std::invalid_argument);
}

TEST_CASE("constant gradient step law: |delta| = alpha for even k")
{
    for (int k : {2, 4, 6, 8}) {
        for (double g0 : {-5.0, 0.3, 1.0}) {
            auto s = init_state(1, {0.0});
            const double g[] = {g0};
            for (int t = 1; t <= 100; ++t) {
                const auto d = hadam_step(s, g, config(k));
                CHECK(std::abs(d.max_abs_delta - 0.001) <= 1e-12);
            }
        }
    }
}

TEST_CASE("step is scale invariant under constant gradients")
{
    for (int k : {2, 4, 8}) {
        for (double c : {0.01, 3.0, 50.0}) {
            auto a = init_state(2, {0.0, 0.0});
            auto b = init_state(2, {0.0, 0.0});
            const double g[] = {0.7, -1.3};
            const double gc[] = {0.7 * c, -1.3 * c};
            for (int t = 0; t < 40; ++t) {
                const auto da = hadam_step(a, g, config(k));
                const auto db = hadam_step(b, gc, config(k));
                for (int i = 0; i < 2; ++i) {
                    CHECK(db.delta[i] == doctest::Approx(da.delta[i]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("explicit and folded modes agree at eps = 0 and differ at eps > 0")
{
    Rng rng(5);
    HAdamConfig folded = config(4);
    HAdamConfig expl = folded;
    expl.bias_mode = BiasMode::explicit_;
    auto a = init_state(3, {0, 0, 0});
    auto b = init_state(3, {0, 0, 0});
    for (int t = 0; t < 100; ++t) {
        const auto g = random_grad(rng, 3);
        hadam_step(a, g, folded);
        hadam_step(b, g, expl);
    }
    for (int i = 0; i < 3; ++i) CHECK(a.x[i] == doctest::Approx(b.x[i]).epsilon(1e-12));

    folded.epsilon = expl.epsilon = 0.1;
    auto c = init_state(1, {0});
    auto d = init_state(1, {0});
    const double g[] = {0.5};
    hadam_step(c, g, folded);
    hadam_step(d, g, expl);
    CHECK(c.x[0] != doctest::Approx(d.x[0]).epsilon(1e-6));
}

TEST_CASE("even orders keep V nonnegative for any gradient stream")
{
    Rng rng(31);
    for (int k : {2, 4, 6, 8}) {
        auto s = init_state(5, std::vector<double>(5, 0.0));
        for (int t = 0; t < 300; ++t) {
            const auto g = random_grad(rng, 5, 3.0);
            const auto d = hadam_step(s, g, config(k, 1e-8));
            CHECK_FALSE(d.diverged);
            for (double v : s.v) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("odd order: NaN from the first step where the g^3 average turns negative, forever after")
{
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        HAdamConfig c = config(3, 1e-8);
        c.beta2 = 0.9;
        auto s = init_state(1, {0.0});
        EmaAccumulator cube{0.0, c.beta2, 0};
        bool negative_seen = false;
        for (int t = 0; t < 200; ++t) {
            // Mostly positive gradients with occasional large negative ones.
            const double g = rng.uniform() < 0.9 ? rng.uniform(0.1, 1.0) : -rng.uniform(1.0, 4.0);
            cube = ema_update(cube, g * g * g);
            negative_seen = negative_seen || cube.value < 0.0;
            const auto d = hadam_step(s, std::span<const double>(&g, 1), c);
            CHECK(d.diverged == negative_seen);
        }
    }
}

TEST_CASE("overflowing g^k is reported as divergence")
{
    auto s = init_state(1, {0.0});
    const double g[] = {1e50};
    const auto d = hadam_step(s, g, config(8, 1e-8));
    CHECK(std::isinf(s.v[0]));
    CHECK(d.diverged);
}

TEST_CASE("state_metric_estimate")
{
    auto s = init_state(2, {0.0, 0.0});
    CHECK(std::isnan(state_metric_estimate(s, config(4))));
    const double g[] = {2.0, 0.0};
    hadam_step(s, g, config(4));
    // Constant-sign first step: |m_hat| / root(V_hat) = 1; the zero component is skipped.
    CHECK(state_metric_estimate(s, config(4)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("effective_step_bound_check")
{
    // Constant gradient, even order, eps = 0: ratio 1 at every step.
    HAdamConfig c = config(6);
    auto s = init_state(1, {0.0});
    const double g[] = {0.4};
    std::vector<StepDiagnostics> trace;
    for (int t = 0; t < 50; ++t) trace.push_back(hadam_step(s, g, c));
    auto report = effective_step_bound_check(trace, c);
    CHECK(report.max_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(report.first_exceedance);

    // Zero gradients: ratio 0.
    HAdamConfig e = config(2, 1e-8);
    auto z = init_state(1, {0.0});
    const double zero[] = {0.0};
    std::vector<StepDiagnostics> flat{hadam_step(z, zero, e), hadam_step(z, zero, e)};
    CHECK(effective_step_bound_check(flat, e).max_ratio == 0.0);

    // Signed odd root on a stream that flips sign: steps well beyond alpha.
    HAdamConfig odd = config(3, 1e-8);
    odd.root_policy = RootPolicy::signed_;
    auto o = init_state(1, {0.0});
    std::vector<StepDiagnostics> skew;
    for (int t = 0; t < 60; ++t) {
        const double gt = t < 30 ? 1.0 : -1.05;
        skew.push_back(hadam_step(o, std::span<const double>(&gt, 1), odd));
    }
    report = effective_step_bound_check(skew, odd);
    CHECK(report.max_ratio > 2.0);
    REQUIRE(report.first_exceedance);
    CHECK(*report.first_exceedance > 30);

    CHECK_THROWS(effective_step_bound_check(std::span<const StepDiagnostics>{}, c));
}
