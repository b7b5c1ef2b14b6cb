#include "hadam/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hadam/moments.hpp"
#include "hadam/optim.hpp"
#include "hadam/problems.hpp"
#include "hadam/rng.hpp"

namespace hadam {

namespace {

SuiteResult finish(std::string name, double max_error, double tolerance, std::string detail = {})
{
    SuiteResult r;
    r.name = std::move(name);
    r.max_error = max_error;
    r.tolerance = tolerance;
    r.passed = std::isfinite(max_error) && max_error <= tolerance;
    r.detail = std::move(detail);
    return r;
}

double trajectory_gap(const Problem& problem, int steps, const HAdamConfig& hadam_cfg, const HAdamConfig& adam_cfg)
{
    const auto x0 = problem.initial_point(0);
    OptimizerState a = init_state(problem.dim(), x0);
    OptimizerState b = init_state(problem.dim(), x0);
    const Batch batch = problem.full_batch();
    double gap = 0.0;
    for (int t = 0; t < steps; ++t) {
        hadam_step(a, problem.grad(a.x, batch), hadam_cfg);
        adam_reference_step(b, problem.grad(b.x, batch), adam_cfg);
        for (std::size_t i = 0; i < a.dim(); ++i) {
            gap = std::max({gap, std::abs(a.x[i] - b.x[i]), std::abs(a.m[i] - b.m[i]), std::abs(a.v[i] - b.v[i])});
            if (std::isnan(a.x[i]) != std::isnan(b.x[i])) {
                return std::numeric_limits<double>::infinity();
            }
        }
    }
    return gap;
}

} // namespace

SuiteResult verify_ema_closed_form(int histories, int length)
{
    Rng rng(0xE3A);
    const int orders[] = {1, 2, 3, 4, 8};
    double worst = 0.0;
    for (int h = 0; h < histories; ++h) {
        std::vector<double> history(static_cast<std::size_t>(length));
        for (double& g : history) {
            g = rng.uniform(-10.0, 10.0);
        }
        const double beta = rng.uniform(0.0, 0.999);
        for (int k : orders) {
            EmaAccumulator acc{0.0, beta, 0};
            for (double g : history) {
                acc = ema_update(acc, int_pow(g, k));
            }
            const double exact = closed_form_ema(history, beta, k);
            // Odd orders can cancel; measure error against the magnitude of the terms.
            std::vector<double> magnitudes(history.size());
            std::transform(history.begin(), history.end(), magnitudes.begin(), [](double g) { return std::abs(g); });
            const double scale = std::max(std::abs(exact), closed_form_ema(magnitudes, beta, k));
            worst = std::max(worst, std::abs(acc.value - exact) / scale);
        }
    }
    return finish("ema_closed_form", worst, 1e-12, "max relative |recurrence - closed form|");
}

SuiteResult verify_bias_correction_exact()
{
    const double betas[] = {0.0, 0.5, 0.9, 0.999};
    const double inputs[] = {-3.0, 0.5, 2.0, 7.0};
    double worst = 0.0;
    for (int k : {2, 4}) {
        for (double beta : betas) {
            for (double g : inputs) {
                const double target = int_pow(g, k);
                EmaAccumulator acc{0.0, beta, 0};
                for (int t = 1; t <= 100; ++t) {
                    acc = ema_update(acc, target);
                    worst = std::max(worst, std::abs(bias_correct(acc) - target) / std::abs(target));
                }
            }
        }
    }
    return finish("bias_correction_exact", worst, 1e-12, "max relative |corrected - g^k|, constant input");
}

SuiteResult verify_bias_correction_monte_carlo(int sequences)
{
    // g ~ U(lo, hi): E[g^k] = (hi^(k+1) - lo^(k+1)) / ((k+1)(hi - lo)).
    constexpr double lo = 0.5;
    constexpr double hi = 1.5;
    auto raw = [](int k) { return (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / ((k + 1) * (hi - lo)); };
    const int checkpoints[] = {1, 5, 20};
    double worst = 0.0;
    for (double beta2 : {0.9, 0.999}) {
        for (int k : {2, 4}) {
            Rng rng(derive_seed(0xB1A5, static_cast<std::uint64_t>(k)));
            double sums[3] = {0.0, 0.0, 0.0};
            for (int s = 0; s < sequences; ++s) {
                EmaAccumulator acc{0.0, beta2, 0};
                for (int t = 1, c = 0; t <= 20; ++t) {
                    acc = ema_update(acc, int_pow(rng.uniform(lo, hi), k));
                    if (t == checkpoints[c]) {
                        sums[c++] += acc.value;
                    }
                }
            }
            for (int c = 0; c < 3; ++c) {
                const double expected = raw(k) * (1.0 - std::pow(beta2, checkpoints[c]));
                const double mean = sums[c] / sequences;
                worst = std::max(worst, std::abs(mean - expected) / expected);
            }
        }
    }
    return finish("bias_correction_monte_carlo", worst, 0.02, "max relative |mean V_t - E[g^k](1 - beta2^t)|");
}

SuiteResult verify_adam_parity(Fault fault, int steps)
{
    HAdamConfig adam;
    adam.order = 2;
    HAdamConfig hadam = adam;
    if (fault == Fault::beta1) {
        hadam.beta1 = 1.0 - adam.beta1;
    }
    const QuadraticProblem quadratic(10);
    const RosenbrockProblem rosenbrock;
    const double gap = std::max(trajectory_gap(quadratic, steps, hadam, adam),
                                trajectory_gap(rosenbrock, steps, hadam, adam));
    return finish("adam_parity", gap, 1e-12, "max |hadam(k=2) - reference adam| over x, m, V");
}

SuiteResult verify_step_law(int steps)
{
    double worst = 0.0;
    for (int k : {2, 4, 6, 8}) {
        for (double g : {-3.0, 0.01, 2.0}) {
            HAdamConfig cfg;
            cfg.order = k;
            cfg.epsilon = 0.0;
            cfg.bias_mode = BiasMode::folded;
            OptimizerState state = init_state(1, {0.0});
            const std::vector<double> grad{g};
            for (int t = 0; t < steps; ++t) {
                const auto d = hadam_step(state, grad, cfg);
                worst = std::max(worst, std::abs(d.max_abs_delta - cfg.alpha));
            }
        }
    }
    return finish("step_law", worst, 1e-12, "max ||delta_t| - alpha|, constant gradient, eps = 0");
}

SuiteResult verify_power_mean(int sets)
{
    Rng rng(0x90E4);
    double worst = 0.0;
    bool chain_holds = true;
    for (int s = 0; s < sets; ++s) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.below(199));
        const double location = rng.uniform(-2.0, 2.0);
        std::vector<double> values(n);
        for (double& v : values) {
            switch (s % 3) {
            case 0: v = location + rng.normal(); break;
            case 1: v = location + rng.uniform(-1.0, 1.0); break;
            default: v = location + (rng.exponential() - 1.0); break;
            }
        }
        const SampleSet samples(std::move(values));
        for (int k : {2, 4, 6, 8}) {
            worst = std::max(worst, metric_mk(samples, k) - 1.0);
        }
        if (raw_sample_moment(samples, 4) < std::pow(raw_sample_moment(samples, 1), 4)) {
            chain_holds = false;
        }
    }
    auto r = finish("power_mean", std::max(worst, 0.0), 1e-9, "max (M_k - 1) for even k");
    if (!chain_holds) {
        r.passed = false;
        r.detail += "; E[g^4] >= E[g]^4 violated";
    }
    return r;
}

SuiteResult verify_finite_difference(int points)
{
    const std::size_t layers[] = {5, 6, 3};
    std::vector<std::pair<std::unique_ptr<Problem>, double>> problems;
    problems.emplace_back(quadratic_problem(6), 1e-7);
    problems.emplace_back(rosenbrock_problem(), 1e-6);
    problems.emplace_back(std::make_unique<NoisyQuadraticProblem>(4, 50, NoiseKind::exponential, 1.0, 3), 1e-6);
    problems.emplace_back(logistic_problem(60, 5, 7), 1e-6);
    problems.emplace_back(mlp_problem(layers, 60, 11), 1e-6);
    problems.emplace_back(skew_mlp_problem(layers, 60, 13), 1e-6);
    const std::size_t desk[] = {20, 32, 4};
    problems.emplace_back(skew_mlp_problem(desk, 2000, 1), 1e-6);

    Rng rng(0xFD);
    double worst_ratio = 0.0; // error / tolerance
    double worst = 0.0;
    std::string worst_name;
    for (const auto& [problem, tolerance] : problems) {
        for (int p = 0; p < points; ++p) {
            std::vector<double> x(problem->dim());
            for (double& v : x) {
                v = rng.uniform(-1.5, 1.5);
            }
            const Batch batch = problem->stochastic() ? problem->sample_batch(rng.next(), 16) : problem->full_batch();
            const double err = relative_error(problem->grad(x, batch), finite_difference_grad(*problem, x, batch));
            if (err / tolerance > worst_ratio || std::isnan(err)) {
                worst_ratio = std::isnan(err) ? std::numeric_limits<double>::infinity() : err / tolerance;
                worst = err;
                worst_name = problem->name();
            }
        }
    }
    std::ostringstream detail;
    detail << "max relative |analytic - central difference| (worst: " << worst_name << ")";
    auto r = finish("finite_difference", worst, 1e-6, detail.str());
    r.passed = worst_ratio <= 1.0;
    return r;
}

std::vector<SuiteResult> run_verification(Fault fault)
{
    return {verify_ema_closed_form(),       verify_bias_correction_exact(), verify_bias_correction_monte_carlo(),
            verify_adam_parity(fault),      verify_step_law(),              verify_power_mean(),
            verify_finite_difference()};
}

} // namespace hadam
