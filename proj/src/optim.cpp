#include "hadam/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hadam {

namespace {

void check_dims(const OptimizerState& state, std::span<const double> grad)
{
    if (grad.size() != state.x.size() || state.m.size() != state.x.size() || state.v.size() != state.x.size()) {
        throw std::invalid_argument("gradient dimension " + std::to_string(grad.size()) +
                                    " does not match state dimension " + std::to_string(state.x.size()));
    }
}

StepDiagnostics diagnose(const OptimizerState& state, std::vector<double> delta)
{
    StepDiagnostics d;
    d.delta = std::move(delta);
    for (double c : d.delta) {
        if (!std::isfinite(c)) {
            ++d.nan_components;
        }
        if (std::isnan(c)) {
            d.max_abs_delta = std::numeric_limits<double>::quiet_NaN();
        } else if (!std::isnan(d.max_abs_delta)) {
            d.max_abs_delta = std::max(d.max_abs_delta, std::abs(c));
        }
    }
    d.diverged = d.nan_components > 0;
    for (std::size_t i = 0; i < state.dim() && !d.diverged; ++i) {
        d.diverged = !std::isfinite(state.x[i]) || !std::isfinite(state.m[i]) || !std::isfinite(state.v[i]);
    }
    return d;
}

} // namespace

void HAdamConfig::validate() const
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be positive, got " + std::to_string(alpha));
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0)) {
        throw std::invalid_argument("beta1 must lie in [0, 1), got " + std::to_string(beta1));
    }
    if (!(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("beta2 must lie in [0, 1), got " + std::to_string(beta2));
    }
    if (order < 2) {
        throw std::invalid_argument("order must be >= 2, got " + std::to_string(order));
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("epsilon must be nonnegative, got " + std::to_string(epsilon));
    }
}

OptimizerState init_state(std::size_t dim, std::vector<double> x0)
{
    if (dim == 0 || x0.size() != dim) {
        throw std::domain_error("init_state: dim " + std::to_string(dim) + " does not match x0 of length " +
                                std::to_string(x0.size()));
    }
    OptimizerState s;
    s.x = std::move(x0);
    s.m.assign(dim, 0.0);
    s.v.assign(dim, 0.0);
    return s;
}

StepDiagnostics hadam_step(OptimizerState& state, std::span<const double> grad, const HAdamConfig& cfg)
{
    check_dims(state, grad);
    const int k = cfg.order;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double m_bias = 1.0 - std::pow(cfg.beta1, t);
    const double v_bias = 1.0 - std::pow(cfg.beta2, t);

    // Folded coefficient: alpha * root_k(1 - b2^t) / (1 - b1^t).
    const double folded = cfg.alpha * kth_root(v_bias, k, cfg.root_policy) / m_bias;

    std::vector<double> delta(state.dim());
    for (std::size_t i = 0; i < state.dim(); ++i) {
        const double g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * int_pow(g, k);

        double step;
        if (cfg.bias_mode == BiasMode::folded) {
            step = folded * state.m[i] / (kth_root(state.v[i], k, cfg.root_policy) + cfg.epsilon);
        } else {
            const double m_hat = state.m[i] / m_bias;
            const double v_hat = state.v[i] / v_bias;
            step = cfg.alpha * m_hat / (kth_root(v_hat, k, cfg.root_policy) + cfg.epsilon);
        }
        delta[i] = -step;
        state.x[i] += delta[i];
    }
    return diagnose(state, std::move(delta));
}

StepDiagnostics adam_reference_step(OptimizerState& state, std::span<const double> grad, const HAdamConfig& cfg)
{
    if (cfg.order != 2) {
        throw std::invalid_argument("adam_reference_step requires order 2");
    }
    if (cfg.bias_mode != BiasMode::folded) {
        throw std::invalid_argument("adam_reference_step implements folded bias correction only");
    }
    check_dims(state, grad);
    state.t += 1;
    const double b1t = std::pow(cfg.beta1, static_cast<double>(state.t));
    const double b2t = std::pow(cfg.beta2, static_cast<double>(state.t));
    const double lr = cfg.alpha * std::sqrt(1.0 - b2t) / (1.0 - b1t);

    std::vector<double> delta(state.dim());
    for (std::size_t i = 0; i < state.dim(); ++i) {
        const double g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * (g * g);
        delta[i] = -(lr * state.m[i] / (std::sqrt(state.v[i]) + cfg.epsilon));
        state.x[i] += delta[i];
    }
    return diagnose(state, std::move(delta));
}

double state_metric_estimate(const OptimizerState& state, const HAdamConfig& cfg)
{
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (state.t == 0) {
        return nan;
    }
    const double t = static_cast<double>(state.t);
    const double m_bias = 1.0 - std::pow(cfg.beta1, t);
    const double v_bias = 1.0 - std::pow(cfg.beta2, t);
    double worst = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        const double v_hat = state.v[i] / v_bias;
        if (v_hat == 0.0) {
            continue; // component has only seen zero gradients
        }
        if (v_hat < 0.0 && cfg.order % 2 == 0) {
            return nan;
        }
        const double root = kth_root(v_hat, cfg.order, cfg.root_policy);
        const double ratio = std::abs(state.m[i] / m_bias / root);
        if (std::isnan(ratio)) {
            return nan;
        }
        worst = std::max(worst, ratio);
    }
    return worst;
}

StepBoundReport effective_step_bound_check(std::span<const StepDiagnostics> trace, const HAdamConfig& cfg,
                                           double tolerance)
{
    if (trace.empty()) {
        throw std::invalid_argument("effective_step_bound_check: empty trace");
    }
    StepBoundReport report;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double ratio = trace[i].max_abs_delta / cfg.alpha;
        if (!std::isfinite(ratio)) {
            ++report.nonfinite_steps;
            if (!report.first_exceedance) {
                report.first_exceedance = i + 1;
            }
            continue;
        }
        report.max_ratio = std::max(report.max_ratio, ratio);
        if (ratio > 1.0 + tolerance && !report.first_exceedance) {
            report.first_exceedance = i + 1;
        }
    }
    return report;
}

} // namespace hadam
