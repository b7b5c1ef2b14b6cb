#pragma once

// HAdam: Adam with the second-moment accumulator replaced by an EMA of g^k
// and its k-th root in the denominator. Order k = 2 is Adam.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hadam/moments.hpp"

namespace hadam {

enum class BiasMode {
    folded,   ///< x -= alpha * root_k(1 - b2^t) / (1 - b1^t) * m / (root_k(V) + eps)
    explicit_ ///< x -= alpha * m_hat / (root_k(V_hat) + eps)
};

struct HAdamConfig {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int order = 2;
    double epsilon = 1e-8;
    RootPolicy root_policy = RootPolicy::naive;
    BiasMode bias_mode = BiasMode::folded;

    /// Throws std::invalid_argument when a hyperparameter is out of range.
    void validate() const;

    /// Odd orders are accepted but their k-th moment accumulator can go
    /// negative.
    bool odd_order_warning() const { return order % 2 != 0; }
};

struct OptimizerState {
    std::vector<double> x; ///< parameters
    std::vector<double> m; ///< EMA of g
    std::vector<double> v; ///< EMA of g^k
    std::uint64_t t = 0;

    std::size_t dim() const { return x.size(); }
};

struct StepDiagnostics {
    std::vector<double> delta; ///< x_t - x_{t-1}
    double max_abs_delta = 0.0; ///< NaN if any component of delta is NaN
    bool diverged = false;      ///< any non-finite component in delta, x, m or V
    std::size_t nan_components = 0; ///< non-finite components of delta
};

OptimizerState init_state(std::size_t dim, std::vector<double> x0);

/// One HAdam update, in place. Bias factors use the incremented step count.
/// Non-finite values are reported through the diagnostics, never repaired.
StepDiagnostics hadam_step(OptimizerState& state, std::span<const double> grad, const HAdamConfig& cfg);

/// Plain Adam (order fixed at 2, folded bias correction), written
/// independently of hadam_step for use as a reference.
StepDiagnostics adam_reference_step(OptimizerState& state, std::span<const double> grad, const HAdamConfig& cfg);

/// Largest per-component |m_hat| / root_k(V_hat) for the current state; this
/// is the EMA estimate of M_k that bounds |delta| / alpha when eps = 0.
/// NaN before the first step or when any component is undefined.
double state_metric_estimate(const OptimizerState& state, const HAdamConfig& cfg);

struct StepBoundReport {
    double max_ratio = 0.0; ///< max over finite steps of max_abs_delta / alpha
    /// 1-based index of the first step whose ratio exceeds 1 + tolerance or is non-finite.
    std::optional<std::size_t> first_exceedance;
    std::size_t nonfinite_steps = 0;
};

StepBoundReport effective_step_bound_check(std::span<const StepDiagnostics> trace, const HAdamConfig& cfg,
                                           double tolerance = 1e-9);

} // namespace hadam
