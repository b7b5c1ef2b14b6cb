#pragma once

// Oracle suites: each compares an implementation path against an
// independent route to the same value and reports the largest error seen.

#include <string>
#include <vector>

namespace hadam {

struct SuiteResult {
    std::string name;
    bool passed = false;
    double max_error = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

/// Test hook: "beta1" runs the Adam parity suite with a perturbed beta1 on
/// the HAdam side, which must make that suite fail.
enum class Fault { none, beta1 };

/// Chained ema_update versus closed_form_ema over random histories.
SuiteResult verify_ema_closed_form(int histories = 100, int length = 50);

/// bias_correct after t constant-input updates returns input^k, t <= 100.
SuiteResult verify_bias_correction_exact();

/// Monte-Carlo mean of V_t versus E[g^k] (1 - beta2^t) for i.i.d. gradients.
SuiteResult verify_bias_correction_monte_carlo(int sequences = 10000);

/// hadam_step at order 2 versus adam_reference_step, 1000 steps on the
/// quadratic and Rosenbrock problems.
SuiteResult verify_adam_parity(Fault fault = Fault::none, int steps = 1000);

/// Constant gradient, eps = 0, folded bias: |delta_t| = alpha for even k.
SuiteResult verify_step_law(int steps = 100);

/// M_k <= 1 for even k and E[g^4] >= E[g]^4 over random sample sets.
SuiteResult verify_power_mean(int sets = 200);

/// Analytic gradients versus central differences on every problem.
SuiteResult verify_finite_difference(int points = 10);

std::vector<SuiteResult> run_verification(Fault fault = Fault::none);

} // namespace hadam
