#pragma once

// Seeded experiment execution: single runs, order sweeps, gradient-moment
// probes, and CSV traces.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hadam/moments.hpp"
#include "hadam/optim.hpp"
#include "hadam/problems.hpp"

namespace hadam {

/// Which test objective to build, with its size and data parameters.
struct ProblemSpec {
    std::string kind = "quadratic"; ///< quadratic|linear|rosenbrock|noisy_quadratic|logistic|mlp|skew_mlp
    std::size_t dim = 10;           ///< quadratic, linear and noisy_quadratic dimension
    std::size_t examples = 2000;
    std::size_t features = 20;
    std::size_t classes = 4;
    std::size_t hidden = 32;
    std::uint64_t data_seed = 1;
    NoiseKind noise = NoiseKind::normal;
    double noise_scale = 1.0;
    double skew_scale = 2.0;
    double label_noise = 0.2;
    double slope = 1.0; ///< linear problem gradient, same in every coordinate
    /// "default" uses the problem's own initial point; "zeros" starts at the origin.
    std::string init = "default";
};

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec);

enum class DivergencePolicy { halt, continue_ };
enum class Stepper { hadam, adam_reference };

struct ExperimentConfig {
    ProblemSpec problem;
    HAdamConfig optim;
    Stepper stepper = Stepper::hadam;
    std::size_t steps = 2000;
    std::size_t batch_size = 32;
    std::vector<std::uint64_t> seeds{1};
    std::size_t record_every = 50;
    DivergencePolicy divergence_policy = DivergencePolicy::halt;

    /// Throws std::invalid_argument on the first invalid field.
    void validate() const;
};

struct TraceRow {
    std::uint64_t t = 0;
    double loss = 0.0;
    std::optional<double> accuracy;
    double max_abs_delta = 0.0;
    double metric_mk = 0.0;
    bool diverged = false;
};

enum class RunStatus { completed, diverged };

struct RunTrace {
    std::vector<TraceRow> rows;
    RunStatus status = RunStatus::completed;
    /// First step at which a non-finite value appeared.
    std::optional<std::uint64_t> diverged_at;
    double wall_seconds = 0.0;

    double final_loss() const;
    std::optional<double> final_accuracy() const;
};

/// Runs `steps` optimizer steps from the problem's initial point for `seed`.
/// Minibatch for step t is drawn with derive_seed(seed, t). Rows are recorded
/// at t = 0, every record_every steps, at the first divergent step, and at
/// the last step. Recorded losses are full-data losses.
RunTrace run_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

/// run_experiment for every seed in cfg.seeds, on up to `jobs` threads.
/// Results follow the order of cfg.seeds.
std::vector<RunTrace> run_seeds(const ExperimentConfig& cfg, unsigned jobs = 1);

struct SweepCell {
    int order = 0;
    double final_loss = 0.0; ///< median over seeds, NaN ranked above every number
    std::optional<double> final_accuracy; ///< median over seeds
    RunStatus status = RunStatus::completed; ///< diverged if any seed diverged
    std::size_t diverged_runs = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<RunTrace> runs; ///< parallel to seeds
};

struct SweepResult {
    std::vector<SweepCell> cells; ///< ascending order, one per requested order

    const SweepCell& at(int order) const;
};

/// One run per (order, seed) with cfg.optim.order replaced and the
/// divergence policy set to continue, so diverged runs still report a final
/// loss and accuracy (NaN loss, chance-level accuracy). Runs may execute
/// on up to `jobs` threads; results are merged in (order, seed) order.
SweepResult sweep_orders(const ExperimentConfig& cfg, std::span<const int> orders, unsigned jobs = 1);

/// Median with NaN treated as larger than every number.
double median_nan_last(std::vector<double> values);

struct ProbeResult {
    std::vector<MomentSummary> per_component;
    /// Mean over components of mean, variance, raw moments and skewness
    /// (skewness only if defined for every component); M_k is the maximum
    /// over components where it is defined.
    MomentSummary aggregate;
};

/// Samples one minibatch gradient per seed at the fixed point x and
/// summarizes each component's distribution. Needs at least 30 seeds.
ProbeResult gradient_moment_probe(const Problem& problem, std::span<const double> x,
                                  std::span<const std::uint64_t> batch_seeds, std::size_t batch_size,
                                  std::span<const int> orders);

/// Header: t,loss,accuracy,max_abs_delta,metric_mk,diverged
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
RunTrace read_trace_csv(const std::filesystem::path& path);

/// Header: order,final_loss,final_accuracy,status
void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);

/// %.17g, with nan / inf / -inf spelled out.
std::string format_double(double value);
/// Inverse of format_double. Throws std::invalid_argument on malformed text.
double parse_double(const std::string& text);

std::string to_string(RunStatus status);

} // namespace hadam
