#include "hadam/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "hadam/rng.hpp"

namespace hadam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool all_finite(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> starting_point(const Problem& problem, const ProblemSpec& spec, std::uint64_t seed)
{
    if (spec.init == "zeros") {
        return std::vector<double>(problem.dim(), 0.0);
    }
    return problem.initial_point(seed);
}

RunTrace run_on(const Problem& problem, const ExperimentConfig& cfg, std::uint64_t seed)
{
    const auto started = std::chrono::steady_clock::now();
    if (problem.stochastic() && cfg.batch_size > problem.num_examples()) {
        throw std::domain_error("batch_size " + std::to_string(cfg.batch_size) + " exceeds the " +
                                std::to_string(problem.num_examples()) + " examples of problem " + problem.name());
    }

    OptimizerState state = init_state(problem.dim(), starting_point(problem, cfg.problem, seed));
    const Batch full = problem.full_batch();
    std::vector<double> grad(problem.dim());

    RunTrace trace;
    auto record = [&](std::uint64_t t, double max_abs_delta, bool diverged) {
        TraceRow row;
        row.t = t;
        row.loss = problem.loss(state.x, full);
        row.accuracy = problem.accuracy(state.x);
        row.max_abs_delta = max_abs_delta;
        row.metric_mk = state_metric_estimate(state, cfg.optim);
        row.diverged = diverged;
        trace.rows.push_back(row);
    };

    bool diverged = !all_finite(state.x);
    if (diverged) {
        trace.diverged_at = 0;
    }
    record(0, 0.0, diverged);

    for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
        const Batch batch =
            problem.stochastic() ? problem.sample_batch(derive_seed(seed, t), cfg.batch_size) : full;
        const double batch_loss = problem.loss_and_grad(state.x, batch, grad);
        const StepDiagnostics diag = cfg.stepper == Stepper::hadam ? hadam_step(state, grad, cfg.optim)
                                                                   : adam_reference_step(state, grad, cfg.optim);
        const bool first_divergence =
            !diverged && (diag.diverged || !std::isfinite(batch_loss) || !all_finite(grad));
        if (first_divergence) {
            diverged = true;
            trace.diverged_at = t;
        }
        if (first_divergence || t % cfg.record_every == 0 || t == cfg.steps) {
            record(t, diag.max_abs_delta, diverged);
        }
        if (diverged && cfg.divergence_policy == DivergencePolicy::halt) {
            break;
        }
    }

    trace.status = diverged ? RunStatus::diverged : RunStatus::completed;
    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return trace;
}

/// Runs every (config, seed) pair on one shared problem; result i is
/// configs[i / seeds.size()] with seeds[i % seeds.size()].
std::vector<RunTrace> run_grid(const ProblemSpec& spec, const std::vector<ExperimentConfig>& configs,
                               const std::vector<std::uint64_t>& seeds, unsigned jobs)
{
    const auto problem = make_problem(spec);
    const std::size_t n_seeds = seeds.size();
    const std::size_t n_runs = configs.size() * n_seeds;
    std::vector<RunTrace> traces(n_runs);
    std::vector<std::exception_ptr> errors(n_runs);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < n_runs; i = next++) {
            try {
                traces[i] = run_on(*problem, configs[i / n_seeds], seeds[i % n_seeds]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(n_runs)));
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return traces;
}

} // namespace

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec)
{
    const std::size_t layers[] = {spec.features, spec.hidden, spec.classes};
    if (spec.kind == "quadratic") {
        return quadratic_problem(spec.dim);
    }
    if (spec.kind == "linear") {
        return std::make_unique<LinearProblem>(std::vector<double>(spec.dim, spec.slope));
    }
    if (spec.kind == "rosenbrock") {
        return rosenbrock_problem();
    }
    if (spec.kind == "noisy_quadratic") {
        return std::make_unique<NoisyQuadraticProblem>(spec.dim, spec.examples, spec.noise, spec.noise_scale,
                                                       spec.data_seed);
    }
    if (spec.kind == "logistic") {
        DataSpec data;
        data.examples = spec.examples;
        data.features = spec.features;
        data.classes = spec.classes;
        data.seed = spec.data_seed;
        return std::make_unique<LogisticProblem>(make_cluster_data(data));
    }
    if (spec.kind == "mlp") {
        return mlp_problem(layers, spec.examples, spec.data_seed);
    }
    if (spec.kind == "skew_mlp") {
        return skew_mlp_problem(layers, spec.examples, spec.data_seed, spec.skew_scale, spec.label_noise);
    }
    throw std::invalid_argument("unknown problem kind '" + spec.kind + "'");
}

void ExperimentConfig::validate() const
{
    optim.validate();
    if (steps < 1) {
        throw std::invalid_argument("steps must be >= 1");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("batch_size must be >= 1");
    }
    if (record_every < 1) {
        throw std::invalid_argument("record_every must be >= 1");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("at least one seed is required");
    }
    if (problem.init != "default" && problem.init != "zeros") {
        throw std::invalid_argument("init must be 'default' or 'zeros', got '" + problem.init + "'");
    }
    if (stepper == Stepper::adam_reference && optim.order != 2) {
        throw std::invalid_argument("the reference Adam stepper requires order 2");
    }
}

double RunTrace::final_loss() const { return rows.empty() ? kNaN : rows.back().loss; }

std::optional<double> RunTrace::final_accuracy() const
{
    return rows.empty() ? std::nullopt : rows.back().accuracy;
}

RunTrace run_experiment(const ExperimentConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const auto problem = make_problem(cfg.problem);
    return run_on(*problem, cfg, seed);
}

std::vector<RunTrace> run_seeds(const ExperimentConfig& cfg, unsigned jobs)
{
    cfg.validate();
    return run_grid(cfg.problem, {cfg}, cfg.seeds, jobs);
}

const SweepCell& SweepResult::at(int order) const
{
    for (const auto& cell : cells) {
        if (cell.order == order) {
            return cell;
        }
    }
    throw std::out_of_range("no sweep cell for order " + std::to_string(order));
}

double median_nan_last(std::vector<double> values)
{
    if (values.empty()) {
        return kNaN;
    }
    std::sort(values.begin(), values.end(), [](double a, double b) {
        if (std::isnan(a)) {
            return false;
        }
        return std::isnan(b) || a < b;
    });
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return 0.5 * (values[mid - 1] + values[mid]);
}

SweepResult sweep_orders(const ExperimentConfig& cfg, std::span<const int> orders, unsigned jobs)
{
    if (orders.empty()) {
        throw std::invalid_argument("sweep needs at least one order");
    }
    std::set<int> unique(orders.begin(), orders.end());
    if (unique.size() != orders.size()) {
        throw std::invalid_argument("sweep orders must be distinct");
    }
    std::vector<ExperimentConfig> per_order;
    for (int k : unique) {
        ExperimentConfig c = cfg;
        c.optim.order = k;
        c.divergence_policy = DivergencePolicy::continue_;
        c.validate();
        per_order.push_back(std::move(c));
    }

    std::vector<RunTrace> traces = run_grid(cfg.problem, per_order, cfg.seeds, jobs);
    const std::size_t n_seeds = cfg.seeds.size();

    SweepResult result;
    std::size_t i = 0;
    for (const auto& c : per_order) {
        SweepCell cell;
        cell.order = c.optim.order;
        cell.seeds = cfg.seeds;
        std::vector<double> losses;
        std::vector<double> accuracies;
        for (std::size_t s = 0; s < n_seeds; ++s, ++i) {
            RunTrace& run = traces[i];
            losses.push_back(run.final_loss());
            if (auto acc = run.final_accuracy()) {
                accuracies.push_back(*acc);
            }
            if (run.status == RunStatus::diverged) {
                ++cell.diverged_runs;
            }
            cell.runs.push_back(std::move(run));
        }
        cell.final_loss = median_nan_last(std::move(losses));
        if (!accuracies.empty()) {
            cell.final_accuracy = median_nan_last(std::move(accuracies));
        }
        cell.status = cell.diverged_runs > 0 ? RunStatus::diverged : RunStatus::completed;
        result.cells.push_back(std::move(cell));
    }
    return result;
}

ProbeResult gradient_moment_probe(const Problem& problem, std::span<const double> x,
                                  std::span<const std::uint64_t> batch_seeds, std::size_t batch_size,
                                  std::span<const int> orders)
{
    if (batch_seeds.size() < 30) {
        throw std::domain_error("gradient_moment_probe needs at least 30 batch seeds, got " +
                                std::to_string(batch_seeds.size()));
    }
    const std::size_t dim = problem.dim();
    std::vector<std::vector<double>> columns(dim);
    std::vector<double> grad(dim);
    for (std::uint64_t seed : batch_seeds) {
        const Batch batch = problem.stochastic() ? problem.sample_batch(seed, batch_size) : problem.full_batch();
        problem.loss_and_grad(x, batch, grad);
        for (std::size_t i = 0; i < dim; ++i) {
            columns[i].push_back(grad[i]);
        }
    }

    ProbeResult result;
    for (auto& column : columns) {
        result.per_component.push_back(summarize(SampleSet(std::move(column)), orders));
    }

    MomentSummary& agg = result.aggregate;
    agg.count = batch_seeds.size();
    const double inv = 1.0 / static_cast<double>(dim);
    bool skew_defined = true;
    double skew_sum = 0.0;
    for (const auto& s : result.per_component) {
        agg.mean += s.mean * inv;
        agg.variance += s.variance * inv;
        for (const auto& [k, value] : s.raw_moments) {
            agg.raw_moments[k] += value * inv;
        }
        for (const auto& [k, value] : s.metric) {
            auto [it, inserted] = agg.metric.try_emplace(k, value);
            if (!inserted) {
                it->second = std::max(it->second, value);
            }
        }
        if (s.skewness) {
            skew_sum += *s.skewness * inv;
        } else {
            skew_defined = false;
        }
    }
    if (skew_defined) {
        agg.skewness = skew_sum;
    }
    return result;
}

} // namespace hadam
