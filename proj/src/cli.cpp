#include <cmath>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "hadam/cli.hpp"
#include "hadam/rng.hpp"

namespace hadam::cli {

namespace {

struct Invocation {
    std::string config;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    std::string seeds;
    unsigned jobs = 1;
};

Settings resolve(const Invocation& inv)
{
    Settings settings;
    if (!inv.config.empty()) {
        apply_config_file(settings, inv.config);
    }
    for (const auto& item : inv.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + item + "'");
        }
        apply_setting(settings, item.substr(0, eq), item.substr(eq + 1));
    }
    if (!inv.seeds.empty()) {
        apply_setting(settings, "experiment.seeds", inv.seeds);
    }
    try {
        settings.experiment.validate();
        make_problem(settings.experiment.problem);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return settings;
}

std::filesystem::path prepare_out(const Invocation& inv, const Settings& settings)
{
    const std::filesystem::path dir(inv.out_dir);
    std::filesystem::create_directories(dir);
    std::ofstream dump(dir / "resolved_config", std::ios::binary | std::ios::trunc);
    dump << resolved_config(settings);
    if (!dump) {
        throw std::runtime_error("cannot write " + (dir / "resolved_config").string());
    }
    return dir;
}

std::string summary_line(std::uint64_t seed, int order, const RunTrace& run)
{
    std::string line = "seed=" + std::to_string(seed) + " order=" + std::to_string(order) + " ";
    if (run.status == RunStatus::diverged) {
        line += "DIVERGED t=" + std::to_string(*run.diverged_at);
    } else {
        line += "completed t=" + std::to_string(run.rows.back().t);
    }
    line += " final_loss=" + format_double(run.final_loss());
    if (auto acc = run.final_accuracy()) {
        line += " final_accuracy=" + format_double(*acc);
    }
    return line;
}

int cmd_run(const Invocation& inv, std::ostream& out)
{
    const Settings settings = resolve(inv);
    const auto dir = prepare_out(inv, settings);
    const ExperimentConfig& cfg = settings.experiment;
    if (cfg.optim.odd_order_warning()) {
        out << "warning: odd order " << cfg.optim.order << "; the moment accumulator can turn negative\n";
    }
    const std::vector<RunTrace> runs = run_seeds(cfg, inv.jobs);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        write_trace_csv(runs[i], dir / ("trace_" + std::to_string(cfg.seeds[i]) + ".csv"));
        out << summary_line(cfg.seeds[i], cfg.optim.order, runs[i]) << '\n';
    }
    return kOk;
}

int cmd_sweep(const Invocation& inv, std::ostream& out)
{
    const Settings settings = resolve(inv);
    for (int k : settings.orders) {
        if (k < 2) {
            throw ConfigError("sweep orders must be >= 2, got " + std::to_string(k));
        }
    }
    const auto dir = prepare_out(inv, settings);
    const SweepResult result = sweep_orders(settings.experiment, settings.orders, inv.jobs);
    for (const auto& cell : result.cells) {
        for (std::size_t i = 0; i < cell.runs.size(); ++i) {
            write_trace_csv(cell.runs[i], dir / ("trace_k" + std::to_string(cell.order) + "_seed" +
                                                 std::to_string(cell.seeds[i]) + ".csv"));
        }
        out << "order=" << cell.order << " status=" << to_string(cell.status) << " diverged_runs="
            << cell.diverged_runs << "/" << cell.runs.size() << " final_loss=" << format_double(cell.final_loss);
        if (cell.final_accuracy) {
            out << " final_accuracy=" << format_double(*cell.final_accuracy);
        }
        out << '\n';
    }
    write_sweep_csv(result, dir / "sweep.csv");
    return kOk;
}

int cmd_probe(const Invocation& inv, std::ostream& out)
{
    const Settings settings = resolve(inv);
    const auto dir = prepare_out(inv, settings);
    const ExperimentConfig& cfg = settings.experiment;
    const auto problem = make_problem(cfg.problem);
    const std::uint64_t seed = cfg.seeds.front();
    const std::vector<double> x = cfg.problem.init == "zeros" ? std::vector<double>(problem->dim(), 0.0)
                                                              : problem->initial_point(seed);
    std::vector<std::uint64_t> batch_seeds(settings.probe_samples);
    for (std::size_t i = 0; i < batch_seeds.size(); ++i) {
        batch_seeds[i] = derive_seed(seed, 1'000'000 + i);
    }
    ProbeResult probe;
    try {
        probe = gradient_moment_probe(*problem, x, batch_seeds, cfg.batch_size, settings.probe_orders);
    } catch (const std::domain_error& e) {
        throw ConfigError(e.what());
    }
    const MomentSummary& s = probe.aggregate;

    std::ofstream csv(dir / "probe.csv", std::ios::binary | std::ios::trunc);
    csv << "statistic,order,value\n";
    csv << "mean,1," << format_double(s.mean) << '\n';
    csv << "variance,2," << format_double(s.variance) << '\n';
    csv << "skewness,3," << (s.skewness ? format_double(*s.skewness) : "nan") << '\n';
    // Signed skewness cancels across components; the mean magnitude does not.
    double abs_skew = 0.0;
    std::size_t defined = 0;
    for (const auto& c : probe.per_component) {
        if (c.skewness) {
            abs_skew += std::abs(*c.skewness);
            ++defined;
        }
    }
    abs_skew = defined ? abs_skew / static_cast<double>(defined) : std::nan("");
    csv << "mean_abs_skewness,3," << format_double(abs_skew) << '\n';
    out << "components=" << probe.per_component.size() << " samples=" << s.count << '\n';
    out << "mean_abs_skewness=" << format_double(abs_skew) << '\n';
    out << "mean=" << format_double(s.mean) << " variance=" << format_double(s.variance) << " skewness="
        << (s.skewness ? format_double(*s.skewness) : "undefined (zero variance)") << '\n';
    for (const auto& [k, value] : s.raw_moments) {
        csv << "raw_moment," << k << ',' << format_double(value) << '\n';
    }
    for (int k : settings.probe_orders) {
        const auto it = s.metric.find(k);
        const std::string text = it == s.metric.end() ? "nan" : format_double(it->second);
        csv << "metric_mk," << k << ',' << text << '\n';
        out << "M_" << k << "=" << (it == s.metric.end() ? "undefined" : text) << '\n';
    }
    if (!csv) {
        throw std::runtime_error("cannot write " + (dir / "probe.csv").string());
    }
    return kOk;
}

int cmd_verify(const Invocation& inv, std::ostream& out)
{
    const Settings settings = resolve(inv);
    bool all_passed = true;
    for (const auto& r : run_verification(settings.fault)) {
        all_passed = all_passed && r.passed;
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_error=" << format_double(r.max_error)
            << " tolerance=" << format_double(r.tolerance) << "  " << r.detail << '\n';
    }
    out << (all_passed ? "all suites passed" : "verification FAILED") << '\n';
    return all_passed ? kOk : kVerifyFailed;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"HAdam: Adam with order-k moment estimates. Runs, order sweeps, gradient probes, oracle checks."};
    app.require_subcommand(1);

    Invocation inv;
    auto add_common = [&inv](CLI::App* cmd) {
        cmd->add_option("--config", inv.config, "flat key = value config file");
        cmd->add_option("--out", inv.out_dir, "output directory")->capture_default_str();
        cmd->add_option("--set", inv.overrides, "override, key=value (repeatable)")->take_all();
        cmd->add_option("--seeds", inv.seeds, "comma-separated run seeds");
        cmd->add_option("--jobs", inv.jobs, "parallel runs")->check(CLI::PositiveNumber);
    };
    auto* run_cmd = app.add_subcommand("run", "run one experiment per seed, write trace_<seed>.csv");
    auto* sweep_cmd = app.add_subcommand("sweep", "run every order in [sweep] orders, write sweep.csv");
    auto* probe_cmd = app.add_subcommand("probe", "gradient moment statistics at the initial point");
    auto* verify_cmd = app.add_subcommand("verify", "run the oracle suites");
    for (auto* cmd : {run_cmd, sweep_cmd, probe_cmd, verify_cmd}) {
        add_common(cmd);
    }

    std::vector<std::string> storage(args.rbegin(), args.rend());
    try {
        app.parse(storage);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (run_cmd->parsed()) {
            return cmd_run(inv, out);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(inv, out);
        }
        if (probe_cmd->parsed()) {
            return cmd_probe(inv, out);
        }
        return cmd_verify(inv, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

} // namespace hadam::cli
