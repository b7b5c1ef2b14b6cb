#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "hadam/cli.hpp"

namespace hadam::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text)
{
    Int value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& key, const std::string& text)
{
    try {
        return parse_double(text);
    } catch (const std::invalid_argument&) {
        throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
    }
}

template <typename Int>
std::vector<Int> parse_list(const std::string& key, const std::string& text)
{
    std::vector<Int> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        out.push_back(parse_int<Int>(key, trim(item)));
    }
    if (out.empty()) {
        throw ConfigError("'" + key + "' expects a comma-separated list");
    }
    return out;
}

template <typename Int>
std::string join(const std::vector<Int>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? "," : "") + std::to_string(values[i]);
    }
    return out;
}

template <typename Enum>
Enum parse_choice(const std::string& key, const std::string& text,
                  std::initializer_list<std::pair<const char*, Enum>> choices)
{
    std::string names;
    for (const auto& [name, value] : choices) {
        if (text == name) {
            return value;
        }
        names += names.empty() ? name : std::string("|") + name;
    }
    throw ConfigError("'" + key + "' must be one of " + names + ", got '" + text + "'");
}

struct Key {
    const char* section;
    const char* name;
    std::function<void(Settings&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const Settings&)> get;
};

const std::vector<Key>& keys()
{
    using S = Settings;
    using V = const std::string&;
    static const std::vector<Key> table = {
        {"problem", "kind", [](S& s, V, V v) { s.experiment.problem.kind = v; },
         [](const S& s) { return s.experiment.problem.kind; }},
        {"problem", "dim", [](S& s, V k, V v) { s.experiment.problem.dim = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.problem.dim); }},
        {"problem", "examples",
         [](S& s, V k, V v) { s.experiment.problem.examples = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.problem.examples); }},
        {"problem", "features",
         [](S& s, V k, V v) { s.experiment.problem.features = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.problem.features); }},
        {"problem", "classes", [](S& s, V k, V v) { s.experiment.problem.classes = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.problem.classes); }},
        {"problem", "hidden", [](S& s, V k, V v) { s.experiment.problem.hidden = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.problem.hidden); }},
        {"problem", "data_seed",
         [](S& s, V k, V v) { s.experiment.problem.data_seed = parse_int<std::uint64_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.problem.data_seed); }},
        {"problem", "noise",
         [](S& s, V k, V v) {
             s.experiment.problem.noise =
                 parse_choice<NoiseKind>(k, v, {{"normal", NoiseKind::normal}, {"exponential", NoiseKind::exponential}});
         },
         [](const S& s) { return std::string(s.experiment.problem.noise == NoiseKind::normal ? "normal" : "exponential"); }},
        {"problem", "noise_scale", [](S& s, V k, V v) { s.experiment.problem.noise_scale = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.problem.noise_scale); }},
        {"problem", "skew_scale", [](S& s, V k, V v) { s.experiment.problem.skew_scale = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.problem.skew_scale); }},
        {"problem", "label_noise", [](S& s, V k, V v) { s.experiment.problem.label_noise = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.problem.label_noise); }},
        {"problem", "slope", [](S& s, V k, V v) { s.experiment.problem.slope = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.problem.slope); }},
        {"problem", "init", [](S& s, V, V v) { s.experiment.problem.init = v; },
         [](const S& s) { return s.experiment.problem.init; }},

        {"optim", "alpha", [](S& s, V k, V v) { s.experiment.optim.alpha = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.optim.alpha); }},
        {"optim", "beta1", [](S& s, V k, V v) { s.experiment.optim.beta1 = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.optim.beta1); }},
        {"optim", "beta2", [](S& s, V k, V v) { s.experiment.optim.beta2 = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.optim.beta2); }},
        {"optim", "order", [](S& s, V k, V v) { s.experiment.optim.order = parse_int<int>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.optim.order); }},
        {"optim", "epsilon", [](S& s, V k, V v) { s.experiment.optim.epsilon = parse_real(k, v); },
         [](const S& s) { return format_double(s.experiment.optim.epsilon); }},
        {"optim", "root_policy",
         [](S& s, V k, V v) {
             s.experiment.optim.root_policy =
                 parse_choice<RootPolicy>(k, v, {{"naive", RootPolicy::naive}, {"signed", RootPolicy::signed_}});
         },
         [](const S& s) {
             return std::string(s.experiment.optim.root_policy == RootPolicy::naive ? "naive" : "signed");
         }},
        {"optim", "bias_mode",
         [](S& s, V k, V v) {
             s.experiment.optim.bias_mode =
                 parse_choice<BiasMode>(k, v, {{"folded", BiasMode::folded}, {"explicit", BiasMode::explicit_}});
         },
         [](const S& s) {
             return std::string(s.experiment.optim.bias_mode == BiasMode::folded ? "folded" : "explicit");
         }},
        {"optim", "stepper",
         [](S& s, V k, V v) {
             s.experiment.stepper =
                 parse_choice<Stepper>(k, v, {{"hadam", Stepper::hadam}, {"adam_reference", Stepper::adam_reference}});
         },
         [](const S& s) { return std::string(s.experiment.stepper == Stepper::hadam ? "hadam" : "adam_reference"); }},

        {"experiment", "steps", [](S& s, V k, V v) { s.experiment.steps = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.steps); }},
        {"experiment", "batch_size", [](S& s, V k, V v) { s.experiment.batch_size = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.batch_size); }},
        {"experiment", "seeds", [](S& s, V k, V v) { s.experiment.seeds = parse_list<std::uint64_t>(k, v); },
         [](const S& s) { return join(s.experiment.seeds); }},
        {"experiment", "record_every",
         [](S& s, V k, V v) { s.experiment.record_every = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.experiment.record_every); }},
        {"experiment", "divergence_policy",
         [](S& s, V k, V v) {
             s.experiment.divergence_policy = parse_choice<DivergencePolicy>(
                 k, v, {{"halt", DivergencePolicy::halt}, {"continue", DivergencePolicy::continue_}});
         },
         [](const S& s) {
             return std::string(s.experiment.divergence_policy == DivergencePolicy::halt ? "halt" : "continue");
         }},

        {"sweep", "orders", [](S& s, V k, V v) { s.orders = parse_list<int>(k, v); },
         [](const S& s) { return join(s.orders); }},

        {"probe", "probe_samples", [](S& s, V k, V v) { s.probe_samples = parse_int<std::size_t>(k, v); },
         [](const S& s) { return std::to_string(s.probe_samples); }},
        {"probe", "probe_orders", [](S& s, V k, V v) { s.probe_orders = parse_list<int>(k, v); },
         [](const S& s) { return join(s.probe_orders); }},

        {"verify", "fault",
         [](S& s, V k, V v) { s.fault = parse_choice<Fault>(k, v, {{"none", Fault::none}, {"beta1", Fault::beta1}}); },
         [](const S& s) { return std::string(s.fault == Fault::none ? "none" : "beta1"); }},
    };
    return table;
}

const Key& find_key(const std::string& section, const std::string& name)
{
    for (const auto& key : keys()) {
        if (name == key.name && (section.empty() || section == key.section)) {
            return key;
        }
    }
    throw ConfigError("unknown config key '" + (section.empty() ? name : section + "." + name) + "'");
}

} // namespace

void apply_setting(Settings& settings, const std::string& key, const std::string& value)
{
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? std::string() : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    const Key& entry = find_key(trim(section), trim(name));
    entry.set(settings, key, trim(value));
}

void apply_config_text(Settings& settings, const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + "malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            const bool known = std::any_of(keys().begin(), keys().end(),
                                           [&](const Key& k) { return section == k.section; });
            if (!known) {
                throw ConfigError(where + "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + "expected 'key = value'");
        }
        const std::string name = trim(line.substr(0, eq));
        try {
            apply_setting(settings, section.empty() ? name : section + "." + name, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
}

void apply_config_file(Settings& settings, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    apply_config_text(settings, text.str(), path.string());
}

std::string resolved_config(const Settings& settings)
{
    std::string out;
    std::string section;
    for (const auto& key : keys()) {
        if (section != key.section) {
            section = key.section;
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
        }
        out += std::string(key.name) + " = " + key.get(settings) + "\n";
    }
    return out;
}

} // namespace hadam::cli
