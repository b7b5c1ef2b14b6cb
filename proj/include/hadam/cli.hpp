#pragma once

// Flat `key = value` configuration with [sections], and the command-line
// front end (run, sweep, probe, verify).

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hadam/harness.hpp"
#include "hadam/verify.hpp"

namespace hadam::cli {

/// Invalid configuration: unknown key, malformed value, missing file, or a
/// value that fails validation. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Settings {
    ExperimentConfig experiment;
    std::vector<int> orders{2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t probe_samples = 1000;
    std::vector<int> probe_orders{2, 3, 4, 8};
    Fault fault = Fault::none;
};

/// Applies one setting. `key` is either `section.name` or a bare `name`.
void apply_setting(Settings& settings, const std::string& key, const std::string& value);

/// Parses config text. Blank lines and lines starting with '#' or ';' are ignored.
void apply_config_text(Settings& settings, const std::string& text, const std::string& origin = "<config>");
void apply_config_file(Settings& settings, const std::filesystem::path& path);

/// Every known key with its current value, grouped by section, in the same
/// format the parser reads.
std::string resolved_config(const Settings& settings);

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kRuntimeError = 3 };

/// Entry point. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hadam::cli
