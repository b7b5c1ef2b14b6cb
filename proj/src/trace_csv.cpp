#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hadam/harness.hpp"

namespace hadam {

namespace {

constexpr const char* kTraceHeader = "t,loss,accuracy,max_abs_delta,metric_mk,diverged";
constexpr const char* kSweepHeader = "order,final_loss,final_accuracy,status";

std::runtime_error io_error(const std::string& what, const std::filesystem::path& path)
{
    return std::runtime_error(what + ": " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

} // namespace

std::string format_double(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_double(const std::string& text)
{
    if (text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    return value;
}

std::string to_string(RunStatus status) { return status == RunStatus::completed ? "completed" : "diverged"; }

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot open trace file for writing", path);
    }
    out << kTraceHeader << '\n';
    for (const auto& row : trace.rows) {
        out << row.t << ',' << format_double(row.loss) << ',';
        if (row.accuracy) {
            out << format_double(*row.accuracy);
        }
        out << ',' << format_double(row.max_abs_delta) << ',' << format_double(row.metric_mk) << ','
            << (row.diverged ? 1 : 0) << '\n';
    }
    if (!out) {
        throw io_error("failed writing trace file", path);
    }
}

RunTrace read_trace_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open trace file", path);
    }
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) {
        throw io_error("missing or unexpected trace header", path);
    }
    RunTrace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 6) {
            throw io_error("expected 6 fields on line " + std::to_string(line_no), path);
        }
        try {
            TraceRow row;
            row.t = std::stoull(fields[0]);
            row.loss = parse_double(fields[1]);
            if (!fields[2].empty()) {
                row.accuracy = parse_double(fields[2]);
            }
            row.max_abs_delta = parse_double(fields[3]);
            row.metric_mk = parse_double(fields[4]);
            if (fields[5] != "0" && fields[5] != "1") {
                throw std::invalid_argument("diverged must be 0 or 1");
            }
            row.diverged = fields[5] == "1";
            if (row.diverged && !trace.diverged_at) {
                trace.diverged_at = row.t;
            }
            trace.rows.push_back(row);
        } catch (const std::exception& e) {
            throw io_error(std::string("bad row on line ") + std::to_string(line_no) + " (" + e.what() + ")",
                           path);
        }
    }
    trace.status = trace.diverged_at ? RunStatus::diverged : RunStatus::completed;
    return trace;
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot open sweep file for writing", path);
    }
    out << kSweepHeader << '\n';
    for (const auto& cell : sweep.cells) {
        out << cell.order << ',' << format_double(cell.final_loss) << ',';
        if (cell.final_accuracy) {
            out << format_double(*cell.final_accuracy);
        }
        out << ',' << to_string(cell.status) << '\n';
    }
    if (!out) {
        throw io_error("failed writing sweep file", path);
    }
}

} // namespace hadam
