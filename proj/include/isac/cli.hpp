// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef ISAC_CLI_HPP
#define ISAC_CLI_HPP

#include "isac/experiments.hpp"
#include "isac/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isac::cli {

enum class Subcommand { sweep_beta, sweep_gamma, single_point, validate };
enum class OutputFormat { csv, json_lines };

inline constexpr std::string_view kCsvHeader =
    "sweep_var,sweep_value,n_rx,trials,seed,ber_theory,ber_sim,ber_stderr,mse_sic,mse_sic_stderr,mse_mmse,"
    "mse_mmse_stderr";

/// Keys accepted in config files and as --key overrides.
inline const std::vector<std::string>& valid_keys()
{
    static const std::vector<std::string> keys{"seed",  "trials",   "n_rx",     "n_tx",     "sigma2_db",  "theta",
                                               "beta",  "gamma",    "grid_min", "grid_max", "grid_points"};
    return keys;
}

struct CliConfig {
    Subcommand subcommand = Subcommand::sweep_beta;
    std::optional<std::string> config_path;
    std::vector<std::pair<std::string, std::string>> overrides; ///< in command-line order
    std::string output_path;                                    ///< empty: standard output
    OutputFormat format = OutputFormat::csv;
    std::optional<unsigned> threads;
};

/// Fully resolved run: the SweepSpec plus every effective key value, for provenance.
struct RunPlan {
    CliConfig cli;
    SweepSpec spec;
    std::map<std::string, std::string> effective;
};

inline const char* to_string(Subcommand s)
{
    switch (s) {
    case Subcommand::sweep_beta: return "sweep-beta";
    case Subcommand::sweep_gamma: return "sweep-gamma";
    case Subcommand::single_point: return "single-point";
    case Subcommand::validate: return "validate";
    }
    return "?";
}

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string join_keys()
{
    std::string out;
    for (const auto& k : valid_keys())
        out += (out.empty() ? "" : ", ") + k;
    return out;
}

inline void require_known_key(const std::string& key, std::string_view where)
{
    if (std::find(valid_keys().begin(), valid_keys().end(), key) == valid_keys().end())
        throw config_error("unknown key '" + key + "' in " + std::string(where) + "; valid keys: " + join_keys());
}

inline double parse_double(const std::string& key, const std::string& text)
{
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty() || !std::isfinite(v))
        throw config_error("malformed number for '" + key + "': '" + text + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& text)
{
    std::uint64_t v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty())
        throw config_error("malformed integer for '" + key + "': '" + text + "'");
    return v;
}

inline int parse_int(const std::string& key, const std::string& text)
{
    int v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty())
        throw config_error("malformed integer for '" + key + "': '" + text + "'");
    return v;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& text)
{
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_int(key, trim(item)));
    if (out.empty())
        throw config_error("empty list for '" + key + "'");
    return out;
}

inline std::string format_g(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

} // namespace detail

/// Parses `key = value` lines; '#' starts a comment. Unknown keys are errors.
inline std::map<std::string, std::string> parse_config_text(std::string_view text)
{
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(std::string_view(t).substr(0, eq));
        const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
        detail::require_known_key(key, "config file (line " + std::to_string(lineno) + ")");
        out[key] = value;
    }
    return out;
}

/// Reads a whole file; missing or unreadable files are config errors.
inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw config_error("cannot open config file '" + path + "': " + std::strerror(errno));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Command line (without the program name):
///   <subcommand> [--config PATH] [--output PATH] [--format csv|json-lines]
///                [--threads N] [--<key> VALUE | --<key>=VALUE | --set key=value]...
/// Dashes in key flags map to underscores (--sigma2-db == sigma2_db).
inline CliConfig parse_arguments(const std::vector<std::string>& args)
{
    if (args.empty())
        throw config_error("missing subcommand (sweep-beta, sweep-gamma, single-point, validate)");
    CliConfig cfg;
    const std::string& sub = args[0];
    if (sub == "sweep-beta")
        cfg.subcommand = Subcommand::sweep_beta;
    else if (sub == "sweep-gamma")
        cfg.subcommand = Subcommand::sweep_gamma;
    else if (sub == "single-point")
        cfg.subcommand = Subcommand::single_point;
    else if (sub == "validate")
        cfg.subcommand = Subcommand::validate;
    else
        throw config_error("unknown subcommand '" + sub + "' (sweep-beta, sweep-gamma, single-point, validate)");

    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string flag = args[i];
        if (flag.rfind("--", 0) != 0)
            throw config_error("unexpected argument '" + flag + "'");
        flag.erase(0, 2);
        std::optional<std::string> value;
        if (const auto eq = flag.find('='); eq != std::string::npos) {
            value = flag.substr(eq + 1);
            flag.erase(eq);
        }
        auto take = [&]() -> std::string {
            if (value)
                return *value;
            if (i + 1 >= args.size())
                throw config_error("flag --" + flag + " requires a value");
            return args[++i];
        };
        if (flag == "config") {
            cfg.config_path = take();
        } else if (flag == "output" || flag == "o") {
            cfg.output_path = take();
        } else if (flag == "format") {
            const std::string f = take();
            if (f == "csv")
                cfg.format = OutputFormat::csv;
            else if (f == "json-lines" || f == "jsonl")
                cfg.format = OutputFormat::json_lines;
            else
                throw config_error("unknown format '" + f + "' (csv, json-lines)");
        } else if (flag == "threads") {
            const int n = detail::parse_int("threads", take());
            if (n < 1)
                throw config_error("--threads must be >= 1");
            cfg.threads = static_cast<unsigned>(n);
        } else if (flag == "set") {
            const std::string kv = take();
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw config_error("--set expects key=value, got '" + kv + "'");
            std::string key = detail::trim(std::string_view(kv).substr(0, eq));
            detail::require_known_key(key, "--set");
            cfg.overrides.emplace_back(key, detail::trim(std::string_view(kv).substr(eq + 1)));
        } else {
            std::string key = flag;
            std::replace(key.begin(), key.end(), '-', '_');
            detail::require_known_key(key, "command line");
            cfg.overrides.emplace_back(key, take());
        }
    }
    return cfg;
}

/// Merges defaults, file values and overrides (overrides win) into a SweepSpec.
/// Defaults: n_tx = 4, sigma2 = -30 dB, QPSK, n_rx in {1, 2, 4}, 13-point
/// log grid on [1e-3, 1e3], 1e5 trials per point, the non-swept power = 1.
inline RunPlan parse_config(const CliConfig& cli, std::string_view file_contents = {})
{
    std::map<std::string, std::string> kv{
        {"seed", "1"},          {"trials", "100000"}, {"n_rx", "1,2,4"},     {"n_tx", "4"},
        {"sigma2_db", "-30"},   {"theta", "0"},       {"beta", "1"},         {"gamma", "1"},
        {"grid_min", "0.001"},  {"grid_max", "1000"}, {"grid_points", "13"},
    };
    for (const auto& [k, v] : parse_config_text(file_contents))
        kv[k] = v;
    for (const auto& [k, v] : cli.overrides) {
        detail::require_known_key(k, "overrides");
        kv[k] = v;
    }

    RunPlan plan;
    plan.cli = cli;
    SweepSpec& spec = plan.spec;
    SystemConfig& base = spec.base;
    base.n_tx = detail::parse_int("n_tx", kv["n_tx"]);
    base.theta = detail::parse_double("theta", kv["theta"]);
    base.beta = detail::parse_double("beta", kv["beta"]);
    base.gamma = detail::parse_double("gamma", kv["gamma"]);
    base.sigma2 = db_to_linear(detail::parse_double("sigma2_db", kv["sigma2_db"]));
    spec.master_seed = detail::parse_u64("seed", kv["seed"]);
    base.seed = spec.master_seed;
    spec.trials_per_point = detail::parse_u64("trials", kv["trials"]);
    if (spec.trials_per_point == 0)
        throw config_error("trials must be >= 1");
    spec.n_rx_list = detail::parse_int_list("n_rx", kv["n_rx"]);

    const double grid_min = detail::parse_double("grid_min", kv["grid_min"]);
    const double grid_max = detail::parse_double("grid_max", kv["grid_max"]);
    const int grid_points = detail::parse_int("grid_points", kv["grid_points"]);
    if (grid_points < 1)
        throw config_error("grid_points must be >= 1");
    if (!(grid_min > 0.0) || !(grid_max >= grid_min))
        throw config_error("grid bounds must satisfy 0 < grid_min <= grid_max");

    switch (cli.subcommand) {
    case Subcommand::sweep_beta:
        spec.variable = SweepVariable::beta;
        spec.grid = log_grid(grid_min, grid_max, grid_points);
        break;
    case Subcommand::sweep_gamma:
        spec.variable = SweepVariable::gamma;
        spec.grid = log_grid(grid_min, grid_max, grid_points);
        break;
    case Subcommand::single_point:
    case Subcommand::validate:
        spec.variable = SweepVariable::beta;
        spec.grid = {base.beta};
        break;
    }
    if (cli.subcommand == Subcommand::single_point && !(base.beta > 0.0))
        throw config_error("single-point needs beta > 0 (it labels the output row)");
    spec.validate();
    plan.effective = std::move(kv);
    return plan;
}

/// Comment line embedding everything needed to reproduce the run.
inline std::string provenance_line(const RunPlan& plan)
{
    std::string line = "# isac_sim ";
    line += to_string(plan.cli.subcommand);
    line += " config=" + plan.cli.config_path.value_or("none");
    for (const auto& [k, v] : plan.effective)
        line += " " + k + "=" + v;
    line += " overrides=";
    bool first = true;
    for (const auto& [k, v] : plan.cli.overrides) {
        line += (first ? "" : ";") + k + "=" + v;
        first = false;
    }
    if (first)
        line += "none";
    return line;
}

/// Serializes a result. CSV floats use 9 significant digits; output is a pure
/// function of (result, format, provenance).
inline std::string format_results(const SweepResult& result, OutputFormat format, const std::string& provenance = {})
{
    std::string out;
    if (!provenance.empty())
        out += provenance + "\n";
    const char* var = to_string(result.variable);
    if (format == OutputFormat::csv) {
        out += kCsvHeader;
        out += "\n";
        for (const auto& r : result.rows) {
            const auto& m = r.metrics;
            out += std::string(var) + "," + detail::format_g(r.sweep_value, 9) + "," + std::to_string(r.n_rx) + "," +
                   std::to_string(r.trials) + "," + std::to_string(r.seed) + "," +
                   detail::format_g(m.ber_theoretical, 9) + "," + detail::format_g(m.ber_empirical, 9) + "," +
                   detail::format_g(m.ber_stderr, 9) + "," + detail::format_g(m.mse_sic, 9) + "," +
                   detail::format_g(m.mse_stderr_sic, 9) + "," + detail::format_g(m.mse_mmse, 9) + "," +
                   detail::format_g(m.mse_stderr_mmse, 9) + "\n";
        }
    } else {
        for (const auto& r : result.rows) {
            const auto& m = r.metrics;
            nlohmann::ordered_json j;
            j["sweep_var"] = var;
            j["sweep_value"] = r.sweep_value;
            j["n_rx"] = r.n_rx;
            j["trials"] = r.trials;
            j["seed"] = r.seed;
            j["ber_theory"] = m.ber_theoretical;
            j["ber_sim"] = m.ber_empirical;
            j["ber_stderr"] = m.ber_stderr;
            j["mse_sic"] = m.mse_sic;
            j["mse_sic_stderr"] = m.mse_stderr_sic;
            j["mse_mmse"] = m.mse_mmse;
            j["mse_mmse_stderr"] = m.mse_stderr_mmse;
            j["mse_gap"] = m.mse_gap;
            j["mse_gap_stderr"] = m.mse_gap_stderr;
            j["below_acceptance_trials"] = r.below_acceptance_trials;
            out += j.dump() + "\n";
        }
    }
    return out;
}

/// Parses CSV produced by format_results. '#' lines are skipped.
inline SweepResult read_results_csv(std::string_view text)
{
    SweepResult res;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header_seen) {
            if (line != kCsvHeader)
                throw config_error("results CSV: unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (f.size() != 12)
            throw config_error("results CSV: expected 12 fields, got " + std::to_string(f.size()));
        if (f[0] == "beta")
            res.variable = SweepVariable::beta;
        else if (f[0] == "gamma")
            res.variable = SweepVariable::gamma;
        else
            throw config_error("results CSV: bad sweep_var '" + f[0] + "'");
        SweepRow r;
        r.sweep_value = detail::parse_double("sweep_value", f[1]);
        r.n_rx = detail::parse_int("n_rx", f[2]);
        r.trials = detail::parse_u64("trials", f[3]);
        r.seed = detail::parse_u64("seed", f[4]);
        r.metrics.trials = r.trials;
        r.metrics.ber_theoretical = detail::parse_double("ber_theory", f[5]);
        r.metrics.ber_empirical = detail::parse_double("ber_sim", f[6]);
        r.metrics.ber_stderr = detail::parse_double("ber_stderr", f[7]);
        r.metrics.mse_sic = detail::parse_double("mse_sic", f[8]);
        r.metrics.mse_stderr_sic = detail::parse_double("mse_sic_stderr", f[9]);
        r.metrics.mse_mmse = detail::parse_double("mse_mmse", f[10]);
        r.metrics.mse_stderr_mmse = detail::parse_double("mse_mmse_stderr", f[11]);
        r.below_acceptance_trials = r.trials < kAcceptanceTrials;
        res.rows.push_back(r);
    }
    if (!header_seen)
        throw config_error("results CSV: missing header");
    return res;
}

/// Writes the serialized result to path. I/O failures are runtime errors
/// naming the path and the cause.
inline void write_results(const SweepResult& result, OutputFormat format, const std::string& path,
                          const std::string& provenance = {})
{
    const std::string text = format_results(result, format, provenance);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing: " + std::strerror(errno));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed: " + std::strerror(errno));
}

} // namespace isac::cli

#endif
