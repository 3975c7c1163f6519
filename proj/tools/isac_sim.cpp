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

// isac_sim: power sweeps and oracle checks for the SIC and posterior-mean
// receivers. Exit codes: 0 success, 1 validation/config error, 2 runtime error.

#include "isac/cli.hpp"
#include "isac/validation.hpp"

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr const char* kUsage =
    "usage: isac_sim <sweep-beta|sweep-gamma|single-point|validate> [options]\n"
    "  --config PATH           key = value file (# comments)\n"
    "  --output PATH           output file (default: standard output)\n"
    "  --format csv|json-lines output format (default csv)\n"
    "  --threads N             worker threads (default: ISAC_SIM_THREADS or all cores)\n"
    "  --seed N --trials N --n-rx 1,2,4 --n-tx N --sigma2-db DB --theta RAD\n"
    "  --beta X --gamma X --grid-min X --grid-max X --grid-points N\n"
    "  --set key=value         generic override\n";

int run_validate(const isac::cli::RunPlan& plan)
{
    isac::ValidationOptions opt;
    opt.seed = plan.spec.master_seed;
    const auto checks = isac::run_validation(opt);
    int failed = 0;
    for (const auto& c : checks) {
        std::printf("check=%s status=%s metric=%.6g threshold=%.6g detail=\"%s\"\n", c.name.c_str(),
                    c.passed ? "pass" : "FAIL", c.metric, c.threshold, c.detail.c_str());
        failed += c.passed ? 0 : 1;
    }
    std::printf("{\"checks\":%zu,\"passed\":%zu,\"failed\":%d}\n", checks.size(), checks.size() - failed, failed);
    return failed == 0 ? 0 : 1;
}

int run_sweep(const isac::cli::RunPlan& plan)
{
    const unsigned threads = isac::resolve_thread_count(plan.cli.threads.value_or(0));
    const auto result = isac::run_sweep(plan.spec, threads);
    const std::string prov = isac::cli::provenance_line(plan);
    if (plan.cli.output_path.empty())
        std::cout << isac::cli::format_results(result, plan.cli.format, prov);
    else
        isac::cli::write_results(result, plan.cli.format, plan.cli.output_path, prov);
    for (const auto& r : result.rows)
        if (r.below_acceptance_trials) {
            std::cerr << "note: " << r.trials << " trials per point is below the acceptance count of "
                      << isac::kAcceptanceTrials << "\n";
            break;
        }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && (args[0] == "-h" || args[0] == "--help")) {
        std::cout << kUsage;
        return 0;
    }
    try {
        const auto cli = isac::cli::parse_arguments(args);
        const std::string file = cli.config_path ? isac::cli::read_file(*cli.config_path) : std::string{};
        const auto plan = isac::cli::parse_config(cli, file);
        if (cli.subcommand == isac::cli::Subcommand::validate)
            return run_validate(plan);
        return run_sweep(plan);
    } catch (const isac::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n" << kUsage;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
