#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slacksim/model.hpp"
#include "slacksim/policies.hpp"
#include "slacksim/workloads.hpp"

namespace slacksim {

/// Ships with the repository defaults: 12 P-states from 2.3 GHz down to
/// 1.2 GHz in 100 MHz steps, per-rank power 8.056 W at f_max falling
/// cubically to 3.56 W (illustrative defaults, not measured hardware),
/// 500 us PCU quantum.
MachineModel default_machine();

/// One workload input: either a generator spec or a serialized workload file.
struct WorkloadSource {
    std::optional<GeneratorSpec> generator;
    std::string file;  // used when generator is absent

    Workload load() const;
};

/// Parsed run configuration (schema "slacksim-config/v1").
struct RunConfig {
    std::uint64_t seed = 0;
    MachineModel machine;
    std::vector<WorkloadSource> workloads;
    std::vector<PolicySpec> policies;
    std::string output_dir = "out";

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
};

/// "500us", "1.5ms", "2s", or a bare number of seconds -> seconds.
double parse_duration(const std::string& text);

/// The default comparison set: Baseline, MinFreq,
/// Fermata(100ms), Fermata(500us), Andante, Adagio, Countdown,
/// CountdownSlack.
std::vector<PolicySpec> default_policy_set();

/// Replay/coverage default columns: Fermata(100ms), Fermata(500us),
/// Countdown, CountdownSlack.
std::vector<PolicySpec> default_coverage_policies();

/// All defaults rendered as a JSON document (for the `defaults` subcommand).
std::string defaults_json();

}  // namespace slacksim
