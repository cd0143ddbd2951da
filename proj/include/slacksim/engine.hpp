#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "slacksim/model.hpp"
#include "slacksim/policies.hpp"

namespace slacksim {

struct DeadlockReport {
    bool ok = true;
    std::string message;
    std::vector<std::pair<RankId, std::size_t>> blocked;  // (rank, task index)
};

/// Proves the blocking schedule completes by matching primitives at infinite
/// speed (rendezvous semantics: a Send blocks until its Recv arrives). On
/// failure names every blocked (rank, task index).
DeadlockReport validate_workload(const Workload& w);

/// Time at which a DVFS request issued at request_time becomes effective:
/// the next quantum boundary, i.e. ceil(request_time/quantum)*quantum. A
/// request exactly on a boundary is effective immediately. Ratios within
/// 1e-9 relative of an integer are treated as exactly on the boundary.
double pcu_effective_time(double request_time, double quantum);

/// Closed-loop deterministic discrete-event simulation of the workload under
/// one policy. Frequencies chosen by the policy change compute/copy durations
/// and hence the emergent slack.
SimResult run_simulation(const Workload& w, const MachineModel& m, const PolicySpec& p);

/// Open-loop replay outcome: how much of the trace's total time the policy
/// would have spent at reduced frequency (recorded durations stay fixed).
struct CoverageResult {
    std::string policy_name;
    std::size_t n_records = 0;
    double total_s = 0.0;
    double reduced_s = 0.0;
    double coverage_pct = 0.0;  // reduced / total * 100
    double tcomm_pct = 0.0;     // sum(t_slack + t_copy) / total * 100
    double tslack_pct = 0.0;    // sum(t_slack) / total * 100
    double avg_mpi_ms = 0.0;    // mean(t_slack + t_copy) in milliseconds
};

/// Runs the policy's timer logic against fixed recorded durations, in record
/// order. Records must be grouped per rank in temporal order (the trace
/// writer's order); histories are keyed (rank, callsite) so interleaving
/// across ranks is harmless.
CoverageResult replay_trace(const std::vector<TraceRecord>& records, const PolicySpec& p,
                            const MachineModel& m);

}  // namespace slacksim
