#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slacksim {

using RankId = int;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or malformed input file (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Runtime failure: unreadable file, deadlocked workload, bad policy request (CLI exit code 1).
struct RuntimeFailure : Error {
    using Error::Error;
};

/// One discrete voltage/frequency operating point of a core.
struct PState {
    double frequency_hz = 0.0;
    double power_w = 0.0;  // average package+DRAM power attributed per rank
};

/// P-state table sorted by strictly descending frequency (and power).
/// front() is the f_max entry, back() the f_min entry.
class PStateTable {
public:
    PStateTable() = default;
    explicit PStateTable(std::vector<PState> states);

    const std::vector<PState>& states() const { return states_; }
    double f_max() const { return states_.front().frequency_hz; }
    double f_min() const { return states_.back().frequency_hz; }
    std::size_t size() const { return states_.size(); }

    /// True if hz is exactly one of the table frequencies.
    bool contains(double hz) const;

    /// Power drawn while running at a table frequency. Throws if hz is not in the table.
    double power_at(double hz) const;

private:
    std::vector<PState> states_;
};

/// Entry with the smallest frequency >= f; clamps to the f_min entry below the table.
const PState& pstate_for_frequency(const PStateTable& table, double f_hz);

struct MachineModel {
    PStateTable pstates;
    double pcu_quantum = 500e-6;    // seconds between effective P-state changes
    double net_latency = 1e-6;      // seconds per message
    double net_bandwidth = 5e9;     // bytes per second
    double beta_comp = 0.4;         // frequency-insensitive fraction of compute time
    double gamma_copy = 0.5;        // frequency-insensitive fraction of copy time
    double collective_scale = 1.0;  // multiplier on the log2(p) collective cost

    void validate() const;
};

enum class MpiKind { Collective, Send, Recv };

/// Blocking MPI primitive descriptor. Collectives carry the communicator
/// (sorted rank ids); P2P carries peer + tag. callsite_id stands in for the
/// stack-trace hash that identifies the static call location.
struct MpiPrimitive {
    MpiKind kind = MpiKind::Collective;
    std::string op_name;               // "MPI_Barrier", "MPI_Send", ...
    std::vector<RankId> communicator;  // collective only
    RankId peer = -1;                  // send/recv only
    int tag = 0;                       // send/recv only
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_recv = 0;
    std::uint64_t callsite_id = 0;

    int n_procs() const { return kind == MpiKind::Collective ? static_cast<int>(communicator.size()) : 2; }
};

/// Compute region followed by an optional blocking primitive. The terminal
/// task of a rank has no primitive.
struct Task {
    double comp_time_fmax = 0.0;    // compute duration at f_max, seconds
    std::uint64_t instructions = 0; // retired instructions in the compute region
    std::optional<MpiPrimitive> mpi;
};

struct Workload {
    std::string name;
    std::uint64_t seed = 0;
    int n_ranks = 0;
    std::vector<std::vector<Task>> tasks;  // per rank, in program order

    /// Structural field checks (ranges, communicator membership). Deadlock
    /// freedom is the engine's validate_workload.
    void validate_structure() const;
};

enum class PhaseKind { Comp, Slack, Copy, Overhead };

const char* phase_kind_name(PhaseKind k);

struct FreqStep {
    double time = 0.0;
    double frequency_hz = 0.0;
};

/// Contiguous span of one phase on one rank. frequency_profile starts with an
/// entry at `start` and lists the effective changes inside [start, end].
struct PhaseInterval {
    RankId rank = 0;
    PhaseKind kind = PhaseKind::Comp;
    double start = 0.0;
    double end = 0.0;
    std::vector<FreqStep> frequency_profile;

    double duration() const { return end - start; }
};

struct PhaseTotals {
    double comp = 0.0;
    double slack = 0.0;
    double copy = 0.0;
    double overhead = 0.0;

    double sum() const { return comp + slack + copy + overhead; }
    double& by_kind(PhaseKind k);
    double by_kind(PhaseKind k) const;
};

/// Measured per-task durations, the profiler's view of one task.
struct TaskStats {
    std::size_t task_index = 0;
    bool has_mpi = false;
    double t_comp = 0.0;
    double t_overhead = 0.0;
    double t_slack = 0.0;
    double t_copy = 0.0;
};

struct SimResult {
    std::string policy_name;
    double makespan = 0.0;
    std::vector<std::vector<PhaseInterval>> timelines;  // per rank
    std::vector<PhaseTotals> rank_totals;
    PhaseTotals totals;
    std::vector<double> rank_finish;
    std::vector<double> rank_energy_j;
    double energy_j = 0.0;
    PhaseTotals reduced;  // time spent below f_max, by phase kind
    double reduced_total = 0.0;
    std::uint64_t transition_count = 0;
    std::vector<std::vector<TaskStats>> task_stats;  // per rank, per task
};

/// One row of the event-profiler trace schema.
struct TraceRecord {
    RankId rank = 0;
    std::string mpi_type;
    std::uint64_t bytes_recv = 0;
    std::uint64_t bytes_sent = 0;
    int n_procs = 0;
    double locality = 1.0;  // fraction of node-local participants, [0, 1]
    std::uint64_t callsite_id = 0;
    double t_comp = 0.0;
    double t_slack = 0.0;
    double t_copy = 0.0;

    void validate() const;
};

/// Compute duration at frequency f: comp_time_fmax * (beta + (1-beta) * f_max/f).
double comp_duration(const MachineModel& machine, double comp_time_fmax, double f_hz);

/// Base (f_max) cost of a primitive's copy phase: latency + bytes/bandwidth,
/// times collective_scale * log2(|communicator|) for collectives.
double copy_base_cost(const MachineModel& machine, const MpiPrimitive& prim);

/// Copy duration at frequency f: base * (gamma + (1-gamma) * f_max/f).
double copy_duration(const MachineModel& machine, const MpiPrimitive& prim, double f_hz);

}  // namespace slacksim
