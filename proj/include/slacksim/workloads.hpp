#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slacksim/model.hpp"

namespace slacksim {

enum class Pattern {
    BalancedBarrier,
    ImbalancedBarrier,
    IrregularAlternating,
    ShortPhase,
    P2PRing,
    BspStencil,
};

const char* pattern_name(Pattern p);
Pattern pattern_from_name(const std::string& name);

struct GeneratorSpec {
    Pattern pattern = Pattern::BalancedBarrier;
    int n_ranks = 2;
    int n_iterations = 1;
    double comp_mean = 0.0;      // seconds at f_max
    double imbalance = 0.0;      // spread fraction in [0, 1]
    double jitter = 0.0;         // per-iteration randomness fraction in [0, 1)
    std::uint64_t message_bytes = 0;
    std::uint64_t seed = 0;
    std::string name;            // defaults to the pattern token

    void validate() const;
};

/// Deterministic synthetic workload. Same spec (seed included) -> identical
/// workload. Every pattern's comp-time formula is documented in the README.
Workload generate(const GeneratorSpec& spec);

/// Workload JSON (schema "slacksim-workload/v1").
std::string workload_to_json(const Workload& w);
Workload workload_from_json(const std::string& text);
void write_workload(const Workload& w, const std::string& path);
Workload read_workload(const std::string& path);

/// Trace CSV with the mandatory header
/// rank,mpi_type,bytes_recv,bytes_sent,n_procs,locality,callsite_id,t_comp,t_slack,t_copy
/// durations in seconds. Malformed rows raise ConfigError naming line and column.
std::vector<TraceRecord> read_trace(const std::string& path);
void write_trace(const std::vector<TraceRecord>& records, const std::string& path);
std::string trace_to_csv(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> trace_from_csv(const std::string& text);

/// One record per (rank, task with an MPI primitive) from a finished run, in
/// per-rank program order: the simulated event profiler's output.
std::vector<TraceRecord> export_trace_from_sim(const SimResult& result, const Workload& w);

}  // namespace slacksim
