#pragma once

// Shared builders for the test binaries: small machines and workloads with
// hand-computable schedules.

#include <cstdint>
#include <string>
#include <vector>

#include "slacksim/model.hpp"

namespace testutil {

using namespace slacksim;

/// Two P-states: 2.3 GHz @ 100 W and 1.2 GHz @ 50 W. Latency tuned so a
/// 2-rank zero-byte barrier costs exactly `barrier_copy_s` at f_max
/// (base = latency * log2(2) = latency).
inline MachineModel two_state_machine(double barrier_copy_s = 1e-3, double beta = 0.0,
                                      double gamma = 1.0, double quantum = 500e-6) {
    MachineModel m;
    m.pstates = PStateTable({{2.3e9, 100.0}, {1.2e9, 50.0}});
    m.pcu_quantum = quantum;
    m.net_latency = barrier_copy_s;
    m.net_bandwidth = 1e9;
    m.beta_comp = beta;
    m.gamma_copy = gamma;
    m.collective_scale = 1.0;
    return m;
}

inline MpiPrimitive barrier_on(std::vector<RankId> comm, std::uint64_t callsite = 100,
                               std::uint64_t bytes = 0) {
    MpiPrimitive p;
    p.kind = MpiKind::Collective;
    p.op_name = bytes > 0 ? "MPI_Allreduce" : "MPI_Barrier";
    p.communicator = std::move(comm);
    p.bytes_sent = bytes;
    p.bytes_recv = bytes;
    p.callsite_id = callsite;
    return p;
}

inline MpiPrimitive send_to(RankId peer, int tag = 0, std::uint64_t bytes = 0,
                            std::uint64_t callsite = 200) {
    MpiPrimitive p;
    p.kind = MpiKind::Send;
    p.op_name = "MPI_Send";
    p.peer = peer;
    p.tag = tag;
    p.bytes_sent = bytes;
    p.callsite_id = callsite;
    return p;
}

inline MpiPrimitive recv_from(RankId peer, int tag = 0, std::uint64_t bytes = 0,
                              std::uint64_t callsite = 201) {
    MpiPrimitive p;
    p.kind = MpiKind::Recv;
    p.op_name = "MPI_Recv";
    p.peer = peer;
    p.tag = tag;
    p.bytes_recv = bytes;
    p.callsite_id = callsite;
    return p;
}

inline Task comp_task(double seconds) {
    Task t;
    t.comp_time_fmax = seconds;
    t.instructions = seconds > 0.0 ? static_cast<std::uint64_t>(seconds * 2.3e9) : 0;
    return t;
}

inline Task comp_then(double seconds, MpiPrimitive prim) {
    Task t = comp_task(seconds);
    t.mpi = std::move(prim);
    return t;
}

/// n_iters iterations of (per-rank comp, barrier over all ranks), one comp
/// value per rank, repeated each iteration.
inline Workload barrier_workload(std::vector<double> comps, int n_iters = 1,
                                 std::uint64_t callsite = 100) {
    Workload w;
    w.name = "test-barrier";
    w.n_ranks = static_cast<int>(comps.size());
    std::vector<RankId> everyone;
    for (RankId r = 0; r < w.n_ranks; ++r) everyone.push_back(r);
    w.tasks.resize(comps.size());
    for (std::size_t r = 0; r < comps.size(); ++r) {
        for (int k = 0; k < n_iters; ++k) {
            w.tasks[r].push_back(comp_then(comps[r], barrier_on(everyone, callsite)));
        }
    }
    return w;
}

/// The worked 2-rank imbalanced case: r0 comp 10 ms, r1 comp 4 ms, one 2-rank
/// barrier whose copy costs 1 ms at f_max on the two_state_machine.
inline Workload imbalanced_case(int n_iters = 1) {
    return barrier_workload({10e-3, 4e-3}, n_iters);
}

}  // namespace testutil
