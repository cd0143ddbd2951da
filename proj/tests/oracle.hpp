#pragma once

// Independent analytic reference scheduler used to cross-check the engine.
//
// Deliberately structured differently from the production engine: instead of
// a priority queue of scheduled events with generation counters, this oracle
// re-derives the next state transition from scratch on every step (activity
// scanning). Work inside frequency-sensitive phases is tracked as a remaining
// fraction so mid-phase frequency changes rescale the remaining span without
// any event invalidation machinery. It supports the reactive policies only
// (Baseline, MinFreq, Fermata, Countdown, CountdownSlack); the prediction
// policies (Andante, Adagio) carry closed-loop feedback state that would force
// this oracle to mirror the engine's structure, defeating its purpose.

#include <vector>

#include "slacksim/model.hpp"
#include "slacksim/policies.hpp"

namespace slacksim_oracle {

struct OracleResult {
    double makespan = 0.0;
    std::vector<double> rank_finish;
    std::vector<slacksim::PhaseTotals> rank_totals;
    std::vector<double> rank_energy_j;
    double energy_j = 0.0;
    std::uint64_t transition_count = 0;
};

/// Analytic schedule of the workload under one reactive policy.
/// Throws slacksim::RuntimeFailure on deadlock or unsupported policy kind.
OracleResult oracle_run(const slacksim::Workload& w, const slacksim::MachineModel& m,
                        const slacksim::PolicySpec& p);

}  // namespace slacksim_oracle
