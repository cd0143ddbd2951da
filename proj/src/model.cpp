#include "slacksim/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace slacksim {

PStateTable::PStateTable(std::vector<PState> states) : states_(std::move(states)) {
    if (states_.size() < 2) {
        throw ConfigError("p-state table needs at least two entries (f_max and f_min)");
    }
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (!(states_[i].frequency_hz > 0.0) || !(states_[i].power_w > 0.0)) {
            throw ConfigError("p-state entries must have positive frequency and power");
        }
        if (i > 0) {
            if (!(states_[i].frequency_hz < states_[i - 1].frequency_hz)) {
                throw ConfigError("p-state frequencies must be strictly decreasing");
            }
            if (!(states_[i].power_w < states_[i - 1].power_w)) {
                throw ConfigError("p-state powers must be strictly decreasing");
            }
        }
    }
}

bool PStateTable::contains(double hz) const {
    return std::any_of(states_.begin(), states_.end(),
                       [hz](const PState& s) { return s.frequency_hz == hz; });
}

double PStateTable::power_at(double hz) const {
    for (const PState& s : states_) {
        if (s.frequency_hz == hz) return s.power_w;
    }
    throw RuntimeFailure("frequency not in p-state table");
}

const PState& pstate_for_frequency(const PStateTable& table, double f_hz) {
    // Table is sorted by descending frequency; pick the last (slowest) entry
    // whose frequency still satisfies the request, i.e. the smallest
    // frequency >= f_hz. Requests below f_min clamp to the f_min entry.
    const auto& st = table.states();
    const PState* chosen = &st.front();
    for (const PState& s : st) {
        if (s.frequency_hz >= f_hz) chosen = &s;
        else break;
    }
    return *chosen;
}

void MachineModel::validate() const {
    if (pstates.size() < 2) {
        throw ConfigError("machine model requires a p-state table with at least two entries");
    }
    if (!(pcu_quantum > 0.0)) throw ConfigError("pcu_quantum must be positive");
    if (!(net_latency >= 0.0)) throw ConfigError("net_latency must be non-negative");
    if (!(net_bandwidth > 0.0)) throw ConfigError("net_bandwidth must be positive");
    if (!(beta_comp >= 0.0 && beta_comp <= 1.0)) throw ConfigError("beta_comp must be in [0, 1]");
    if (!(gamma_copy >= 0.0 && gamma_copy <= 1.0)) throw ConfigError("gamma_copy must be in [0, 1]");
    if (!(collective_scale > 0.0)) throw ConfigError("collective_scale must be positive");
}

const char* phase_kind_name(PhaseKind k) {
    switch (k) {
        case PhaseKind::Comp: return "comp";
        case PhaseKind::Slack: return "slack";
        case PhaseKind::Copy: return "copy";
        case PhaseKind::Overhead: return "overhead";
    }
    return "?";
}

double& PhaseTotals::by_kind(PhaseKind k) {
    switch (k) {
        case PhaseKind::Comp: return comp;
        case PhaseKind::Slack: return slack;
        case PhaseKind::Copy: return copy;
        case PhaseKind::Overhead: return overhead;
    }
    return comp;
}

double PhaseTotals::by_kind(PhaseKind k) const {
    return const_cast<PhaseTotals*>(this)->by_kind(k);
}

void Workload::validate_structure() const {
    if (n_ranks <= 0) throw ConfigError("workload needs at least one rank");
    if (static_cast<int>(tasks.size()) != n_ranks) {
        throw ConfigError("workload task lists do not match n_ranks");
    }
    for (int r = 0; r < n_ranks; ++r) {
        for (const Task& t : tasks[r]) {
            if (!(t.comp_time_fmax >= 0.0) || !std::isfinite(t.comp_time_fmax)) {
                throw ConfigError("task comp_time_fmax must be finite and non-negative");
            }
            if (t.comp_time_fmax > 0.0 && t.instructions == 0) {
                throw ConfigError("task with positive comp time needs a positive instruction count");
            }
            if (!t.mpi) continue;
            const MpiPrimitive& p = *t.mpi;
            if (p.kind == MpiKind::Collective) {
                if (p.communicator.size() < 2) {
                    throw ConfigError("collective communicator needs at least two ranks");
                }
                std::set<RankId> uniq(p.communicator.begin(), p.communicator.end());
                if (uniq.size() != p.communicator.size()) {
                    throw ConfigError("collective communicator has duplicate ranks");
                }
                if (!std::is_sorted(p.communicator.begin(), p.communicator.end())) {
                    throw ConfigError("collective communicator must be sorted");
                }
                if (!uniq.count(r)) {
                    throw ConfigError("collective communicator must include the calling rank");
                }
                for (RankId m : p.communicator) {
                    if (m < 0 || m >= n_ranks) throw ConfigError("communicator rank out of range");
                }
            } else {
                if (p.peer < 0 || p.peer >= n_ranks) throw ConfigError("p2p peer out of range");
                if (p.peer == r) throw ConfigError("p2p peer must differ from the calling rank");
            }
        }
    }
}

void TraceRecord::validate() const {
    if (rank < 0) throw ConfigError("trace rank must be non-negative");
    if (mpi_type.empty()) throw ConfigError("trace mpi_type must be non-empty");
    if (n_procs < 1) throw ConfigError("trace n_procs must be at least 1");
    if (!(locality >= 0.0 && locality <= 1.0)) throw ConfigError("trace locality must be in [0, 1]");
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(t_comp) || !ok(t_slack) || !ok(t_copy)) {
        throw ConfigError("trace durations must be finite and non-negative");
    }
}

double comp_duration(const MachineModel& machine, double comp_time_fmax, double f_hz) {
    if (comp_time_fmax == 0.0) return 0.0;
    const double f_max = machine.pstates.f_max();
    return comp_time_fmax * (machine.beta_comp + (1.0 - machine.beta_comp) * f_max / f_hz);
}

double copy_base_cost(const MachineModel& machine, const MpiPrimitive& prim) {
    const double bytes = static_cast<double>(std::max(prim.bytes_sent, prim.bytes_recv));
    double cost = machine.net_latency + bytes / machine.net_bandwidth;
    if (prim.kind == MpiKind::Collective) {
        cost *= machine.collective_scale * std::log2(static_cast<double>(prim.communicator.size()));
    }
    return cost;
}

double copy_duration(const MachineModel& machine, const MpiPrimitive& prim, double f_hz) {
    const double base = copy_base_cost(machine, prim);
    const double f_max = machine.pstates.f_max();
    return base * (machine.gamma_copy + (1.0 - machine.gamma_copy) * f_max / f_hz);
}

}  // namespace slacksim
