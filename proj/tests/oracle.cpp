#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "slacksim/engine.hpp"  // pcu_effective_time (leaf helper, not the scheduler)

namespace slacksim_oracle {

using namespace slacksim;

namespace {

enum class Stage { Comp, Overhead, Waiting, Copy, Done };

struct ORank {
    std::size_t task = 0;
    Stage stage = Stage::Comp;
    double stage_start = 0.0;
    double stage_end = 0.0;  // Comp/Overhead/Copy only

    double freq = 0.0;
    bool has_pending = false;
    double pending_hz = 0.0;
    double pending_at = 0.0;

    bool timer_armed = false;
    double timer_at = 0.0;
    bool reduced = false;

    PhaseTotals totals;
    std::vector<FreqStep> flog;
    double finish = 0.0;

    // Per-task measurements feeding the Fermata history.
    double cur_overhead = 0.0;
    double cur_slack = 0.0;
    double cur_copy = 0.0;
};

struct Oracle {
    const Workload& w;
    const MachineModel& m;
    const PolicySpec& p;
    double f_max;
    double f_min;
    double theta;
    std::vector<ORank> ranks;
    std::uint64_t transitions = 0;

    // Collective occurrence counters and p2p occurrence counters, used to pair
    // the k-th arrival of each participant with the k-th instance of the sync.
    std::map<std::vector<RankId>, std::map<RankId, std::uint64_t>> coll_counts;
    std::map<std::tuple<RankId, RankId, int>, std::uint64_t> send_counts, recv_counts;
    // Signature each waiting rank currently blocks on.
    struct CollSig {
        std::vector<RankId> comm;
        std::uint64_t occurrence = 0;
    };
    struct P2PSig {
        RankId src = 0, dst = 0;
        int tag = 0;
        std::uint64_t occurrence = 0;
        bool sender = false;
    };
    std::map<RankId, CollSig> waiting_coll;
    std::map<RankId, P2PSig> waiting_p2p;

    std::map<std::pair<RankId, std::uint64_t>, double> fermata_hist;

    Oracle(const Workload& wl, const MachineModel& mm, const PolicySpec& ps)
        : w(wl), m(mm), p(ps) {
        f_max = m.pstates.f_max();
        f_min = m.pstates.f_min();
        theta = p.theta;
    }

    double per_call_overhead() const {
        switch (p.kind) {
            case PolicyKind::Fermata: return p.callsite_hash_cost;
            case PolicyKind::CountdownSlack: return p.barrier_cost;
            default: return 0.0;
        }
    }

    bool isolates() const { return p.kind == PolicyKind::CountdownSlack; }

    double scale(PhaseKind kind, double f) const {
        if (kind == PhaseKind::Comp) return m.beta_comp + (1.0 - m.beta_comp) * f_max / f;
        return m.gamma_copy + (1.0 - m.gamma_copy) * f_max / f;
    }

    void apply(RankId r, double hz, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        if (hz == rs.freq) return;
        const double old = rs.freq;
        rs.freq = hz;
        rs.flog.push_back({now, hz});
        ++transitions;
        if (rs.stage == Stage::Comp || rs.stage == Stage::Copy) {
            const double remaining = rs.stage_end - now;
            if (remaining > 0.0) {
                const PhaseKind k = rs.stage == Stage::Comp ? PhaseKind::Comp : PhaseKind::Copy;
                rs.stage_end = now + remaining / scale(k, old) * scale(k, hz);
            }
        }
    }

    void request(RankId r, double hz, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        const double t_eff = pcu_effective_time(now, m.pcu_quantum);
        // boundary-snap tolerance must match the engine's immediate-apply rule
        const double slop = 1e-9 * std::max(m.pcu_quantum, std::abs(now));
        if (t_eff <= now + slop) {
            rs.has_pending = false;
            apply(r, hz, now);
        } else {
            rs.has_pending = true;  // a newer request always replaces a pending one
            rs.pending_hz = hz;
            rs.pending_at = t_eff;
        }
    }

    const Task& task_of(RankId r) const {
        return w.tasks[static_cast<std::size_t>(r)][ranks[static_cast<std::size_t>(r)].task];
    }

    void start_comp(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        if (rs.task >= w.tasks[static_cast<std::size_t>(r)].size()) {
            rs.stage = Stage::Done;
            rs.finish = now;
            return;
        }
        rs.cur_overhead = rs.cur_slack = rs.cur_copy = 0.0;
        rs.stage = Stage::Comp;
        rs.stage_start = now;
        rs.stage_end = now + comp_duration(m, task_of(r).comp_time_fmax, rs.freq);
    }

    void advance(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        ++rs.task;
        start_comp(r, now);
    }

    void cancel_and_maybe_restore(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        rs.timer_armed = false;
        if (rs.reduced) {
            rs.reduced = false;
            request(r, f_max, now);
        }
    }

    void on_comp_end(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        rs.totals.comp += now - rs.stage_start;
        const Task& t = task_of(r);
        if (!t.mpi) {
            advance(r, now);
            return;
        }
        // comm-enter hooks
        if (p.kind == PolicyKind::Countdown) {
            rs.timer_armed = true;
            rs.timer_at = now + theta;
        } else if (p.kind == PolicyKind::Fermata) {
            auto it = fermata_hist.find({r, t.mpi->callsite_id});
            if (it != fermata_hist.end() && it->second >= 2.0 * theta) {
                rs.timer_armed = true;
                rs.timer_at = now + theta;
            }
        }
        const double oh = per_call_overhead();
        if (oh > 0.0) {
            rs.stage = Stage::Overhead;
            rs.stage_start = now;
            rs.stage_end = now + oh;
        } else {
            arrival(r, now);
        }
    }

    void on_overhead_end(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        rs.totals.overhead += now - rs.stage_start;
        rs.cur_overhead = now - rs.stage_start;
        arrival(r, now);
    }

    void arrival(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        rs.stage = Stage::Waiting;
        rs.stage_start = now;
        if (isolates()) {  // slack-enter: CountdownSlack arms its timer here
            rs.timer_armed = true;
            rs.timer_at = now + theta;
        }
        const MpiPrimitive& prim = *task_of(r).mpi;
        if (prim.kind == MpiKind::Collective) {
            const std::uint64_t occ = coll_counts[prim.communicator][r]++;
            waiting_coll[r] = CollSig{prim.communicator, occ};
            bool all = true;
            for (RankId member : prim.communicator) {
                auto it = waiting_coll.find(member);
                if (it == waiting_coll.end() || it->second.comm != prim.communicator ||
                    it->second.occurrence != occ) {
                    all = false;
                    break;
                }
            }
            if (all) {
                for (RankId member : prim.communicator) waiting_coll.erase(member);
                release(prim.communicator, now);
            }
            return;
        }
        const bool sender = prim.kind == MpiKind::Send;
        const RankId src = sender ? r : prim.peer;
        const RankId dst = sender ? prim.peer : r;
        auto& count = sender ? send_counts : recv_counts;
        const std::uint64_t occ = count[{src, dst, prim.tag}]++;
        waiting_p2p[r] = P2PSig{src, dst, prim.tag, occ, sender};
        auto it = waiting_p2p.find(prim.peer);
        if (it != waiting_p2p.end() && it->second.src == src && it->second.dst == dst &&
            it->second.tag == prim.tag && it->second.occurrence == occ &&
            it->second.sender != sender) {
            waiting_p2p.erase(prim.peer);
            waiting_p2p.erase(r);
            release({std::min(r, prim.peer), std::max(r, prim.peer)}, now);
        }
    }

    void release(const std::vector<RankId>& participants, double now) {
        for (RankId r : participants) {
            ORank& rs = ranks[static_cast<std::size_t>(r)];
            rs.totals.slack += now - rs.stage_start;
            rs.cur_slack = now - rs.stage_start;
            if (isolates()) cancel_and_maybe_restore(r, now);  // slack-exit
            const double dur = copy_duration(m, *task_of(r).mpi, rs.freq);
            rs.stage = Stage::Copy;
            rs.stage_start = now;
            rs.stage_end = now + dur;
        }
    }

    void on_copy_end(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        rs.totals.copy += now - rs.stage_start;
        rs.cur_copy = now - rs.stage_start;
        if (p.kind == PolicyKind::Countdown || p.kind == PolicyKind::Fermata) {
            cancel_and_maybe_restore(r, now);  // comm-exit
        }
        if (p.kind == PolicyKind::Fermata) {
            fermata_hist[{r, task_of(r).mpi->callsite_id}] =
                rs.cur_overhead + rs.cur_slack + rs.cur_copy;
        }
        advance(r, now);
    }

    void on_timer_fire(RankId r, double now) {
        ORank& rs = ranks[static_cast<std::size_t>(r)];
        rs.timer_armed = false;
        rs.reduced = true;
        request(r, f_min, now);
    }

    OracleResult run() {
        switch (p.kind) {
            case PolicyKind::Baseline:
            case PolicyKind::MinFreq:
            case PolicyKind::Fermata:
            case PolicyKind::Countdown:
            case PolicyKind::CountdownSlack:
                break;
            default:
                throw RuntimeFailure("oracle does not model prediction policies");
        }
        const auto n = static_cast<std::size_t>(w.n_ranks);
        ranks.assign(n, ORank{});
        for (std::size_t r = 0; r < n; ++r) {
            ranks[r].freq = f_max;
            ranks[r].flog.push_back({0.0, f_max});
        }
        if (p.kind == PolicyKind::MinFreq) {
            for (RankId r = 0; r < w.n_ranks; ++r) request(r, f_min, 0.0);
        }
        for (RankId r = 0; r < w.n_ranks; ++r) start_comp(r, 0.0);

        // Same-timestamp priorities mirror the documented tie rules: effective
        // frequency changes first, then phase exits, then arrivals, timers last
        // (an exit at the timer's instant wins and the timer never fires).
        for (std::uint64_t step = 0; step < 50'000'000ULL; ++step) {
            double best_t = 0.0;
            int best_c = 0;
            RankId best_r = -1;
            auto consider = [&](double t, int c, RankId r) {
                if (best_r < 0 || t < best_t || (t == best_t && c < best_c)) {
                    best_t = t;
                    best_c = c;
                    best_r = r;
                }
            };
            for (RankId r = 0; r < w.n_ranks; ++r) {
                const ORank& rs = ranks[static_cast<std::size_t>(r)];
                if (rs.has_pending) consider(rs.pending_at, 1, r);
                if (rs.stage == Stage::Copy) consider(rs.stage_end, 2, r);
                if (rs.stage == Stage::Overhead) consider(rs.stage_end, 3, r);
                if (rs.stage == Stage::Comp) consider(rs.stage_end, 4, r);
                if (rs.timer_armed) consider(rs.timer_at, 5, r);
            }
            if (best_r < 0) break;
            ORank& rs = ranks[static_cast<std::size_t>(best_r)];
            switch (best_c) {
                case 1:
                    rs.has_pending = false;
                    apply(best_r, rs.pending_hz, best_t);
                    break;
                case 2: on_copy_end(best_r, best_t); break;
                case 3: on_overhead_end(best_r, best_t); break;
                case 4: on_comp_end(best_r, best_t); break;
                case 5: on_timer_fire(best_r, best_t); break;
            }
        }

        OracleResult out;
        out.rank_finish.resize(n);
        out.rank_totals.resize(n);
        out.rank_energy_j.resize(n);
        out.transition_count = transitions;
        for (std::size_t r = 0; r < n; ++r) {
            if (ranks[r].stage != Stage::Done) {
                throw RuntimeFailure("oracle schedule stalled (deadlock or step limit)");
            }
            out.rank_finish[r] = ranks[r].finish;
            out.rank_totals[r] = ranks[r].totals;
            out.makespan = std::max(out.makespan, ranks[r].finish);
            double energy = 0.0;
            const auto& log = ranks[r].flog;
            for (std::size_t i = 0; i < log.size(); ++i) {
                const double seg_start = log[i].time;
                const double seg_end =
                    (i + 1 < log.size()) ? std::min(log[i + 1].time, ranks[r].finish)
                                         : ranks[r].finish;
                if (seg_end > seg_start) {
                    energy += m.pstates.power_at(log[i].frequency_hz) * (seg_end - seg_start);
                }
            }
            out.rank_energy_j[r] = energy;
            out.energy_j += energy;
        }
        return out;
    }
};

}  // namespace

OracleResult oracle_run(const Workload& w, const MachineModel& m, const PolicySpec& p) {
    Oracle o(w, m, p);
    return o.run();
}

}  // namespace slacksim_oracle
