#include "slacksim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <sstream>
#include <tuple>

namespace slacksim {

double pcu_effective_time(double request_time, double quantum) {
    if (!(quantum > 0.0)) throw ConfigError("pcu quantum must be positive");
    if (request_time <= 0.0) return 0.0;
    const double k = request_time / quantum;
    double n = std::nearbyint(k);
    if (std::abs(k - n) <= 1e-9 * std::max(1.0, std::abs(k))) {
        return n * quantum;  // already on a boundary, up to accumulated rounding
    }
    return std::ceil(k) * quantum;
}

namespace {

// Infinite-speed matching state shared by validate_workload.
struct MatchState {
    struct CollGroup {
        std::vector<std::map<RankId, std::size_t>> arrivals;  // instance -> arrived ranks
        std::map<RankId, std::size_t> next_idx;
    };
    std::map<std::vector<RankId>, CollGroup> collectives;
    // (src, dst, tag) -> counts of arrived sends/recvs; FIFO index pairing.
    std::map<std::tuple<RankId, RankId, int>, std::pair<std::size_t, std::size_t>> p2p_arrived;
};

std::string prim_brief(const MpiPrimitive& p) {
    std::ostringstream os;
    os << p.op_name;
    if (p.kind == MpiKind::Send) os << " -> rank " << p.peer << " tag " << p.tag;
    if (p.kind == MpiKind::Recv) os << " <- rank " << p.peer << " tag " << p.tag;
    return os.str();
}

}  // namespace

DeadlockReport validate_workload(const Workload& w) {
    w.validate_structure();
    MatchState ms;
    std::vector<std::size_t> idx(static_cast<std::size_t>(w.n_ranks), 0);
    // Per rank: whether the current blocking primitive's arrival is registered,
    // and at which instance / FIFO position.
    std::vector<bool> arrived(static_cast<std::size_t>(w.n_ranks), false);
    std::vector<std::size_t> position(static_cast<std::size_t>(w.n_ranks), 0);

    auto try_progress = [&](RankId r) -> bool {
        bool moved = false;
        auto ur = static_cast<std::size_t>(r);
        while (idx[ur] < w.tasks[ur].size()) {
            const Task& t = w.tasks[ur][idx[ur]];
            if (!t.mpi) {
                ++idx[ur];
                moved = true;
                continue;
            }
            const MpiPrimitive& p = *t.mpi;
            if (p.kind == MpiKind::Collective) {
                auto& group = ms.collectives[p.communicator];
                if (!arrived[ur]) {
                    position[ur] = group.next_idx[r]++;
                    if (group.arrivals.size() <= position[ur]) {
                        group.arrivals.resize(position[ur] + 1);
                    }
                    group.arrivals[position[ur]][r] = idx[ur];
                    arrived[ur] = true;
                }
                if (group.arrivals[position[ur]].size() == p.communicator.size()) {
                    arrived[ur] = false;
                    ++idx[ur];
                    moved = true;
                    continue;
                }
                break;
            }
            const bool is_send = p.kind == MpiKind::Send;
            const auto key = is_send ? std::make_tuple(r, p.peer, p.tag)
                                     : std::make_tuple(p.peer, r, p.tag);
            auto& counts = ms.p2p_arrived[key];
            if (!arrived[ur]) {
                position[ur] = is_send ? counts.first++ : counts.second++;
                arrived[ur] = true;
            }
            const std::size_t other = is_send ? counts.second : counts.first;
            if (other > position[ur]) {
                arrived[ur] = false;
                ++idx[ur];
                moved = true;
                continue;
            }
            break;
        }
        return moved;
    };

    bool progress = true;
    while (progress) {
        progress = false;
        for (RankId r = 0; r < w.n_ranks; ++r) {
            if (try_progress(r)) progress = true;
        }
    }

    DeadlockReport report;
    std::ostringstream msg;
    for (RankId r = 0; r < w.n_ranks; ++r) {
        auto ur = static_cast<std::size_t>(r);
        if (idx[ur] < w.tasks[ur].size()) {
            report.ok = false;
            report.blocked.emplace_back(r, idx[ur]);
            if (report.blocked.size() > 1) msg << "; ";
            msg << "rank " << r << " blocked at task " << idx[ur] << " ("
                << prim_brief(*w.tasks[ur][idx[ur]].mpi) << ")";
        }
    }
    if (!report.ok) report.message = "workload deadlocks under blocking semantics: " + msg.str();
    return report;
}

namespace {

// Event classes double as same-timestamp priorities: effective frequency
// changes apply first, then phase exits, then arrivals/entries, and one-shot
// timers last — so an exit and a timer fire at the same instant resolve as
// "exit wins" (the canceled timer never fires).
enum EvClass : int {
    EvDvfsEffective = 1,
    EvCopyEnd = 2,
    EvArrive = 3,
    EvCompEnd = 4,
    EvTimerFire = 5,
};

struct Event {
    double time = 0.0;
    int klass = 0;
    std::uint64_t seq = 0;
    RankId rank = 0;
    std::uint64_t gen = 0;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.klass != b.klass) return a.klass > b.klass;
        return a.seq > b.seq;
    }
};

struct RankState {
    std::size_t task_idx = 0;
    bool done = false;
    double finish = 0.0;

    double freq = 0.0;
    bool dvfs_pending = false;
    double pending_hz = 0.0;
    std::uint64_t dvfs_gen = 0;
    std::vector<FreqStep> freq_log;

    bool timer_armed = false;
    std::uint64_t timer_gen = 0;

    bool phase_open = false;
    PhaseKind phase = PhaseKind::Comp;
    double phase_start = 0.0;
    double phase_end = 0.0;  // scheduled end for Comp/Copy/Overhead; unused while waiting in Slack
    std::uint64_t comp_gen = 0;
    std::uint64_t copy_gen = 0;

    TaskStats stats;
};

class Simulation {
public:
    Simulation(const Workload& w, const MachineModel& m, const PolicySpec& spec)
        : w_(w), m_(m), policy_(make_policy(spec, m)), f_max_(m.pstates.f_max()) {}

    SimResult run();

private:
    struct CollInstance {
        std::map<RankId, double> arrivals;
        bool released = false;
    };
    struct CollGroup {
        std::vector<CollInstance> instances;
        std::map<RankId, std::size_t> next_idx;
    };

    const Workload& w_;
    const MachineModel& m_;
    std::unique_ptr<Policy> policy_;
    double f_max_;

    std::vector<RankState> ranks_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::uint64_t seq_ = 0;

    std::map<std::vector<RankId>, CollGroup> collectives_;
    std::map<std::tuple<RankId, RankId, int>, std::pair<std::deque<RankId>, std::deque<RankId>>>
        p2p_;  // (src, dst, tag) -> (waiting senders, waiting receivers)

    SimResult result_;

    const Task& current_task(RankId r) const {
        return w_.tasks[static_cast<std::size_t>(r)][ranks_[static_cast<std::size_t>(r)].task_idx];
    }

    void push(double time, int klass, RankId rank, std::uint64_t gen) {
        queue_.push(Event{time, klass, seq_++, rank, gen});
    }

    double phase_scale(PhaseKind kind, double f) const {
        if (kind == PhaseKind::Comp) return m_.beta_comp + (1.0 - m_.beta_comp) * f_max_ / f;
        return m_.gamma_copy + (1.0 - m_.gamma_copy) * f_max_ / f;
    }

    void apply_frequency(RankId r, double hz, double now) {
        RankState& rs = ranks_[static_cast<std::size_t>(r)];
        if (hz == rs.freq) return;
        const double old = rs.freq;
        rs.freq = hz;
        rs.freq_log.push_back({now, hz});
        ++result_.transition_count;
        if (!rs.phase_open) return;
        if (rs.phase != PhaseKind::Comp && rs.phase != PhaseKind::Copy) return;
        const double remaining = rs.phase_end - now;
        if (!(remaining > 0.0)) return;
        const double rebased = remaining / phase_scale(rs.phase, old) * phase_scale(rs.phase, hz);
        rs.phase_end = now + rebased;
        if (rs.phase == PhaseKind::Comp) {
            push(rs.phase_end, EvCompEnd, r, ++rs.comp_gen);
        } else {
            push(rs.phase_end, EvCopyEnd, r, ++rs.copy_gen);
        }
    }

    void handle_hook(RankId r, const HookResult& res, double now) {
        RankState& rs = ranks_[static_cast<std::size_t>(r)];
        if (res.cancel_timer) {
            ++rs.timer_gen;
            rs.timer_armed = false;
        }
        if (res.arm_timer_after) {
            if (!(*res.arm_timer_after > 0.0)) {
                throw RuntimeFailure("policy armed a timer with non-positive delay");
            }
            ++rs.timer_gen;
            rs.timer_armed = true;
            push(now + *res.arm_timer_after, EvTimerFire, r, rs.timer_gen);
        }
        if (res.request_hz) {
            const double hz = *res.request_hz;
            if (!m_.pstates.contains(hz)) {
                throw RuntimeFailure("policy requested a frequency outside the p-state table");
            }
            ++rs.dvfs_gen;
            const double t_eff = pcu_effective_time(now, m_.pcu_quantum);
            // Same tolerance as the boundary snap inside pcu_effective_time:
            // when `now` sits on a boundary up to rounding, the snapped
            // absolute time may land an ulp past `now` and must still count
            // as immediate.
            const double slop = 1e-9 * std::max(m_.pcu_quantum, std::abs(now));
            if (t_eff <= now + slop) {
                rs.dvfs_pending = false;
                apply_frequency(r, hz, now);
            } else {
                rs.dvfs_pending = true;
                rs.pending_hz = hz;
                push(t_eff, EvDvfsEffective, r, rs.dvfs_gen);
            }
        }
    }

    double freq_at(const RankState& rs, double t) const {
        double f = rs.freq_log.front().frequency_hz;
        for (const FreqStep& s : rs.freq_log) {
            if (s.time <= t) f = s.frequency_hz;
            else break;
        }
        return f;
    }

    void close_interval(RankId r, PhaseKind kind, double start, double end) {
        if (!(end > start)) return;
        auto ur = static_cast<std::size_t>(r);
        const RankState& rs = ranks_[ur];
        PhaseInterval iv;
        iv.rank = r;
        iv.kind = kind;
        iv.start = start;
        iv.end = end;
        iv.frequency_profile.push_back({start, freq_at(rs, start)});
        for (const FreqStep& s : rs.freq_log) {
            if (s.time > start && s.time < end) iv.frequency_profile.push_back(s);
        }
        // Reduced-time bookkeeping: portions of the interval below f_max.
        for (std::size_t i = 0; i < iv.frequency_profile.size(); ++i) {
            const double seg_start = iv.frequency_profile[i].time;
            const double seg_end =
                (i + 1 < iv.frequency_profile.size()) ? iv.frequency_profile[i + 1].time : end;
            if (iv.frequency_profile[i].frequency_hz < f_max_) {
                result_.reduced.by_kind(kind) += seg_end - seg_start;
            }
        }
        result_.rank_totals[ur].by_kind(kind) += end - start;
        result_.totals.by_kind(kind) += end - start;
        result_.timelines[ur].push_back(std::move(iv));
    }

    void open_phase(RankId r, PhaseKind kind, double start, double end) {
        RankState& rs = ranks_[static_cast<std::size_t>(r)];
        rs.phase_open = true;
        rs.phase = kind;
        rs.phase_start = start;
        rs.phase_end = end;
    }

    void start_task(RankId r, double now) {
        auto ur = static_cast<std::size_t>(r);
        RankState& rs = ranks_[ur];
        if (rs.task_idx >= w_.tasks[ur].size()) {
            rs.done = true;
            rs.finish = now;
            return;
        }
        const Task& t = current_task(r);
        rs.stats = TaskStats{};
        rs.stats.task_index = rs.task_idx;
        rs.stats.has_mpi = t.mpi.has_value();
        handle_hook(r, policy_->on_comp_enter(r, t, now), now);
        const double dur = comp_duration(m_, t.comp_time_fmax, rs.freq);
        open_phase(r, PhaseKind::Comp, now, now + dur);
        push(rs.phase_end, EvCompEnd, r, ++rs.comp_gen);
    }

    void finish_task(RankId r, double now) {
        auto ur = static_cast<std::size_t>(r);
        RankState& rs = ranks_[ur];
        result_.task_stats[ur].push_back(rs.stats);
        ++rs.task_idx;
        start_task(r, now);
    }

    void on_comp_end(RankId r, double now) {
        auto ur = static_cast<std::size_t>(r);
        RankState& rs = ranks_[ur];
        close_interval(r, PhaseKind::Comp, rs.phase_start, now);
        rs.phase_open = false;
        rs.stats.t_comp = now - rs.phase_start;
        const Task& t = current_task(r);
        if (!t.mpi) {
            finish_task(r, now);
            return;
        }
        handle_hook(r, policy_->on_comm_enter(r, *t.mpi, now), now);
        const double oh = policy_->per_call_overhead();
        open_phase(r, PhaseKind::Overhead, now, now + oh);
        if (oh > 0.0) {
            push(now + oh, EvArrive, r, 0);
        } else {
            arrive(r, now);
        }
    }

    void arrive(RankId r, double now) {
        auto ur = static_cast<std::size_t>(r);
        RankState& rs = ranks_[ur];
        close_interval(r, PhaseKind::Overhead, rs.phase_start, now);
        rs.stats.t_overhead = now - rs.phase_start;
        open_phase(r, PhaseKind::Slack, now, now);
        if (policy_->wants_slack_isolation()) {
            handle_hook(r, policy_->on_slack_enter(r, now), now);
        }

        const MpiPrimitive& p = *current_task(r).mpi;
        if (p.kind == MpiKind::Collective) {
            CollGroup& group = collectives_[p.communicator];
            const std::size_t k = group.next_idx[r]++;
            if (group.instances.size() <= k) group.instances.resize(k + 1);
            CollInstance& inst = group.instances[k];
            inst.arrivals[r] = now;
            if (inst.arrivals.size() == p.communicator.size()) {
                inst.released = true;
                release(p.communicator, now);
            }
            return;
        }
        const bool is_send = p.kind == MpiKind::Send;
        const auto key =
            is_send ? std::make_tuple(r, p.peer, p.tag) : std::make_tuple(p.peer, r, p.tag);
        auto& queues = p2p_[key];
        auto& mine = is_send ? queues.first : queues.second;
        auto& theirs = is_send ? queues.second : queues.first;
        if (!theirs.empty()) {
            const RankId other = theirs.front();
            theirs.pop_front();
            std::vector<RankId> participants{std::min(r, other), std::max(r, other)};
            release(participants, now);
        } else {
            mine.push_back(r);
        }
    }

    void release(const std::vector<RankId>& participants, double now) {
        for (RankId p : participants) {
            auto up = static_cast<std::size_t>(p);
            RankState& rs = ranks_[up];
            close_interval(p, PhaseKind::Slack, rs.phase_start, now);
            rs.phase_open = false;
            rs.stats.t_slack = now - rs.phase_start;
            if (policy_->wants_slack_isolation()) {
                handle_hook(p, policy_->on_slack_exit(p, now), now);
            }
            handle_hook(p, policy_->on_copy_enter(p, now), now);
            const double dur = copy_duration(m_, *current_task(p).mpi, rs.freq);
            open_phase(p, PhaseKind::Copy, now, now + dur);
            push(rs.phase_end, EvCopyEnd, p, ++rs.copy_gen);
        }
    }

    void on_copy_end(RankId r, double now) {
        auto ur = static_cast<std::size_t>(r);
        RankState& rs = ranks_[ur];
        close_interval(r, PhaseKind::Copy, rs.phase_start, now);
        rs.phase_open = false;
        rs.stats.t_copy = now - rs.phase_start;
        handle_hook(r, policy_->on_copy_exit(r, now), now);
        handle_hook(r, policy_->on_comm_exit(r, *current_task(r).mpi, rs.stats, now), now);
        finish_task(r, now);
    }
};

SimResult Simulation::run() {
    const DeadlockReport report = validate_workload(w_);
    if (!report.ok) throw RuntimeFailure(report.message);
    m_.validate();

    const auto n = static_cast<std::size_t>(w_.n_ranks);
    ranks_.assign(n, RankState{});
    result_ = SimResult{};
    result_.policy_name = policy_->name();
    result_.timelines.resize(n);
    result_.rank_totals.resize(n);
    result_.rank_finish.resize(n, 0.0);
    result_.rank_energy_j.resize(n, 0.0);
    result_.task_stats.resize(n);

    for (std::size_t r = 0; r < n; ++r) {
        ranks_[r].freq = f_max_;
        ranks_[r].freq_log.push_back({0.0, f_max_});
    }
    for (RankId r = 0; r < w_.n_ranks; ++r) {
        handle_hook(r, policy_->on_sim_start(r), 0.0);
    }
    for (RankId r = 0; r < w_.n_ranks; ++r) {
        start_task(r, 0.0);
    }

    while (!queue_.empty()) {
        const Event e = queue_.top();
        queue_.pop();
        RankState& rs = ranks_[static_cast<std::size_t>(e.rank)];
        switch (e.klass) {
            case EvDvfsEffective:
                if (e.gen != rs.dvfs_gen || !rs.dvfs_pending) break;
                rs.dvfs_pending = false;
                apply_frequency(e.rank, rs.pending_hz, e.time);
                break;
            case EvCopyEnd:
                if (e.gen != rs.copy_gen) break;
                on_copy_end(e.rank, e.time);
                break;
            case EvArrive:
                arrive(e.rank, e.time);
                break;
            case EvCompEnd:
                if (e.gen != rs.comp_gen) break;
                on_comp_end(e.rank, e.time);
                break;
            case EvTimerFire:
                if (e.gen != rs.timer_gen || !rs.timer_armed) break;
                rs.timer_armed = false;
                handle_hook(e.rank, policy_->on_timer_fire(e.rank, e.time), e.time);
                break;
            default:
                throw RuntimeFailure("unknown event class");
        }
    }

    for (std::size_t r = 0; r < n; ++r) {
        if (!ranks_[r].done) {
            throw RuntimeFailure("simulation stalled before completing every rank");
        }
        result_.rank_finish[r] = ranks_[r].finish;
        result_.makespan = std::max(result_.makespan, ranks_[r].finish);
    }

    // Energy: piecewise-constant power over each rank's frequency log, up to
    // that rank's finish time.
    for (std::size_t r = 0; r < n; ++r) {
        const RankState& rs = ranks_[r];
        double energy = 0.0;
        for (std::size_t i = 0; i < rs.freq_log.size(); ++i) {
            const double seg_start = rs.freq_log[i].time;
            const double seg_end =
                (i + 1 < rs.freq_log.size()) ? std::min(rs.freq_log[i + 1].time, rs.finish)
                                             : rs.finish;
            if (seg_end > seg_start) {
                energy += m_.pstates.power_at(rs.freq_log[i].frequency_hz) * (seg_end - seg_start);
            }
        }
        result_.rank_energy_j[r] = energy;
        result_.energy_j += energy;
    }
    result_.reduced_total = result_.reduced.sum();
    return result_;
}

}  // namespace

SimResult run_simulation(const Workload& w, const MachineModel& m, const PolicySpec& p) {
    Simulation sim(w, m, p);
    return sim.run();
}

CoverageResult replay_trace(const std::vector<TraceRecord>& records, const PolicySpec& p,
                            const MachineModel& m) {
    (void)m;
    if (records.empty()) throw RuntimeFailure("cannot replay an empty trace");
    for (const TraceRecord& rec : records) rec.validate();

    CoverageResult out;
    out.policy_name = PolicySpec(p).display_name();
    out.n_records = records.size();

    double total = 0.0, comm = 0.0, slack = 0.0, reduced = 0.0;
    // Last-observation histories for the prediction-gated policies.
    std::map<std::pair<RankId, std::uint64_t>, double> last_comm, last_slack;

    for (const TraceRecord& rec : records) {
        const double t_comm = rec.t_slack + rec.t_copy;
        total += rec.t_comp + t_comm;
        comm += t_comm;
        slack += rec.t_slack;
        const auto key = std::make_pair(rec.rank, rec.callsite_id);
        switch (p.kind) {
            case PolicyKind::Baseline:
            case PolicyKind::Andante:
                break;  // no reactive reduction in open loop
            case PolicyKind::MinFreq:
                reduced += rec.t_comp + t_comm;
                break;
            case PolicyKind::Countdown:
                if (t_comm > p.theta) reduced += t_comm - p.theta;
                break;
            case PolicyKind::Fermata: {
                auto it = last_comm.find(key);
                if (it != last_comm.end() && it->second >= 2.0 * p.theta && t_comm > p.theta) {
                    reduced += t_comm - p.theta;
                }
                last_comm[key] = t_comm;
                break;
            }
            case PolicyKind::CountdownSlack:
                if (rec.t_slack > p.theta) reduced += rec.t_slack - p.theta;
                break;
            case PolicyKind::Adagio: {
                auto it = last_slack.find(key);
                if (it != last_slack.end() && it->second >= 2.0 * p.theta &&
                    rec.t_slack > p.theta) {
                    reduced += rec.t_slack - p.theta;
                }
                last_slack[key] = rec.t_slack;
                break;
            }
        }
    }

    out.total_s = total;
    out.reduced_s = reduced;
    if (total > 0.0) {
        out.coverage_pct = reduced / total * 100.0;
        out.tcomm_pct = comm / total * 100.0;
        out.tslack_pct = slack / total * 100.0;
    }
    out.avg_mpi_ms = comm / static_cast<double>(records.size()) * 1e3;
    return out;
}

}  // namespace slacksim
