#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "slacksim/model.hpp"

namespace slacksim {

enum class PolicyKind { Baseline, MinFreq, Fermata, Andante, Adagio, Countdown, CountdownSlack };

const char* policy_kind_name(PolicyKind k);
PolicyKind policy_kind_from_name(const std::string& name);

/// Which runtime governs DVFS, plus its timeout and instrumentation costs.
struct PolicySpec {
    PolicyKind kind = PolicyKind::Baseline;
    double theta = 500e-6;            // timeout threshold, seconds
    double callsite_hash_cost = 0.0;  // per-call Overhead when the policy hashes callsites
    double barrier_cost = 0.0;        // per-call Overhead for the inserted slack-isolation barrier

    /// Spec with the per-kind defaults: Fermata theta 100 ms, all other timed
    /// policies 500 us; callsite_hash_cost 2 us for Fermata/Andante/Adagio.
    static PolicySpec make(PolicyKind kind);

    /// Stable column-friendly name, e.g. "Fermata_100ms", "CountdownSlack".
    std::string display_name() const;
};

/// What a hook asks of the engine. Requests are applied in the order:
/// cancel_timer, arm_timer_after, request_hz.
struct HookResult {
    std::optional<double> request_hz;       // DVFS request, must be a P-state table frequency
    std::optional<double> arm_timer_after;  // arm the rank's one-shot timer at now + value
    bool cancel_timer = false;
};

/// Callbacks the engine invokes on a policy. Slack hooks fire only when the
/// policy requests slack isolation (artificial barriers); the engine still
/// profiles the slack/copy split for reporting either way.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual bool wants_slack_isolation() const { return false; }
    /// Fixed Overhead seconds charged per MPI call (hash + barrier costs).
    virtual double per_call_overhead() const { return 0.0; }

    virtual HookResult on_sim_start(RankId) { return {}; }
    virtual HookResult on_comp_enter(RankId, const Task&, double) { return {}; }
    virtual HookResult on_comm_enter(RankId, const MpiPrimitive&, double) { return {}; }
    virtual HookResult on_slack_enter(RankId, double) { return {}; }
    virtual HookResult on_slack_exit(RankId, double) { return {}; }
    virtual HookResult on_copy_enter(RankId, double) { return {}; }
    virtual HookResult on_copy_exit(RankId, double) { return {}; }
    virtual HookResult on_comm_exit(RankId, const MpiPrimitive&, const TaskStats&, double) { return {}; }
    virtual HookResult on_timer_fire(RankId, double) { return {}; }
};

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const MachineModel& machine);

/// Fermata's look-up table of last observed whole-comm durations, keyed per
/// (rank, callsite).
struct FermataHistory {
    std::map<std::pair<RankId, std::uint64_t>, double> last_t_comm;
};

/// True when the timer should be armed at comm-enter: a previous observation
/// exists for this (rank, callsite) and it was at least twice the threshold.
/// First encounters never arm (new regions run at the highest P-state).
bool fermata_decide(const FermataHistory& history, RankId rank, std::uint64_t callsite,
                    double theta);

/// Per-(rank, callsite) history Andante keeps: last measured durations and
/// instruction count, plus measured instructions-per-second per frequency.
struct AndanteEntry {
    double t_comp = 0.0;
    double t_slack = 0.0;
    std::uint64_t instructions = 0;
    std::map<double, double> ips;  // frequency Hz -> measured IPS
};

/// Lowest table frequency f with instructions / IPS(f) <= t_comp + t_slack.
/// Unvisited frequencies are modelled as IPS(f) = IPS(f_max) * f / f_max.
/// Falls back to f_max when no frequency meets the bound or no IPS estimate
/// exists yet.
double andante_select_frequency(const AndanteEntry& entry, const PStateTable& pstates);

}  // namespace slacksim
