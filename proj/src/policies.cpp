#include "slacksim/policies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "slacksim/numfmt.hpp"

namespace slacksim {

const char* policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::Baseline: return "Baseline";
        case PolicyKind::MinFreq: return "MinFreq";
        case PolicyKind::Fermata: return "Fermata";
        case PolicyKind::Andante: return "Andante";
        case PolicyKind::Adagio: return "Adagio";
        case PolicyKind::Countdown: return "Countdown";
        case PolicyKind::CountdownSlack: return "CountdownSlack";
    }
    return "?";
}

PolicyKind policy_kind_from_name(const std::string& name) {
    std::string s;
    for (char c : name) {
        if (c == '-' || c == '_' || c == ' ') continue;
        s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (s == "baseline") return PolicyKind::Baseline;
    if (s == "minfreq") return PolicyKind::MinFreq;
    if (s == "fermata") return PolicyKind::Fermata;
    if (s == "andante") return PolicyKind::Andante;
    if (s == "adagio") return PolicyKind::Adagio;
    if (s == "countdown") return PolicyKind::Countdown;
    if (s == "countdownslack") return PolicyKind::CountdownSlack;
    throw ConfigError("unknown policy name: " + name);
}

namespace {

std::string compact_duration(double seconds) {
    const double ms = seconds * 1e3;
    const double us = seconds * 1e6;
    if (ms >= 1.0 && std::abs(ms - std::round(ms)) < 1e-9) {
        return fmt_double(std::round(ms)) + "ms";
    }
    if (std::abs(us - std::round(us)) < 1e-9) {
        return fmt_double(std::round(us)) + "us";
    }
    return fmt_double(seconds) + "s";
}

}  // namespace

PolicySpec PolicySpec::make(PolicyKind kind) {
    PolicySpec s;
    s.kind = kind;
    s.theta = (kind == PolicyKind::Fermata) ? 100e-3 : 500e-6;
    const bool hashes = kind == PolicyKind::Fermata || kind == PolicyKind::Andante ||
                        kind == PolicyKind::Adagio;
    s.callsite_hash_cost = hashes ? 2e-6 : 0.0;
    s.barrier_cost = 0.0;
    return s;
}

std::string PolicySpec::display_name() const {
    if (kind == PolicyKind::Fermata) {
        return std::string("Fermata_") + compact_duration(theta);
    }
    return policy_kind_name(kind);
}

bool fermata_decide(const FermataHistory& history, RankId rank, std::uint64_t callsite,
                    double theta) {
    auto it = history.last_t_comm.find({rank, callsite});
    return it != history.last_t_comm.end() && it->second >= 2.0 * theta;
}

double andante_select_frequency(const AndanteEntry& entry, const PStateTable& pstates) {
    const double f_max = pstates.f_max();
    if (entry.ips.empty()) return f_max;
    const double budget = entry.t_comp + entry.t_slack;
    if (!(budget > 0.0)) return f_max;

    // IPS at f_max anchors the linear model for unvisited frequencies; use the
    // measurement when present, otherwise scale from the fastest visited one.
    double ips_fmax = 0.0;
    if (auto it = entry.ips.find(f_max); it != entry.ips.end()) {
        ips_fmax = it->second;
    } else {
        auto hi = std::prev(entry.ips.end());  // map is keyed ascending by frequency
        if (hi->first > 0.0) ips_fmax = hi->second * f_max / hi->first;
    }
    if (!(ips_fmax > 0.0)) return f_max;

    const auto& states = pstates.states();
    for (auto rit = states.rbegin(); rit != states.rend(); ++rit) {
        const double f = rit->frequency_hz;
        double ips = ips_fmax * f / f_max;
        if (auto it = entry.ips.find(f); it != entry.ips.end()) ips = it->second;
        if (ips > 0.0 && static_cast<double>(entry.instructions) / ips <= budget) return f;
    }
    return f_max;
}

namespace {

class BaselinePolicy : public Policy {
public:
    explicit BaselinePolicy(std::string name) : name_(std::move(name)) {}
    std::string name() const override { return name_; }

private:
    std::string name_;
};

class MinFreqPolicy : public Policy {
public:
    MinFreqPolicy(std::string name, double f_min) : name_(std::move(name)), f_min_(f_min) {}
    std::string name() const override { return name_; }
    HookResult on_sim_start(RankId) override {
        HookResult r;
        r.request_hz = f_min_;
        return r;
    }

private:
    std::string name_;
    double f_min_;
};

/// Shared plumbing for the reactive timeout policies: remembers, per rank,
/// whether the timer fired (i.e. the rank currently sits below f_max).
class TimeoutPolicyBase : public Policy {
public:
    TimeoutPolicyBase(std::string name, double theta, double f_min, double f_max)
        : name_(std::move(name)), theta_(theta), f_min_(f_min), f_max_(f_max) {}
    std::string name() const override { return name_; }

    HookResult on_timer_fire(RankId rank, double) override {
        reduced_[rank] = true;
        HookResult r;
        r.request_hz = f_min_;
        return r;
    }

protected:
    HookResult cancel_and_restore(RankId rank) {
        HookResult r;
        r.cancel_timer = true;
        auto it = reduced_.find(rank);
        if (it != reduced_.end() && it->second) {
            r.request_hz = f_max_;
            it->second = false;
        }
        return r;
    }

    std::string name_;
    double theta_;
    double f_min_;
    double f_max_;
    std::map<RankId, bool> reduced_;
};

class FermataPolicy : public TimeoutPolicyBase {
public:
    FermataPolicy(std::string name, double theta, double hash_cost, double f_min, double f_max)
        : TimeoutPolicyBase(std::move(name), theta, f_min, f_max), hash_cost_(hash_cost) {}

    double per_call_overhead() const override { return hash_cost_; }

    HookResult on_comm_enter(RankId rank, const MpiPrimitive& prim, double) override {
        HookResult r;
        if (fermata_decide(history_, rank, prim.callsite_id, theta_)) r.arm_timer_after = theta_;
        return r;
    }

    HookResult on_comm_exit(RankId rank, const MpiPrimitive& prim, const TaskStats& stats,
                            double) override {
        HookResult r = cancel_and_restore(rank);
        history_.last_t_comm[{rank, prim.callsite_id}] =
            stats.t_overhead + stats.t_slack + stats.t_copy;
        return r;
    }

private:
    double hash_cost_;
    FermataHistory history_;
};

class CountdownPolicy : public TimeoutPolicyBase {
public:
    using TimeoutPolicyBase::TimeoutPolicyBase;

    HookResult on_comm_enter(RankId, const MpiPrimitive&, double) override {
        HookResult r;
        r.arm_timer_after = theta_;
        return r;
    }

    HookResult on_comm_exit(RankId rank, const MpiPrimitive&, const TaskStats&, double) override {
        return cancel_and_restore(rank);
    }
};

class CountdownSlackPolicy : public TimeoutPolicyBase {
public:
    CountdownSlackPolicy(std::string name, double theta, double barrier_cost, double f_min,
                         double f_max)
        : TimeoutPolicyBase(std::move(name), theta, f_min, f_max), barrier_cost_(barrier_cost) {}

    bool wants_slack_isolation() const override { return true; }
    double per_call_overhead() const override { return barrier_cost_; }

    HookResult on_slack_enter(RankId, double) override {
        HookResult r;
        r.arm_timer_after = theta_;
        return r;
    }

    HookResult on_slack_exit(RankId rank, double) override { return cancel_and_restore(rank); }

private:
    double barrier_cost_;
};

class AndantePolicy : public Policy {
public:
    AndantePolicy(std::string name, double per_call_overhead, const PStateTable& pstates)
        : name_(std::move(name)),
          per_call_overhead_(per_call_overhead),
          pstates_(pstates),
          f_max_(pstates.f_max()) {}

    std::string name() const override { return name_; }
    bool wants_slack_isolation() const override { return true; }
    double per_call_overhead() const override { return per_call_overhead_; }

    HookResult on_comp_enter(RankId rank, const Task& task, double) override {
        Scratch& s = scratch_[rank];
        s.active = task.mpi.has_value();
        if (!s.active) return {};
        s.callsite = task.mpi->callsite_id;
        s.instructions = task.instructions;
        s.requested_hz = f_max_;
        if (auto it = history_.find({rank, s.callsite}); it != history_.end()) {
            s.requested_hz = andante_select_frequency(it->second, pstates_);
        }
        HookResult r;
        r.request_hz = s.requested_hz;
        return r;
    }

    HookResult on_comm_enter(RankId, const MpiPrimitive&, double) override {
        HookResult r;
        r.request_hz = f_max_;
        return r;
    }

    HookResult on_comm_exit(RankId rank, const MpiPrimitive& prim, const TaskStats& stats,
                            double) override {
        const Scratch& s = scratch_[rank];
        AndanteEntry& e = history_[{rank, prim.callsite_id}];
        e.t_comp = stats.t_comp;
        e.t_slack = stats.t_slack;
        e.instructions = s.instructions;
        if (stats.t_comp > 0.0 && s.instructions > 0) {
            e.ips[s.requested_hz] = static_cast<double>(s.instructions) / stats.t_comp;
        }
        return {};
    }

protected:
    struct Scratch {
        bool active = false;
        std::uint64_t callsite = 0;
        std::uint64_t instructions = 0;
        double requested_hz = 0.0;
    };

    std::string name_;
    double per_call_overhead_;
    PStateTable pstates_;
    double f_max_;
    std::map<std::pair<RankId, std::uint64_t>, AndanteEntry> history_;
    std::map<RankId, Scratch> scratch_;
};

class AdagioPolicy : public AndantePolicy {
public:
    AdagioPolicy(std::string name, double per_call_overhead, double theta,
                 const PStateTable& pstates)
        : AndantePolicy(std::move(name), per_call_overhead, pstates),
          theta_(theta),
          f_min_(pstates.f_min()) {}

    HookResult on_slack_enter(RankId rank, double) override {
        const Scratch& s = scratch_[rank];
        if (!s.active) return {};
        auto it = history_.find({rank, s.callsite});
        HookResult r;
        if (it != history_.end() && it->second.t_slack >= 2.0 * theta_) r.arm_timer_after = theta_;
        return r;
    }

    HookResult on_timer_fire(RankId rank, double) override {
        reduced_[rank] = true;
        HookResult r;
        r.request_hz = f_min_;
        return r;
    }

    HookResult on_slack_exit(RankId rank, double) override {
        HookResult r;
        r.cancel_timer = true;
        auto it = reduced_.find(rank);
        if (it != reduced_.end() && it->second) {
            r.request_hz = f_max_;
            it->second = false;
        }
        return r;
    }

private:
    double theta_;
    double f_min_;
    std::map<RankId, bool> reduced_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const MachineModel& machine) {
    if (!(spec.callsite_hash_cost >= 0.0) || !std::isfinite(spec.callsite_hash_cost)) {
        throw ConfigError("callsite_hash_cost must be finite and non-negative");
    }
    if (!(spec.barrier_cost >= 0.0) || !std::isfinite(spec.barrier_cost)) {
        throw ConfigError("barrier_cost must be finite and non-negative");
    }
    const bool timed = spec.kind == PolicyKind::Fermata || spec.kind == PolicyKind::Adagio ||
                       spec.kind == PolicyKind::Countdown || spec.kind == PolicyKind::CountdownSlack;
    if (timed && !(spec.theta > 0.0 && std::isfinite(spec.theta))) {
        throw ConfigError("timeout policies need a positive finite theta");
    }
    const PStateTable& ps = machine.pstates;
    const std::string name = spec.display_name();
    switch (spec.kind) {
        case PolicyKind::Baseline:
            return std::make_unique<BaselinePolicy>(name);
        case PolicyKind::MinFreq:
            return std::make_unique<MinFreqPolicy>(name, ps.f_min());
        case PolicyKind::Fermata:
            return std::make_unique<FermataPolicy>(name, spec.theta, spec.callsite_hash_cost,
                                                   ps.f_min(), ps.f_max());
        case PolicyKind::Andante:
            return std::make_unique<AndantePolicy>(
                name, spec.callsite_hash_cost + spec.barrier_cost, ps);
        case PolicyKind::Adagio:
            return std::make_unique<AdagioPolicy>(
                name, spec.callsite_hash_cost + spec.barrier_cost, spec.theta, ps);
        case PolicyKind::Countdown:
            return std::make_unique<CountdownPolicy>(name, spec.theta, ps.f_min(), ps.f_max());
        case PolicyKind::CountdownSlack:
            return std::make_unique<CountdownSlackPolicy>(name, spec.theta, spec.barrier_cost,
                                                          ps.f_min(), ps.f_max());
    }
    throw ConfigError("unknown policy kind");
}

}  // namespace slacksim
