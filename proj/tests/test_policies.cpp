#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "slacksim/policies.hpp"

using namespace slacksim;
using testutil::two_state_machine;

TEST_CASE("policy names round-trip and tolerate separators") {
    for (PolicyKind k : {PolicyKind::Baseline, PolicyKind::MinFreq, PolicyKind::Fermata,
                         PolicyKind::Andante, PolicyKind::Adagio, PolicyKind::Countdown,
                         PolicyKind::CountdownSlack}) {
        CHECK(policy_kind_from_name(policy_kind_name(k)) == k);
    }
    CHECK(policy_kind_from_name("countdown-slack") == PolicyKind::CountdownSlack);
    CHECK(policy_kind_from_name("COUNTDOWN_SLACK") == PolicyKind::CountdownSlack);
    CHECK(policy_kind_from_name("min freq") == PolicyKind::MinFreq);
    CHECK(policy_kind_from_name("fermata") == PolicyKind::Fermata);
    CHECK_THROWS_AS(policy_kind_from_name("presto"), ConfigError);
}

TEST_CASE("per-kind defaults: thresholds and instrumentation costs") {
    CHECK(PolicySpec::make(PolicyKind::Fermata).theta == 100e-3);
    CHECK(PolicySpec::make(PolicyKind::Countdown).theta == 500e-6);
    CHECK(PolicySpec::make(PolicyKind::CountdownSlack).theta == 500e-6);
    CHECK(PolicySpec::make(PolicyKind::Adagio).theta == 500e-6);

    CHECK(PolicySpec::make(PolicyKind::Fermata).callsite_hash_cost == 2e-6);
    CHECK(PolicySpec::make(PolicyKind::Andante).callsite_hash_cost == 2e-6);
    CHECK(PolicySpec::make(PolicyKind::Adagio).callsite_hash_cost == 2e-6);
    CHECK(PolicySpec::make(PolicyKind::Countdown).callsite_hash_cost == 0.0);
    CHECK(PolicySpec::make(PolicyKind::Baseline).callsite_hash_cost == 0.0);

    CHECK(PolicySpec::make(PolicyKind::Fermata).display_name() == "Fermata_100ms");
    PolicySpec f = PolicySpec::make(PolicyKind::Fermata);
    f.theta = 500e-6;
    CHECK(f.display_name() == "Fermata_500us");
    f.theta = 2.5e-3;
    CHECK(f.display_name() == "Fermata_2500us");
    CHECK(PolicySpec::make(PolicyKind::CountdownSlack).display_name() == "CountdownSlack");
    CHECK(PolicySpec::make(PolicyKind::MinFreq).display_name() == "MinFreq");
}

TEST_CASE("fermata_decide arms only on warm history >= twice the threshold") {
    FermataHistory h;
    const double theta = 100e-3;
    CHECK(!fermata_decide(h, 0, 42, theta));  // first encounter
    h.last_t_comm[{0, 42}] = 250e-3;
    CHECK(fermata_decide(h, 0, 42, theta));
    h.last_t_comm[{0, 42}] = 150e-3;
    CHECK(!fermata_decide(h, 0, 42, theta));
    h.last_t_comm[{0, 42}] = 200e-3;  // exactly 2*theta arms
    CHECK(fermata_decide(h, 0, 42, theta));
    // histories are per (rank, callsite)
    CHECK(!fermata_decide(h, 1, 42, theta));
    CHECK(!fermata_decide(h, 0, 43, theta));
}

TEST_CASE("andante_select_frequency picks the lowest frequency that fits the budget") {
    const PStateTable table({{2.3e9, 100.0}, {1.2e9, 50.0}});
    AndanteEntry e;
    e.instructions = 2'300'000'000ULL;
    e.ips[2.3e9] = 2.3e9;
    e.ips[1.2e9] = 1.2e9;

    e.t_comp = 1.0;
    e.t_slack = 1.0;  // budget 2.0 s: 2.3e9/1.2e9 = 1.9167 s fits
    CHECK(andante_select_frequency(e, table) == 1.2e9);

    e.t_slack = 0.0;  // budget 1.0 s: only f_max fits
    CHECK(andante_select_frequency(e, table) == 2.3e9);

    SUBCASE("no ips estimates: f_max") {
        AndanteEntry cold;
        cold.t_comp = 1.0;
        cold.t_slack = 1.0;
        cold.instructions = 1;
        CHECK(andante_select_frequency(cold, table) == 2.3e9);
    }
    SUBCASE("non-positive budget: f_max") {
        e.t_comp = 0.0;
        e.t_slack = 0.0;
        CHECK(andante_select_frequency(e, table) == 2.3e9);
    }
    SUBCASE("unvisited frequencies use the linear model from f_max") {
        AndanteEntry lin;
        lin.instructions = 2'300'000'000ULL;
        lin.ips[2.3e9] = 2.3e9;
        lin.t_comp = 1.0;
        lin.t_slack = 1.0;
        // IPS(1.2 GHz) modelled as 1.2e9: 1.9167 s <= 2.0 s
        CHECK(andante_select_frequency(lin, table) == 1.2e9);
        lin.t_slack = 0.5;  // 1.9167 > 1.5, f_max only
        CHECK(andante_select_frequency(lin, table) == 2.3e9);
    }
    SUBCASE("measured ips overrides the linear model") {
        AndanteEntry meas;
        meas.instructions = 2'300'000'000ULL;
        meas.ips[2.3e9] = 2.3e9;
        meas.ips[1.2e9] = 0.9e9;  // slower than linear: 2.556 s > 2.0 s
        meas.t_comp = 1.0;
        meas.t_slack = 1.0;
        CHECK(andante_select_frequency(meas, table) == 2.3e9);
    }
    SUBCASE("no f_max measurement: anchor scales from the fastest visited") {
        AndanteEntry part;
        part.instructions = 1'200'000'000ULL;
        part.ips[1.2e9] = 1.2e9;  // implies IPS(f) = f
        part.t_comp = 0.9;
        part.t_slack = 0.2;  // budget 1.1: 1.2e9/1.2e9 = 1.0 fits at f_min
        CHECK(andante_select_frequency(part, table) == 1.2e9);
    }
}

TEST_CASE("make_policy validates its inputs") {
    const MachineModel m = two_state_machine();
    PolicySpec p = PolicySpec::make(PolicyKind::Countdown);
    CHECK_NOTHROW(make_policy(p, m));

    SUBCASE("negative hash cost") {
        p.callsite_hash_cost = -1e-6;
        CHECK_THROWS_AS(make_policy(p, m), ConfigError);
    }
    SUBCASE("negative barrier cost") {
        p.barrier_cost = -1.0;
        CHECK_THROWS_AS(make_policy(p, m), ConfigError);
    }
    SUBCASE("timed policies need positive theta") {
        p.theta = 0.0;
        CHECK_THROWS_AS(make_policy(p, m), ConfigError);
        PolicySpec base = PolicySpec::make(PolicyKind::Baseline);
        base.theta = 0.0;  // untimed: theta unused
        CHECK_NOTHROW(make_policy(base, m));
    }
}

TEST_CASE("policy objects: isolation flags and per-call overheads") {
    const MachineModel m = two_state_machine();
    auto mk = [&](PolicyKind k) {
        PolicySpec s = PolicySpec::make(k);
        s.callsite_hash_cost = 3e-6;
        s.barrier_cost = 5e-6;
        return make_policy(s, m);
    };
    CHECK(!mk(PolicyKind::Baseline)->wants_slack_isolation());
    CHECK(!mk(PolicyKind::MinFreq)->wants_slack_isolation());
    CHECK(!mk(PolicyKind::Fermata)->wants_slack_isolation());
    CHECK(!mk(PolicyKind::Countdown)->wants_slack_isolation());
    CHECK(mk(PolicyKind::CountdownSlack)->wants_slack_isolation());
    CHECK(mk(PolicyKind::Andante)->wants_slack_isolation());
    CHECK(mk(PolicyKind::Adagio)->wants_slack_isolation());

    CHECK(mk(PolicyKind::Baseline)->per_call_overhead() == 0.0);
    CHECK(mk(PolicyKind::Fermata)->per_call_overhead() == 3e-6);
    CHECK(mk(PolicyKind::Countdown)->per_call_overhead() == 0.0);
    CHECK(mk(PolicyKind::CountdownSlack)->per_call_overhead() == 5e-6);
    CHECK(mk(PolicyKind::Andante)->per_call_overhead() == 3e-6 + 5e-6);
    CHECK(mk(PolicyKind::Adagio)->per_call_overhead() == 3e-6 + 5e-6);
}

TEST_CASE("reactive policy hook protocol, engine-free") {
    const MachineModel m = two_state_machine();
    const double f_min = m.pstates.f_min();
    const double f_max = m.pstates.f_max();
    MpiPrimitive prim = testutil::barrier_on({0, 1}, 42);
    TaskStats stats;
    stats.t_slack = 6e-3;
    stats.t_copy = 1e-3;

    SUBCASE("countdown arms unconditionally and restores only after a fire") {
        PolicySpec s = PolicySpec::make(PolicyKind::Countdown);
        auto p = make_policy(s, m);
        HookResult enter = p->on_comm_enter(0, prim, 1.0);
        REQUIRE(enter.arm_timer_after.has_value());
        CHECK(*enter.arm_timer_after == s.theta);
        CHECK(!enter.request_hz);

        // no fire: exit cancels but does not request anything
        HookResult exit1 = p->on_comm_exit(0, prim, stats, 1.1);
        CHECK(exit1.cancel_timer);
        CHECK(!exit1.request_hz);

        // fire then exit: request f_min, then restore to f_max
        HookResult fire = p->on_timer_fire(0, 2.0);
        REQUIRE(fire.request_hz.has_value());
        CHECK(*fire.request_hz == f_min);
        HookResult exit2 = p->on_comm_exit(0, prim, stats, 2.5);
        CHECK(exit2.cancel_timer);
        REQUIRE(exit2.request_hz.has_value());
        CHECK(*exit2.request_hz == f_max);

        // the restore consumed the reduced flag
        HookResult exit3 = p->on_comm_exit(0, prim, stats, 3.0);
        CHECK(!exit3.request_hz);
    }

    SUBCASE("fermata arms only warm and keys history per rank") {
        PolicySpec s = PolicySpec::make(PolicyKind::Fermata);
        s.theta = 500e-6;
        auto p = make_policy(s, m);
        CHECK(!p->on_comm_enter(0, prim, 0.0).arm_timer_after);
        p->on_comm_exit(0, prim, stats, 1.0);  // records 7 ms >= 2 * 500 us
        CHECK(p->on_comm_enter(0, prim, 2.0).arm_timer_after.has_value());
        CHECK(!p->on_comm_enter(1, prim, 2.0).arm_timer_after);  // rank 1 cold
    }

    SUBCASE("countdown-slack arms at slack-enter, restores at slack-exit") {
        PolicySpec s = PolicySpec::make(PolicyKind::CountdownSlack);
        auto p = make_policy(s, m);
        CHECK(!p->on_comm_enter(0, prim, 0.0).arm_timer_after);
        HookResult enter = p->on_slack_enter(0, 1.0);
        REQUIRE(enter.arm_timer_after.has_value());
        CHECK(*enter.arm_timer_after == s.theta);
        p->on_timer_fire(0, 1.0 + s.theta);
        HookResult exit = p->on_slack_exit(0, 1.5);
        CHECK(exit.cancel_timer);
        REQUIRE(exit.request_hz.has_value());
        CHECK(*exit.request_hz == f_max);
        // copy hooks never request anything
        CHECK(!p->on_copy_enter(0, 1.5).request_hz);
        CHECK(!p->on_copy_exit(0, 1.6).request_hz);
    }

    SUBCASE("baseline and minfreq") {
        auto base = make_policy(PolicySpec::make(PolicyKind::Baseline), m);
        CHECK(!base->on_sim_start(0).request_hz);
        CHECK(!base->on_comm_enter(0, prim, 0.0).arm_timer_after);
        auto minf = make_policy(PolicySpec::make(PolicyKind::MinFreq), m);
        REQUIRE(minf->on_sim_start(0).request_hz.has_value());
        CHECK(*minf->on_sim_start(0).request_hz == f_min);
        CHECK(!minf->on_comm_enter(0, prim, 0.0).arm_timer_after);
    }
}
