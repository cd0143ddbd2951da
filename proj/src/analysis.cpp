#include "slacksim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "slacksim/numfmt.hpp"

namespace slacksim {

double smape(double pred, double actual) {
    if (!(pred >= 0.0) || !(actual >= 0.0)) {
        throw RuntimeFailure("smape requires non-negative inputs");
    }
    const double denom = pred + actual;
    if (denom == 0.0) return 0.0;
    return 100.0 * std::abs(pred - actual) / denom;
}

std::vector<TargetPrediction> last_value_predict(const std::vector<TraceRecord>& records) {
    std::vector<TargetPrediction> out(records.size());
    std::map<std::tuple<RankId, std::uint64_t, std::string>, TargetPrediction> last;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const TraceRecord& r = records[i];
        const auto key = std::make_tuple(r.rank, r.callsite_id, r.mpi_type);
        if (auto it = last.find(key); it != last.end()) out[i] = it->second;
        TargetPrediction seen;
        seen.has = true;
        seen.t_comp = r.t_comp;
        seen.t_slack = r.t_slack;
        seen.t_copy = r.t_copy;
        last[key] = seen;
    }
    return out;
}

namespace {

struct SmapeAccum {
    std::size_t n = 0;
    double comp = 0.0, slack = 0.0, copy = 0.0;

    void add(const TargetPrediction& pred, const TraceRecord& actual) {
        ++n;
        comp += smape(pred.t_comp, actual.t_comp);
        slack += smape(pred.t_slack, actual.t_slack);
        copy += smape(pred.t_copy, actual.t_copy);
    }

    PredictionStats stats() const {
        PredictionStats s;
        s.n_predicted = n;
        if (n > 0) {
            s.smape_t_comp = comp / static_cast<double>(n);
            s.smape_t_slack = slack / static_cast<double>(n);
            s.smape_t_copy = copy / static_cast<double>(n);
        }
        return s;
    }
};

}  // namespace

PredictionReport predictability(const std::vector<TraceRecord>& records, double min_duration) {
    if (!(min_duration >= 0.0)) throw ConfigError("min-duration must be non-negative");
    std::vector<TraceRecord> kept;
    for (const TraceRecord& r : records) {
        if (r.t_comp + r.t_slack + r.t_copy > min_duration) kept.push_back(r);
    }

    PredictionReport report;
    report.min_duration = min_duration;
    report.n_records = kept.size();

    SmapeAccum with, without;
    const std::vector<TargetPrediction> preds = last_value_predict(kept);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (preds[i].has) with.add(preds[i], kept[i]);
    }
    // Without previous-run info the predictor may only match on the static
    // call features, not on where in the program the call happened.
    std::map<std::tuple<std::string, std::uint64_t, std::uint64_t, int>, TargetPrediction>
        last_static;
    for (const TraceRecord& r : kept) {
        const auto key = std::make_tuple(r.mpi_type, r.bytes_recv, r.bytes_sent, r.n_procs);
        if (auto it = last_static.find(key); it != last_static.end()) without.add(it->second, r);
        TargetPrediction seen;
        seen.has = true;
        seen.t_comp = r.t_comp;
        seen.t_slack = r.t_slack;
        seen.t_copy = r.t_copy;
        last_static[key] = seen;
    }
    report.with_info = with.stats();
    report.without_info = without.stats();
    return report;
}

ComparisonRow compare_policies(const Workload& w, const MachineModel& m,
                               const std::vector<PolicySpec>& policies) {
    const bool has_baseline = std::any_of(policies.begin(), policies.end(), [](const PolicySpec& p) {
        return p.kind == PolicyKind::Baseline;
    });
    if (!has_baseline) throw ConfigError("policy comparison requires Baseline in the policy list");

    ComparisonRow row;
    row.app = w.name;
    std::vector<SimResult> results;
    results.reserve(policies.size());
    for (const PolicySpec& p : policies) results.push_back(run_simulation(w, m, p));

    const SimResult* base = nullptr;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        if (policies[i].kind == PolicyKind::Baseline) {
            base = &results[i];
            break;
        }
    }

    for (const SimResult& res : results) {
        PolicyMetrics pm;
        pm.policy = res.policy_name;
        pm.makespan_s = res.makespan;
        pm.energy_j = res.energy_j;
        pm.avg_power_w = res.makespan > 0.0 ? res.energy_j / res.makespan : 0.0;
        pm.transitions = res.transition_count;
        pm.overhead_pct = (res.makespan - base->makespan) / base->makespan * 100.0;
        pm.energy_saving_pct = (base->energy_j - res.energy_j) / base->energy_j * 100.0;
        const double p_base = base->energy_j / base->makespan;
        pm.power_saving_pct = (p_base - pm.avg_power_w) / p_base * 100.0;
        row.policies.push_back(std::move(pm));
    }
    check_metric_identity(row);
    return row;
}

void check_metric_identity(const ComparisonRow& row) {
    for (const PolicyMetrics& pm : row.policies) {
        const double lhs = 1.0 - pm.energy_saving_pct / 100.0;
        const double rhs = (1.0 + pm.overhead_pct / 100.0) * (1.0 - pm.power_saving_pct / 100.0);
        if (std::abs(lhs - rhs) > 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)})) {
            throw RuntimeFailure("metric identity violated for policy " + pm.policy + " on " +
                                 row.app);
        }
    }
}

std::vector<CoverageRow> coverage_table(
    const std::vector<std::pair<std::string, std::vector<TraceRecord>>>& apps,
    const std::vector<PolicySpec>& policies, const MachineModel& m) {
    std::vector<CoverageRow> rows;
    for (const auto& [app, records] : apps) {
        if (records.empty()) throw RuntimeFailure("empty trace for application: " + app);
        CoverageRow row;
        row.app = app;
        row.n_records = records.size();
        for (const PolicySpec& p : policies) {
            const CoverageResult cov = replay_trace(records, p, m);
            row.tcomm_pct = cov.tcomm_pct;
            row.tslack_pct = cov.tslack_pct;
            row.avg_mpi_ms = cov.avg_mpi_ms;
            row.policy_coverage_pct.emplace_back(cov.policy_name, cov.coverage_pct);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string render_compare_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "app";
    if (!rows.empty()) {
        for (const PolicyMetrics& pm : rows.front().policies) {
            if (pm.policy == "Baseline") continue;
            os << ',' << pm.policy << "_overhead_pct" << ',' << pm.policy << "_energy_saving_pct"
               << ',' << pm.policy << "_power_saving_pct";
        }
    }
    os << "\n";
    for (const ComparisonRow& row : rows) {
        os << row.app;
        for (const PolicyMetrics& pm : row.policies) {
            if (pm.policy == "Baseline") continue;
            os << ',' << fmt_double(pm.overhead_pct) << ',' << fmt_double(pm.energy_saving_pct)
               << ',' << fmt_double(pm.power_saving_pct);
        }
        os << "\n";
    }
    return os.str();
}

std::string render_coverage_csv(const std::vector<CoverageRow>& rows) {
    std::ostringstream os;
    os << "app,tcomm_pct,tslack_pct";
    if (!rows.empty()) {
        for (const auto& [name, cov] : rows.front().policy_coverage_pct) {
            (void)cov;
            os << ',' << name << "_pct";
        }
    }
    os << ",avg_mpi_ms\n";
    for (const CoverageRow& row : rows) {
        os << row.app << ',' << fmt_double(row.tcomm_pct) << ',' << fmt_double(row.tslack_pct);
        for (const auto& [name, cov] : row.policy_coverage_pct) {
            (void)name;
            os << ',' << fmt_double(cov);
        }
        os << ',' << fmt_double(row.avg_mpi_ms) << "\n";
    }
    return os.str();
}

std::string render_prediction_csv(
    const std::vector<std::pair<std::string, PredictionReport>>& reports) {
    std::ostringstream os;
    os << "app,variant,n_records,n_predicted,smape_t_comp,smape_t_slack,smape_t_copy\n";
    for (const auto& [app, rep] : reports) {
        const auto emit = [&](const char* variant, const PredictionStats& s) {
            os << app << ',' << variant << ',' << rep.n_records << ',' << s.n_predicted << ','
               << fmt_double(s.smape_t_comp) << ',' << fmt_double(s.smape_t_slack) << ','
               << fmt_double(s.smape_t_copy) << "\n";
        };
        emit("with_previous_info", rep.with_info);
        emit("without_previous_info", rep.without_info);
    }
    return os.str();
}

namespace {

using nlohmann::json;

json totals_to_json(const PhaseTotals& t) {
    json j;
    j["comp_s"] = t.comp;
    j["slack_s"] = t.slack;
    j["copy_s"] = t.copy;
    j["overhead_s"] = t.overhead;
    return j;
}

double rank_reduced_seconds(const SimResult& result, std::size_t rank, double f_max) {
    double reduced = 0.0;
    for (const PhaseInterval& iv : result.timelines[rank]) {
        for (std::size_t i = 0; i < iv.frequency_profile.size(); ++i) {
            const double seg_start = iv.frequency_profile[i].time;
            const double seg_end = (i + 1 < iv.frequency_profile.size())
                                       ? iv.frequency_profile[i + 1].time
                                       : iv.end;
            if (iv.frequency_profile[i].frequency_hz < f_max) reduced += seg_end - seg_start;
        }
    }
    return reduced;
}

}  // namespace

std::string sim_result_to_json(const SimResult& result) {
    json j;
    j["policy"] = result.policy_name;
    j["makespan_s"] = result.makespan;
    j["energy_j"] = result.energy_j;
    j["avg_power_w"] = result.makespan > 0.0 ? result.energy_j / result.makespan : 0.0;
    j["transitions"] = result.transition_count;
    j["totals"] = totals_to_json(result.totals);
    j["reduced"] = totals_to_json(result.reduced);
    j["reduced_total_s"] = result.reduced_total;
    json ranks = json::array();
    for (std::size_t r = 0; r < result.rank_totals.size(); ++r) {
        json rj;
        rj["rank"] = r;
        rj["finish_s"] = result.rank_finish[r];
        rj["energy_j"] = result.rank_energy_j[r];
        rj["totals"] = totals_to_json(result.rank_totals[r]);
        rj["tasks"] = result.task_stats[r].size();
        ranks.push_back(std::move(rj));
    }
    j["ranks"] = std::move(ranks);
    return j.dump(2) + "\n";
}

std::string sim_result_summary_text(const SimResult& result) {
    std::ostringstream os;
    os << "policy: " << result.policy_name << "\n";
    os << "ranks: " << result.rank_totals.size() << "\n";
    os << "makespan_s: " << fmt_double(result.makespan) << "\n";
    os << "energy_j: " << fmt_double(result.energy_j) << "\n";
    os << "avg_power_w: "
       << fmt_double(result.makespan > 0.0 ? result.energy_j / result.makespan : 0.0) << "\n";
    os << "transitions: " << result.transition_count << "\n";
    os << "comp_s: " << fmt_double(result.totals.comp) << "\n";
    os << "slack_s: " << fmt_double(result.totals.slack) << "\n";
    os << "copy_s: " << fmt_double(result.totals.copy) << "\n";
    os << "overhead_s: " << fmt_double(result.totals.overhead) << "\n";
    os << "reduced_total_s: " << fmt_double(result.reduced_total) << "\n";
    os << "reduced_slack_s: " << fmt_double(result.reduced.slack) << "\n";
    os << "reduced_copy_s: " << fmt_double(result.reduced.copy) << "\n";
    os << "reduced_comp_s: " << fmt_double(result.reduced.comp) << "\n";
    os << "reduced_overhead_s: " << fmt_double(result.reduced.overhead) << "\n";
    return os.str();
}

void emit_report(const SimResult& result, const Workload& w, const MachineModel& m,
                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw RuntimeFailure("cannot create output directory: " + out_dir);

    auto write_file = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw RuntimeFailure("cannot open for writing: " + path);
        out << content;
        if (!out) throw RuntimeFailure("failed writing: " + path);
    };

    write_file("summary.txt", sim_result_summary_text(result));
    write_file("summary.json", sim_result_to_json(result));

    const double f_max = m.pstates.f_max();
    std::ostringstream ranks;
    ranks << "rank,finish_s,energy_j,comp_s,slack_s,copy_s,overhead_s,reduced_s\n";
    for (std::size_t r = 0; r < result.rank_totals.size(); ++r) {
        const PhaseTotals& t = result.rank_totals[r];
        ranks << r << ',' << fmt_double(result.rank_finish[r]) << ','
              << fmt_double(result.rank_energy_j[r]) << ',' << fmt_double(t.comp) << ','
              << fmt_double(t.slack) << ',' << fmt_double(t.copy) << ','
              << fmt_double(t.overhead) << ',' << fmt_double(rank_reduced_seconds(result, r, f_max))
              << "\n";
    }
    write_file("ranks.csv", ranks.str());

    // Per-primitive-type aggregates over every (rank, task) with an MPI call.
    struct MpiAgg {
        std::size_t calls = 0;
        double slack = 0.0, copy = 0.0, overhead = 0.0;
    };
    std::map<std::string, MpiAgg> by_type;
    for (int r = 0; r < w.n_ranks; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        for (const TaskStats& st : result.task_stats[ur]) {
            if (!st.has_mpi) continue;
            MpiAgg& agg = by_type[w.tasks[ur][st.task_index].mpi->op_name];
            ++agg.calls;
            agg.slack += st.t_slack;
            agg.copy += st.t_copy;
            agg.overhead += st.t_overhead;
        }
    }
    std::ostringstream mpi;
    mpi << "mpi_type,calls,comm_s,slack_s,copy_s,overhead_s,avg_comm_ms\n";
    for (const auto& [type, agg] : by_type) {
        const double comm = agg.slack + agg.copy + agg.overhead;
        mpi << type << ',' << agg.calls << ',' << fmt_double(comm) << ','
            << fmt_double(agg.slack) << ',' << fmt_double(agg.copy) << ','
            << fmt_double(agg.overhead) << ','
            << fmt_double(agg.calls > 0 ? comm / static_cast<double>(agg.calls) * 1e3 : 0.0)
            << "\n";
    }
    write_file("mpi_report.csv", mpi.str());
}

}  // namespace slacksim
