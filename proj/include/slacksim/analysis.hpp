#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slacksim/engine.hpp"
#include "slacksim/model.hpp"
#include "slacksim/policies.hpp"

namespace slacksim {

/// Symmetric mean absolute percentage error of one prediction, in [0, 100]:
/// 100 * |pred - actual| / (pred + actual), with smape(0, 0) = 0 by
/// convention. Requires pred >= 0 and actual >= 0.
double smape(double pred, double actual);

struct TargetPrediction {
    bool has = false;  // false for the first encounter of a key
    double t_comp = 0.0;
    double t_slack = 0.0;
    double t_copy = 0.0;
};

/// Last-value prediction per record: the targets of the most recent earlier
/// record with the same (rank, callsite_id, mpi_type). Uses only records
/// strictly before the one being predicted.
std::vector<TargetPrediction> last_value_predict(const std::vector<TraceRecord>& records);

struct PredictionStats {
    std::size_t n_predicted = 0;
    double smape_t_comp = 0.0;   // unweighted mean over predicted records
    double smape_t_slack = 0.0;
    double smape_t_copy = 0.0;
};

struct PredictionReport {
    double min_duration = 0.0;
    std::size_t n_records = 0;   // records surviving the min-duration filter
    PredictionStats with_info;     // keyed (rank, callsite_id, mpi_type)
    PredictionStats without_info;  // keyed (mpi_type, bytes_recv, bytes_sent, n_procs)
};

/// Last-value predictability of a trace under both feature sets. Records
/// whose total duration (t_comp + t_slack + t_copy) is not strictly greater
/// than min_duration are dropped before prediction.
PredictionReport predictability(const std::vector<TraceRecord>& records, double min_duration);

struct PolicyMetrics {
    std::string policy;
    double makespan_s = 0.0;
    double energy_j = 0.0;
    double avg_power_w = 0.0;      // energy / makespan
    double overhead_pct = 0.0;     // (T - T_base) / T_base * 100
    double energy_saving_pct = 0.0;  // (E_base - E) / E_base * 100
    double power_saving_pct = 0.0;   // (P_base - P) / P_base * 100
    std::uint64_t transitions = 0;
};

struct ComparisonRow {
    std::string app;
    std::vector<PolicyMetrics> policies;  // in input order; Baseline included
};

/// Runs every policy on the workload and reports overhead / energy saving /
/// power saving against the Baseline run (which must be in the list).
ComparisonRow compare_policies(const Workload& w, const MachineModel& m,
                               const std::vector<PolicySpec>& policies);

/// Throws RuntimeFailure unless every row entry satisfies
/// (1 - es/100) = (1 + oh/100) * (1 - ps/100) to 1e-9 relative.
void check_metric_identity(const ComparisonRow& row);

struct CoverageRow {
    std::string app;
    std::size_t n_records = 0;
    double tcomm_pct = 0.0;
    double tslack_pct = 0.0;
    std::vector<std::pair<std::string, double>> policy_coverage_pct;
    double avg_mpi_ms = 0.0;
};

/// Open-loop slack-isolation potential per application trace.
std::vector<CoverageRow> coverage_table(
    const std::vector<std::pair<std::string, std::vector<TraceRecord>>>& apps,
    const std::vector<PolicySpec>& policies, const MachineModel& m);

/// CSV renderers (deterministic; shortest round-trip numbers).
std::string render_compare_csv(const std::vector<ComparisonRow>& rows);
std::string render_coverage_csv(const std::vector<CoverageRow>& rows);
std::string render_prediction_csv(const std::vector<std::pair<std::string, PredictionReport>>& reports);

std::string sim_result_to_json(const SimResult& result);
std::string sim_result_summary_text(const SimResult& result);

/// Hierarchical report for one finished run: summary.txt, summary.json,
/// ranks.csv, mpi_report.csv under out_dir (created if missing).
void emit_report(const SimResult& result, const Workload& w, const MachineModel& m,
                 const std::string& out_dir);

}  // namespace slacksim
