#include "slacksim/workloads.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "slacksim/numfmt.hpp"
#include "slacksim/rng.hpp"

namespace slacksim {

namespace {

using nlohmann::json;

/// Nominal instruction throughput at f_max used to synthesize instruction
/// counts from compute durations (2.3e9 retired instructions per second).
constexpr double kInstrRate = 2.3e9;

std::uint64_t instructions_for(double comp_seconds) {
    if (comp_seconds <= 0.0) return 0;
    const double n = std::llround(comp_seconds * kInstrRate);
    return n < 1.0 ? 1 : static_cast<std::uint64_t>(n);
}

std::vector<RankId> full_comm(int n_ranks) {
    std::vector<RankId> c(static_cast<std::size_t>(n_ranks));
    for (int r = 0; r < n_ranks; ++r) c[static_cast<std::size_t>(r)] = r;
    return c;
}

MpiPrimitive barrier_prim(const std::vector<RankId>& comm, std::uint64_t bytes,
                          std::uint64_t callsite) {
    MpiPrimitive p;
    p.kind = MpiKind::Collective;
    p.op_name = bytes > 0 ? "MPI_Allreduce" : "MPI_Barrier";
    p.communicator = comm;
    p.bytes_sent = bytes;
    p.bytes_recv = bytes;
    p.callsite_id = callsite;
    return p;
}

MpiPrimitive send_prim(RankId peer, int tag, std::uint64_t bytes, std::uint64_t callsite) {
    MpiPrimitive p;
    p.kind = MpiKind::Send;
    p.op_name = "MPI_Send";
    p.peer = peer;
    p.tag = tag;
    p.bytes_sent = bytes;
    p.callsite_id = callsite;
    return p;
}

MpiPrimitive recv_prim(RankId peer, int tag, std::uint64_t bytes, std::uint64_t callsite) {
    MpiPrimitive p;
    p.kind = MpiKind::Recv;
    p.op_name = "MPI_Recv";
    p.peer = peer;
    p.tag = tag;
    p.bytes_recv = bytes;
    p.callsite_id = callsite;
    return p;
}

Task comp_task(double comp, MpiPrimitive prim) {
    Task t;
    t.comp_time_fmax = comp;
    t.instructions = instructions_for(comp);
    t.mpi = std::move(prim);
    return t;
}

}  // namespace

const char* pattern_name(Pattern p) {
    switch (p) {
        case Pattern::BalancedBarrier: return "balanced-barrier";
        case Pattern::ImbalancedBarrier: return "imbalanced-barrier";
        case Pattern::IrregularAlternating: return "irregular-alternating";
        case Pattern::ShortPhase: return "short-phase";
        case Pattern::P2PRing: return "p2p-ring";
        case Pattern::BspStencil: return "bsp-stencil";
    }
    return "?";
}

Pattern pattern_from_name(const std::string& name) {
    for (Pattern p : {Pattern::BalancedBarrier, Pattern::ImbalancedBarrier,
                      Pattern::IrregularAlternating, Pattern::ShortPhase, Pattern::P2PRing,
                      Pattern::BspStencil}) {
        if (name == pattern_name(p)) return p;
    }
    throw ConfigError("unknown workload pattern: " + name);
}

void GeneratorSpec::validate() const {
    if (n_ranks < 2) throw ConfigError("generator needs n_ranks >= 2");
    if (n_iterations < 1) throw ConfigError("generator needs n_iterations >= 1");
    if (!(comp_mean >= 0.0) || !std::isfinite(comp_mean)) {
        throw ConfigError("comp_mean must be finite and non-negative");
    }
    if (!(imbalance >= 0.0 && imbalance <= 1.0)) throw ConfigError("imbalance must be in [0, 1]");
    if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("jitter must be in [0, 1)");
    if ((pattern == Pattern::P2PRing || pattern == Pattern::BspStencil) && n_ranks % 2 != 0) {
        throw ConfigError("p2p-ring and bsp-stencil need an even rank count");
    }
}

Workload generate(const GeneratorSpec& spec) {
    spec.validate();
    Workload w;
    w.name = spec.name.empty() ? pattern_name(spec.pattern) : spec.name;
    w.seed = spec.seed;
    w.n_ranks = spec.n_ranks;
    w.tasks.resize(static_cast<std::size_t>(spec.n_ranks));
    RandomStream rng(spec.seed);
    const int n = spec.n_ranks;
    const std::vector<RankId> comm = full_comm(n);

    // Linear imbalance ramp across ranks: comp_mean * (1 + imbalance*(r/(n-1) - 0.5)*2).
    auto ramp = [&](int r) {
        return spec.comp_mean *
               (1.0 + spec.imbalance * (static_cast<double>(r) / (n - 1) - 0.5) * 2.0);
    };
    auto draw_jitter = [&]() { return spec.jitter > 0.0 ? rng.jitter_factor(spec.jitter) : 1.0; };

    switch (spec.pattern) {
        case Pattern::BalancedBarrier:
        case Pattern::ShortPhase: {
            // All ranks share the iteration's comp time; slack stays zero.
            for (int k = 0; k < spec.n_iterations; ++k) {
                const double comp = spec.comp_mean * draw_jitter();
                for (int r = 0; r < n; ++r) {
                    w.tasks[static_cast<std::size_t>(r)].push_back(
                        comp_task(comp, barrier_prim(comm, spec.message_bytes, 100)));
                }
            }
            break;
        }
        case Pattern::ImbalancedBarrier: {
            for (int k = 0; k < spec.n_iterations; ++k) {
                for (int r = 0; r < n; ++r) {
                    const double comp = ramp(r) * draw_jitter();
                    w.tasks[static_cast<std::size_t>(r)].push_back(
                        comp_task(comp, barrier_prim(comm, spec.message_bytes, 100)));
                }
            }
            break;
        }
        case Pattern::IrregularAlternating: {
            // The ramp direction flips every iteration at the same callsite, so
            // last-value predictors are always one phase behind.
            for (int k = 0; k < spec.n_iterations; ++k) {
                for (int r = 0; r < n; ++r) {
                    const double swing = ((r + k) % 2 == 0) ? (1.0 + spec.imbalance)
                                                            : (1.0 - spec.imbalance);
                    const double comp = spec.comp_mean * swing * draw_jitter();
                    w.tasks[static_cast<std::size_t>(r)].push_back(
                        comp_task(comp, barrier_prim(comm, spec.message_bytes, 100)));
                }
            }
            break;
        }
        case Pattern::P2PRing: {
            // Pairwise exchange around an even ring; even ranks send first so
            // the blocking schedule is deadlock-free.
            for (int k = 0; k < spec.n_iterations; ++k) {
                for (int r = 0; r < n; ++r) {
                    const double comp = ramp(r) * draw_jitter();
                    const RankId right = (r + 1) % n;
                    const RankId left = (r - 1 + n) % n;
                    auto& tl = w.tasks[static_cast<std::size_t>(r)];
                    if (r % 2 == 0) {
                        tl.push_back(comp_task(comp, send_prim(right, 0, spec.message_bytes, 200)));
                        tl.push_back(comp_task(0.0, recv_prim(right, 1, spec.message_bytes, 201)));
                    } else {
                        tl.push_back(comp_task(comp, recv_prim(left, 0, spec.message_bytes, 200)));
                        tl.push_back(comp_task(0.0, send_prim(left, 1, spec.message_bytes, 201)));
                    }
                }
            }
            break;
        }
        case Pattern::BspStencil: {
            // Right exchange, left exchange, then a small Allreduce: one BSP
            // superstep per iteration on an even ring.
            for (int k = 0; k < spec.n_iterations; ++k) {
                for (int r = 0; r < n; ++r) {
                    const double comp = ramp(r) * draw_jitter();
                    const RankId right = (r + 1) % n;
                    const RankId left = (r - 1 + n) % n;
                    auto& tl = w.tasks[static_cast<std::size_t>(r)];
                    if (r % 2 == 0) {
                        tl.push_back(comp_task(comp, send_prim(right, 0, spec.message_bytes, 300)));
                        tl.push_back(comp_task(0.0, recv_prim(right, 1, spec.message_bytes, 301)));
                        tl.push_back(comp_task(0.0, send_prim(left, 2, spec.message_bytes, 302)));
                        tl.push_back(comp_task(0.0, recv_prim(left, 3, spec.message_bytes, 303)));
                    } else {
                        tl.push_back(comp_task(comp, recv_prim(left, 0, spec.message_bytes, 300)));
                        tl.push_back(comp_task(0.0, send_prim(left, 1, spec.message_bytes, 301)));
                        tl.push_back(comp_task(0.0, recv_prim(right, 2, spec.message_bytes, 302)));
                        tl.push_back(comp_task(0.0, send_prim(right, 3, spec.message_bytes, 303)));
                    }
                    tl.push_back(comp_task(0.0, barrier_prim(comm, 8, 304)));
                }
            }
            break;
        }
    }
    w.validate_structure();
    return w;
}

namespace {

json prim_to_json(const MpiPrimitive& p) {
    json j;
    switch (p.kind) {
        case MpiKind::Collective: j["kind"] = "collective"; break;
        case MpiKind::Send: j["kind"] = "send"; break;
        case MpiKind::Recv: j["kind"] = "recv"; break;
    }
    j["op"] = p.op_name;
    if (p.kind == MpiKind::Collective) {
        j["communicator"] = p.communicator;
    } else {
        j["peer"] = p.peer;
        j["tag"] = p.tag;
    }
    j["bytes_sent"] = p.bytes_sent;
    j["bytes_recv"] = p.bytes_recv;
    j["callsite_id"] = p.callsite_id;
    return j;
}

MpiPrimitive prim_from_json(const json& j) {
    MpiPrimitive p;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "collective") p.kind = MpiKind::Collective;
    else if (kind == "send") p.kind = MpiKind::Send;
    else if (kind == "recv") p.kind = MpiKind::Recv;
    else throw ConfigError("unknown mpi kind in workload file: " + kind);
    p.op_name = j.at("op").get<std::string>();
    if (p.kind == MpiKind::Collective) {
        p.communicator = j.at("communicator").get<std::vector<RankId>>();
    } else {
        p.peer = j.at("peer").get<RankId>();
        p.tag = j.value("tag", 0);
    }
    p.bytes_sent = j.value("bytes_sent", std::uint64_t{0});
    p.bytes_recv = j.value("bytes_recv", std::uint64_t{0});
    p.callsite_id = j.value("callsite_id", std::uint64_t{0});
    return p;
}

}  // namespace

std::string workload_to_json(const Workload& w) {
    json j;
    j["schema"] = "slacksim-workload/v1";
    j["name"] = w.name;
    j["seed"] = w.seed;
    j["n_ranks"] = w.n_ranks;
    json ranks = json::array();
    for (const auto& tasks : w.tasks) {
        json tl = json::array();
        for (const Task& t : tasks) {
            json tj;
            tj["comp_time_fmax"] = t.comp_time_fmax;
            tj["instructions"] = t.instructions;
            if (t.mpi) tj["mpi"] = prim_to_json(*t.mpi);
            tl.push_back(std::move(tj));
        }
        ranks.push_back(std::move(tl));
    }
    j["ranks"] = std::move(ranks);
    return j.dump(2) + "\n";
}

Workload workload_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("workload file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != "slacksim-workload/v1") {
            throw ConfigError("unsupported workload schema: " +
                              j.at("schema").get<std::string>());
        }
        Workload w;
        w.name = j.value("name", std::string{});
        w.seed = j.value("seed", std::uint64_t{0});
        w.n_ranks = j.at("n_ranks").get<int>();
        for (const json& tl : j.at("ranks")) {
            std::vector<Task> tasks;
            for (const json& tj : tl) {
                Task t;
                t.comp_time_fmax = tj.at("comp_time_fmax").get<double>();
                t.instructions = tj.value("instructions", std::uint64_t{0});
                if (tj.contains("mpi")) t.mpi = prim_from_json(tj.at("mpi"));
                tasks.push_back(std::move(t));
            }
            w.tasks.push_back(std::move(tasks));
        }
        w.validate_structure();
        return w;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed workload file: ") + e.what());
    }
}

void write_workload(const Workload& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot open for writing: " + path);
    out << workload_to_json(w);
    if (!out) throw RuntimeFailure("failed writing workload file: " + path);
}

Workload read_workload(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open workload file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return workload_from_json(buf.str());
}

namespace {

constexpr const char* kTraceHeader =
    "rank,mpi_type,bytes_recv,bytes_sent,n_procs,locality,callsite_id,t_comp,t_slack,t_copy";
constexpr const char* kTraceColumns[10] = {"rank",     "mpi_type", "bytes_recv", "bytes_sent",
                                           "n_procs",  "locality", "callsite_id", "t_comp",
                                           "t_slack",  "t_copy"};

[[noreturn]] void row_error(std::size_t line_no, const char* column, const std::string& what) {
    std::ostringstream os;
    os << "trace line " << line_no << ", column " << column << ": " << what;
    throw ConfigError(os.str());
}

template <typename T>
T parse_num(const std::string& field, std::size_t line_no, const char* column) {
    T value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) row_error(line_no, column, "'" + field + "' is not a number");
    return value;
}

}  // namespace

std::string trace_to_csv(const std::vector<TraceRecord>& records) {
    std::ostringstream os;
    os << kTraceHeader << "\n";
    for (const TraceRecord& r : records) {
        os << r.rank << ',' << r.mpi_type << ',' << r.bytes_recv << ',' << r.bytes_sent << ','
           << r.n_procs << ',' << fmt_double(r.locality) << ',' << r.callsite_id << ','
           << fmt_double(r.t_comp) << ',' << fmt_double(r.t_slack) << ','
           << fmt_double(r.t_copy) << "\n";
    }
    return os.str();
}

std::vector<TraceRecord> trace_from_csv(const std::string& text) {
    std::vector<TraceRecord> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        std::cerr << "warning: empty trace file (no header)\n";
        return records;
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) {
        throw ConfigError("trace header mismatch; expected: " + std::string(kTraceHeader));
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (fields.size() != 10) {
            std::ostringstream os;
            os << "trace line " << line_no << ": expected 10 fields, found " << fields.size();
            throw ConfigError(os.str());
        }
        TraceRecord r;
        r.rank = parse_num<int>(fields[0], line_no, kTraceColumns[0]);
        r.mpi_type = fields[1];
        r.bytes_recv = parse_num<std::uint64_t>(fields[2], line_no, kTraceColumns[2]);
        r.bytes_sent = parse_num<std::uint64_t>(fields[3], line_no, kTraceColumns[3]);
        r.n_procs = parse_num<int>(fields[4], line_no, kTraceColumns[4]);
        r.locality = parse_num<double>(fields[5], line_no, kTraceColumns[5]);
        r.callsite_id = parse_num<std::uint64_t>(fields[6], line_no, kTraceColumns[6]);
        r.t_comp = parse_num<double>(fields[7], line_no, kTraceColumns[7]);
        r.t_slack = parse_num<double>(fields[8], line_no, kTraceColumns[8]);
        r.t_copy = parse_num<double>(fields[9], line_no, kTraceColumns[9]);
        try {
            r.validate();
        } catch (const ConfigError& e) {
            std::ostringstream os;
            os << "trace line " << line_no << ": " << e.what();
            throw ConfigError(os.str());
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<TraceRecord> read_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return trace_from_csv(buf.str());
}

void write_trace(const std::vector<TraceRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot open for writing: " + path);
    out << trace_to_csv(records);
    if (!out) throw RuntimeFailure("failed writing trace file: " + path);
}

std::vector<TraceRecord> export_trace_from_sim(const SimResult& result, const Workload& w) {
    std::vector<TraceRecord> records;
    for (int r = 0; r < w.n_ranks; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        for (const TaskStats& st : result.task_stats[ur]) {
            if (!st.has_mpi) continue;
            const MpiPrimitive& p = *w.tasks[ur][st.task_index].mpi;
            TraceRecord rec;
            rec.rank = r;
            rec.mpi_type = p.op_name;
            rec.bytes_recv = p.bytes_recv;
            rec.bytes_sent = p.bytes_sent;
            rec.n_procs = p.n_procs();
            rec.locality = 1.0;
            rec.callsite_id = p.callsite_id;
            rec.t_comp = st.t_comp;
            rec.t_slack = st.t_slack;
            rec.t_copy = st.t_copy;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

}  // namespace slacksim
