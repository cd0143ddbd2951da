#include "slacksim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slacksim/numfmt.hpp"

namespace slacksim {

namespace {

using nlohmann::json;

}  // namespace

MachineModel default_machine() {
    MachineModel m;
    std::vector<PState> states;
    const double f_max = 2.3e9;
    const double tdp_per_core = 145.0 / 18.0;  // watts
    for (double f = f_max; f >= 1.2e9 - 1.0; f -= 0.1e9) {
        const double rel = f / f_max;
        PState s;
        s.frequency_hz = f;
        s.power_w = tdp_per_core * (0.35 + 0.65 * rel * rel * rel);
        states.push_back(s);
    }
    m.pstates = PStateTable(std::move(states));
    m.pcu_quantum = 500e-6;
    m.net_latency = 1e-6;
    m.net_bandwidth = 5e9;
    m.beta_comp = 0.4;
    m.gamma_copy = 0.5;
    m.collective_scale = 1.0;
    return m;
}

double parse_duration(const std::string& text) {
    if (text.empty()) throw ConfigError("empty duration");
    std::size_t unit_pos = text.size();
    while (unit_pos > 0) {
        const char c = text[unit_pos - 1];
        if ((c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E') {
            break;
        }
        --unit_pos;
    }
    const std::string num = text.substr(0, unit_pos);
    const std::string unit = text.substr(unit_pos);
    double value = 0.0;
    const char* first = num.data();
    const char* last = num.data() + num.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw ConfigError("invalid duration: " + text);
    double scale = 1.0;
    if (unit == "s" || unit.empty()) scale = 1.0;
    else if (unit == "ms") scale = 1e-3;
    else if (unit == "us") scale = 1e-6;
    else throw ConfigError("unknown duration unit '" + unit + "' in: " + text +
                           " (use us, ms, or s)");
    const double seconds = value * scale;
    if (!std::isfinite(seconds) || seconds < 0.0) throw ConfigError("invalid duration: " + text);
    return seconds;
}

namespace {

double duration_from_json(const json& j, const char* what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_duration(j.get<std::string>());
    throw ConfigError(std::string(what) + " must be a number of seconds or a duration string");
}

GeneratorSpec generator_from_json(const json& j) {
    GeneratorSpec g;
    g.pattern = pattern_from_name(j.at("pattern").get<std::string>());
    g.n_ranks = j.at("n_ranks").get<int>();
    g.n_iterations = j.value("n_iterations", 1);
    if (j.contains("comp_mean")) g.comp_mean = duration_from_json(j.at("comp_mean"), "comp_mean");
    g.imbalance = j.value("imbalance", 0.0);
    g.jitter = j.value("jitter", 0.0);
    g.message_bytes = j.value("message_bytes", std::uint64_t{0});
    g.seed = j.value("seed", std::uint64_t{0});
    g.name = j.value("name", std::string{});
    g.validate();
    return g;
}

MachineModel machine_from_json(const json& j) {
    MachineModel m = default_machine();
    if (j.contains("pstates")) {
        std::vector<PState> states;
        for (const json& sj : j.at("pstates")) {
            PState s;
            s.frequency_hz = sj.at("frequency_hz").get<double>();
            s.power_w = sj.at("power_w").get<double>();
            states.push_back(s);
        }
        m.pstates = PStateTable(std::move(states));
    }
    if (j.contains("pcu_quantum")) m.pcu_quantum = duration_from_json(j.at("pcu_quantum"), "pcu_quantum");
    if (j.contains("net_latency")) m.net_latency = duration_from_json(j.at("net_latency"), "net_latency");
    if (j.contains("net_bandwidth")) m.net_bandwidth = j.at("net_bandwidth").get<double>();
    if (j.contains("beta_comp")) m.beta_comp = j.at("beta_comp").get<double>();
    if (j.contains("gamma_copy")) m.gamma_copy = j.at("gamma_copy").get<double>();
    if (j.contains("collective_scale")) m.collective_scale = j.at("collective_scale").get<double>();
    m.validate();
    return m;
}

PolicySpec policy_from_json(const json& j) {
    if (j.is_string()) return PolicySpec::make(policy_kind_from_name(j.get<std::string>()));
    PolicySpec p = PolicySpec::make(policy_kind_from_name(j.at("kind").get<std::string>()));
    if (j.contains("theta")) p.theta = duration_from_json(j.at("theta"), "theta");
    if (j.contains("callsite_hash_cost")) {
        p.callsite_hash_cost = duration_from_json(j.at("callsite_hash_cost"), "callsite_hash_cost");
    }
    if (j.contains("barrier_cost")) {
        p.barrier_cost = duration_from_json(j.at("barrier_cost"), "barrier_cost");
    }
    return p;
}

WorkloadSource workload_source_from_json(const json& j) {
    WorkloadSource src;
    if (j.contains("generator")) {
        src.generator = generator_from_json(j.at("generator"));
    } else if (j.contains("file")) {
        src.file = j.at("file").get<std::string>();
    } else {
        throw ConfigError("workload entry needs either a \"generator\" or a \"file\" key");
    }
    return src;
}

}  // namespace

Workload WorkloadSource::load() const {
    if (generator) return generate(*generator);
    return read_workload(file);
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        if (j.contains("schema") && j.at("schema").get<std::string>() != "slacksim-config/v1") {
            throw ConfigError("unsupported config schema: " + j.at("schema").get<std::string>());
        }
        RunConfig cfg;
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.machine = j.contains("machine") ? machine_from_json(j.at("machine")) : default_machine();
        if (j.contains("workload")) cfg.workloads.push_back(workload_source_from_json(j.at("workload")));
        if (j.contains("workloads")) {
            for (const json& wj : j.at("workloads")) {
                cfg.workloads.push_back(workload_source_from_json(wj));
            }
        }
        if (j.contains("policies")) {
            for (const json& pj : j.at("policies")) cfg.policies.push_back(policy_from_json(pj));
        }
        if (j.contains("output")) {
            cfg.output_dir = j.at("output").value("dir", std::string("out"));
        }
        if (const char* env = std::getenv("SLACKSIM_OUTPUT_DIR"); env != nullptr && *env != '\0') {
            cfg.output_dir = env;
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::vector<PolicySpec> default_policy_set() {
    std::vector<PolicySpec> out;
    out.push_back(PolicySpec::make(PolicyKind::Baseline));
    out.push_back(PolicySpec::make(PolicyKind::MinFreq));
    out.push_back(PolicySpec::make(PolicyKind::Fermata));  // 100 ms
    PolicySpec f500 = PolicySpec::make(PolicyKind::Fermata);
    f500.theta = 500e-6;
    out.push_back(f500);
    out.push_back(PolicySpec::make(PolicyKind::Andante));
    out.push_back(PolicySpec::make(PolicyKind::Adagio));
    out.push_back(PolicySpec::make(PolicyKind::Countdown));
    out.push_back(PolicySpec::make(PolicyKind::CountdownSlack));
    return out;
}

std::vector<PolicySpec> default_coverage_policies() {
    std::vector<PolicySpec> out;
    out.push_back(PolicySpec::make(PolicyKind::Fermata));  // 100 ms
    PolicySpec f500 = PolicySpec::make(PolicyKind::Fermata);
    f500.theta = 500e-6;
    out.push_back(f500);
    out.push_back(PolicySpec::make(PolicyKind::Countdown));
    out.push_back(PolicySpec::make(PolicyKind::CountdownSlack));
    return out;
}

std::string defaults_json() {
    const MachineModel m = default_machine();
    json j;
    j["schema"] = "slacksim-config/v1";
    json mj;
    json states = json::array();
    for (const PState& s : m.pstates.states()) {
        states.push_back({{"frequency_hz", s.frequency_hz}, {"power_w", s.power_w}});
    }
    mj["pstates"] = std::move(states);
    mj["pcu_quantum"] = m.pcu_quantum;
    mj["net_latency"] = m.net_latency;
    mj["net_bandwidth"] = m.net_bandwidth;
    mj["beta_comp"] = m.beta_comp;
    mj["gamma_copy"] = m.gamma_copy;
    mj["collective_scale"] = m.collective_scale;
    j["machine"] = std::move(mj);
    json policies = json::array();
    for (const PolicySpec& p : default_policy_set()) {
        policies.push_back({{"kind", policy_kind_name(p.kind)},
                            {"name", p.display_name()},
                            {"theta", p.theta},
                            {"callsite_hash_cost", p.callsite_hash_cost},
                            {"barrier_cost", p.barrier_cost}});
    }
    j["policies"] = std::move(policies);
    j["predict_min_duration"] = 0.5;
    j["output"] = {{"dir", "out"}};
    return j.dump(2) + "\n";
}

}  // namespace slacksim
