#include "lbcsim/config_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

namespace lbcsim {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config: " + path + ": " + msg);
}

void check_keys(const Json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known) fail(path, "unknown key '" + item.key() + "'");
    }
}

const Json* find(const Json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

const Json& req(const Json& j, const std::string& path, const char* key) {
    const Json* p = find(j, key);
    if (!p) fail(path, "missing required key '" + std::string(key) + "'");
    return *p;
}

double as_num(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double num_req(const Json& j, const std::string& path, const char* key) {
    return as_num(req(j, path, key), path + "." + key);
}

double num_or(const Json& j, const std::string& path, const char* key, double def) {
    const Json* p = find(j, key);
    return p ? as_num(*p, path + "." + key) : def;
}

std::string str_req(const Json& j, const std::string& path, const char* key) {
    const Json& v = req(j, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::string str_or(const Json& j, const std::string& path, const char* key,
                   const std::string& def) {
    const Json* p = find(j, key);
    if (!p) return def;
    if (!p->is_string()) fail(path + "." + key, "expected a string");
    return p->get<std::string>();
}

bool bool_or(const Json& j, const std::string& path, const char* key, bool def) {
    const Json* p = find(j, key);
    if (!p) return def;
    if (!p->is_boolean()) fail(path + "." + key, "expected a boolean");
    return p->get<bool>();
}

int int_req(const Json& j, const std::string& path, const char* key) {
    const Json& v = req(j, path, key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

int int_or(const Json& j, const std::string& path, const char* key, int def) {
    const Json* p = find(j, key);
    if (!p) return def;
    if (!p->is_number_integer()) fail(path + "." + key, "expected an integer");
    return p->get<int>();
}

MachineKind parse_kind(const std::string& s, const std::string& path) {
    if (s == "infinite_bus") return MachineKind::InfiniteBus;
    if (s == "htg") return MachineKind::Htg;
    if (s == "cg") return MachineKind::Cg;
    if (s == "rg") return MachineKind::Rg;
    fail(path, "unknown machine kind '" + s + "'");
}

GovernorParams parse_governor(const Json& j, const std::string& path, MachineKind kind) {
    GovernorParams gp;
    switch (kind) {
    case MachineKind::Htg:
        check_keys(j, path, {"t_w", "t_ws"});
        gp.t_w = num_or(j, path, "t_w", gp.t_w);
        gp.t_ws = num_or(j, path, "t_ws", gp.t_ws);
        break;
    case MachineKind::Cg:
        check_keys(j, path, {"t_c", "t_cs"});
        gp.t_c = num_or(j, path, "t_c", gp.t_c);
        gp.t_cs = num_or(j, path, "t_cs", gp.t_cs);
        break;
    case MachineKind::Rg:
        check_keys(j, path,
                   {"t_h", "t_hs", "t_r", "t_i", "t_is", "t_l", "c_h", "c_i", "c_l"});
        gp.t_h = num_or(j, path, "t_h", gp.t_h);
        gp.t_hs = num_or(j, path, "t_hs", gp.t_hs);
        gp.t_r = num_or(j, path, "t_r", gp.t_r);
        gp.t_i = num_or(j, path, "t_i", gp.t_i);
        gp.t_is = num_or(j, path, "t_is", gp.t_is);
        gp.t_l = num_or(j, path, "t_l", gp.t_l);
        gp.c_h = num_or(j, path, "c_h", gp.c_h);
        gp.c_i = num_or(j, path, "c_i", gp.c_i);
        gp.c_l = num_or(j, path, "c_l", gp.c_l);
        break;
    case MachineKind::InfiniteBus:
        fail(path, "infinite bus takes no governor");
    }
    return gp;
}

Gains parse_gains(const Json& j, const std::string& path, const Gains& base) {
    check_keys(j, path, {"speed", "voltage", "power", "opening", "ip_opening"});
    Gains g = base;
    g.speed = num_or(j, path, "speed", g.speed);
    g.voltage = num_or(j, path, "voltage", g.voltage);
    g.power = num_or(j, path, "power", g.power);
    g.opening = num_or(j, path, "opening", g.opening);
    g.ip_opening = num_or(j, path, "ip_opening", g.ip_opening);
    return g;
}

SurrogateConstants parse_surrogate(const Json& j, const std::string& path,
                                   const SurrogateConstants& base) {
    check_keys(j, path, {"a1", "a2", "a3", "a4"});
    SurrogateConstants sc = base;
    sc.a1 = num_or(j, path, "a1", sc.a1);
    sc.a2 = num_or(j, path, "a2", sc.a2);
    sc.a3 = num_or(j, path, "a3", sc.a3);
    sc.a4 = num_or(j, path, "a4", sc.a4);
    return sc;
}

ActuatorLimits parse_limits(const Json& j, const std::string& path,
                            const ActuatorLimits& base) {
    check_keys(j, path,
               {"ef_min", "ef_max", "gov1_min", "gov1_max", "gov2_min", "gov2_max"});
    ActuatorLimits lim = base;
    lim.ef_min = num_or(j, path, "ef_min", lim.ef_min);
    lim.ef_max = num_or(j, path, "ef_max", lim.ef_max);
    lim.gov1_min = num_or(j, path, "gov1_min", lim.gov1_min);
    lim.gov1_max = num_or(j, path, "gov1_max", lim.gov1_max);
    lim.gov2_min = num_or(j, path, "gov2_min", lim.gov2_min);
    lim.gov2_max = num_or(j, path, "gov2_max", lim.gov2_max);
    return lim;
}

} // namespace

ScenarioConfig parse_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }

    check_keys(root, "$",
               {"schema_version", "network", "machines", "controller", "events",
                "fault", "cct", "sim", "outputs"});

    ScenarioConfig cfg;
    cfg.schema_version = int_req(root, "$", "schema_version");
    if (cfg.schema_version != 1)
        throw ConfigError("config: unsupported schema_version " +
                          std::to_string(cfg.schema_version));

    // network
    const Json& jn = req(root, "$", "network");
    check_keys(jn, "network", {"fault_conductance", "buses", "branches"});
    cfg.network.fault_conductance = num_or(jn, "network", "fault_conductance", 1e6);
    const Json& jbuses = req(jn, "network", "buses");
    if (!jbuses.is_array()) fail("network.buses", "expected an array");
    for (std::size_t i = 0; i < jbuses.size(); ++i) {
        const std::string path = "network.buses[" + std::to_string(i) + "]";
        const Json& jb = jbuses[i];
        check_keys(jb, path, {"id", "shunt_g", "shunt_b"});
        Bus b;
        b.id = str_req(jb, path, "id");
        b.shunt_g = num_or(jb, path, "shunt_g", 0.0);
        b.shunt_b = num_or(jb, path, "shunt_b", 0.0);
        cfg.network.buses.push_back(b);
    }
    const Json& jbranches = req(jn, "network", "branches");
    if (!jbranches.is_array()) fail("network.branches", "expected an array");
    for (std::size_t i = 0; i < jbranches.size(); ++i) {
        const std::string path = "network.branches[" + std::to_string(i) + "]";
        const Json& jb = jbranches[i];
        check_keys(jb, path, {"id", "from", "to", "g", "b", "in_service"});
        Branch br;
        br.id = str_req(jb, path, "id");
        br.from = str_req(jb, path, "from");
        br.to = str_req(jb, path, "to");
        br.series_g = num_or(jb, path, "g", 0.0);
        br.series_b = num_req(jb, path, "b");
        br.in_service = bool_or(jb, path, "in_service", true);
        cfg.network.branches.push_back(br);
    }

    // machines; attachments and per-machine controller entries derive from here
    const Json& jms = req(root, "$", "machines");
    if (!jms.is_array() || jms.empty()) fail("machines", "expected a non-empty array");
    for (std::size_t i = 0; i < jms.size(); ++i) {
        const std::string path = "machines[" + std::to_string(i) + "]";
        const Json& jm = jms[i];
        MachineSpec ms;
        ms.kind = parse_kind(str_req(jm, path, "kind"), path + ".kind");

        MachineControllerConfig mcc;
        mcc.limits = default_limits(ms.kind);

        if (ms.kind == MachineKind::InfiniteBus) {
            check_keys(jm, path,
                       {"name", "bus", "kind", "inertia", "damping", "xd", "xd_prime",
                        "td0_prime", "omega_s", "emf"});
            ms.gen.inertia = num_or(jm, path, "inertia", 1e6);
            ms.emf = num_or(jm, path, "emf", 1.0);
            ms.gen.damping = num_or(jm, path, "damping", 0.0);
        } else {
            check_keys(jm, path,
                       {"name", "bus", "kind", "inertia", "damping", "xd", "xd_prime",
                        "td0_prime", "omega_s", "governor", "voltage_ref", "power_ref",
                        "gains", "surrogate", "limits"});
            ms.gen.inertia = num_req(jm, path, "inertia");
            ms.gen.damping = num_or(jm, path, "damping", 1.0);
            ms.voltage_ref = num_or(jm, path, "voltage_ref", 1.0);
            ms.power_ref = num_req(jm, path, "power_ref");
            if (const Json* jg = find(jm, "governor"))
                ms.gov = parse_governor(*jg, path + ".governor", ms.kind);
            if (const Json* jg = find(jm, "gains"))
                mcc.gains = parse_gains(*jg, path + ".gains", mcc.gains);
            if (const Json* js = find(jm, "surrogate"))
                mcc.surrogate = parse_surrogate(*js, path + ".surrogate", mcc.surrogate);
            if (const Json* jl = find(jm, "limits"))
                mcc.limits = parse_limits(*jl, path + ".limits", mcc.limits);
        }
        ms.name = str_req(jm, path, "name");
        ms.bus = str_req(jm, path, "bus");
        ms.gen.xd = num_req(jm, path, "xd");
        ms.gen.xd_prime = num_req(jm, path, "xd_prime");
        ms.gen.td0_prime = num_req(jm, path, "td0_prime");
        ms.gen.omega_s = num_or(jm, path, "omega_s", ms.gen.omega_s);

        cfg.machines.push_back(ms);
        cfg.controller.machines.push_back(mcc);

        GeneratorAttachment ga;
        ga.machine = i;
        ga.bus = ms.bus;
        ga.xd_prime = ms.gen.xd_prime;
        cfg.network.generators.push_back(ga);
    }

    if (const Json* jc = find(root, "controller")) {
        check_keys(*jc, "controller", {"d_floor", "pr_floor"});
        cfg.controller.d_floor = num_or(*jc, "controller", "d_floor", 1e-6);
        cfg.controller.pr_floor = num_or(*jc, "controller", "pr_floor", 0.05);
    }

    if (const Json* je = find(root, "events")) {
        check_keys(*je, "events", {"reference_steps", "network"});
        if (const Json* jr = find(*je, "reference_steps")) {
            if (!jr->is_array()) fail("events.reference_steps", "expected an array");
            for (std::size_t i = 0; i < jr->size(); ++i) {
                const std::string path =
                    "events.reference_steps[" + std::to_string(i) + "]";
                const Json& js = (*jr)[i];
                check_keys(js, path, {"time", "machine", "kind", "value"});
                ReferenceStep rs;
                rs.time = num_req(js, path, "time");
                rs.value = num_req(js, path, "value");
                const std::string kind = str_req(js, path, "kind");
                if (kind == "voltage")
                    rs.kind = ReferenceStep::Kind::Voltage;
                else if (kind == "power")
                    rs.kind = ReferenceStep::Kind::Power;
                else
                    fail(path + ".kind", "expected 'voltage' or 'power'");
                const std::string mname = str_req(js, path, "machine");
                bool found = false;
                for (std::size_t m = 0; m < cfg.machines.size(); ++m)
                    if (cfg.machines[m].name == mname) {
                        rs.machine = m;
                        found = true;
                        break;
                    }
                if (!found) fail(path + ".machine", "unknown machine '" + mname + "'");
                cfg.reference_steps.push_back(rs);
            }
        }
        if (const Json* jv = find(*je, "network")) {
            if (!jv->is_array()) fail("events.network", "expected an array");
            for (std::size_t i = 0; i < jv->size(); ++i) {
                const std::string path = "events.network[" + std::to_string(i) + "]";
                const Json& js = (*jv)[i];
                check_keys(js, path, {"time", "kind", "bus", "branch"});
                NetworkEvent ev;
                ev.time = num_req(js, path, "time");
                const std::string kind = str_req(js, path, "kind");
                if (kind == "fault_at_bus")
                    ev.kind = NetworkEventKind::FaultAtBus;
                else if (kind == "clear_fault_remove_line")
                    ev.kind = NetworkEventKind::ClearFaultRemoveLine;
                else if (kind == "remove_line")
                    ev.kind = NetworkEventKind::RemoveLine;
                else if (kind == "restore")
                    ev.kind = NetworkEventKind::Restore;
                else
                    fail(path + ".kind", "unknown event kind '" + kind + "'");
                ev.bus = str_or(js, path, "bus", "");
                ev.branch = str_or(js, path, "branch", "");
                cfg.network_events.push_back(ev);
            }
        }
    }

    if (const Json* jf = find(root, "fault")) {
        check_keys(*jf, "fault", {"bus", "remove_branch", "apply_time", "clearing_time"});
        FaultSpec fs;
        fs.bus = str_req(*jf, "fault", "bus");
        fs.remove_branch = str_req(*jf, "fault", "remove_branch");
        fs.apply_time = num_or(*jf, "fault", "apply_time", 0.5);
        fs.clearing_time = num_or(*jf, "fault", "clearing_time", 0.15);
        cfg.fault = fs;
    }

    if (const Json* jc = find(root, "cct")) {
        check_keys(*jc, "cct", {"bracket", "tolerance", "prescan_points"});
        if (const Json* jb = find(*jc, "bracket")) {
            if (!jb->is_array() || jb->size() != 2)
                fail("cct.bracket", "expected [lo, hi]");
            cfg.cct.bracket_lo = as_num((*jb)[0], "cct.bracket[0]");
            cfg.cct.bracket_hi = as_num((*jb)[1], "cct.bracket[1]");
        }
        cfg.cct.tolerance = num_or(*jc, "cct", "tolerance", 0.005);
        cfg.cct.prescan_points = int_or(*jc, "cct", "prescan_points", 0);
    }

    if (const Json* js = find(root, "sim")) {
        check_keys(*js, "sim",
                   {"t_end", "dt", "vdot_floor", "omega_tol", "angle_spread_max"});
        cfg.sim.t_end = num_or(*js, "sim", "t_end", 10.0);
        cfg.sim.dt = num_or(*js, "sim", "dt", 1e-3);
        cfg.sim.vdot_floor = num_or(*js, "sim", "vdot_floor", 1e-9);
        cfg.sim.omega_tol = num_or(*js, "sim", "omega_tol", 1e-4);
        cfg.sim.angle_spread_max =
            num_or(*js, "sim", "angle_spread_max", cfg.sim.angle_spread_max);
    }

    if (const Json* jo = find(root, "outputs")) {
        check_keys(*jo, "outputs", {"dir", "plot_script"});
        cfg.outputs.dir = str_or(*jo, "outputs", "dir", "");
        cfg.outputs.plot_script = bool_or(*jo, "outputs", "plot_script", false);
    }

    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const ScenarioConfig& cfg) {
    Json root;
    root["schema_version"] = cfg.schema_version;

    Json jn;
    jn["fault_conductance"] = cfg.network.fault_conductance;
    jn["buses"] = Json::array();
    for (const Bus& b : cfg.network.buses) {
        Json jb;
        jb["id"] = b.id;
        if (b.shunt_g != 0.0) jb["shunt_g"] = b.shunt_g;
        if (b.shunt_b != 0.0) jb["shunt_b"] = b.shunt_b;
        jn["buses"].push_back(jb);
    }
    jn["branches"] = Json::array();
    for (const Branch& br : cfg.network.branches) {
        Json jb;
        jb["id"] = br.id;
        jb["from"] = br.from;
        jb["to"] = br.to;
        if (br.series_g != 0.0) jb["g"] = br.series_g;
        jb["b"] = br.series_b;
        if (!br.in_service) jb["in_service"] = false;
        jn["branches"].push_back(jb);
    }
    root["network"] = jn;

    root["machines"] = Json::array();
    for (std::size_t m = 0; m < cfg.machines.size(); ++m) {
        const MachineSpec& ms = cfg.machines[m];
        Json jm;
        jm["name"] = ms.name;
        jm["bus"] = ms.bus;
        jm["kind"] = kind_name(ms.kind);
        jm["inertia"] = ms.gen.inertia;
        jm["damping"] = ms.gen.damping;
        jm["xd"] = ms.gen.xd;
        jm["xd_prime"] = ms.gen.xd_prime;
        jm["td0_prime"] = ms.gen.td0_prime;
        jm["omega_s"] = ms.gen.omega_s;
        if (ms.kind == MachineKind::InfiniteBus) {
            jm["emf"] = ms.emf;
        } else {
            jm["voltage_ref"] = ms.voltage_ref;
            jm["power_ref"] = ms.power_ref;
            Json jg;
            switch (ms.kind) {
            case MachineKind::Htg:
                jg["t_w"] = ms.gov.t_w;
                jg["t_ws"] = ms.gov.t_ws;
                break;
            case MachineKind::Cg:
                jg["t_c"] = ms.gov.t_c;
                jg["t_cs"] = ms.gov.t_cs;
                break;
            case MachineKind::Rg:
                jg["t_h"] = ms.gov.t_h;
                jg["t_hs"] = ms.gov.t_hs;
                jg["t_r"] = ms.gov.t_r;
                jg["t_i"] = ms.gov.t_i;
                jg["t_is"] = ms.gov.t_is;
                jg["t_l"] = ms.gov.t_l;
                jg["c_h"] = ms.gov.c_h;
                jg["c_i"] = ms.gov.c_i;
                jg["c_l"] = ms.gov.c_l;
                break;
            default:
                break;
            }
            jm["governor"] = jg;
            if (m < cfg.controller.machines.size()) {
                const MachineControllerConfig& mcc = cfg.controller.machines[m];
                Json jk;
                jk["speed"] = mcc.gains.speed;
                jk["voltage"] = mcc.gains.voltage;
                jk["power"] = mcc.gains.power;
                jk["opening"] = mcc.gains.opening;
                if (ms.kind == MachineKind::Rg) jk["ip_opening"] = mcc.gains.ip_opening;
                jm["gains"] = jk;
                Json jsur;
                jsur["a1"] = mcc.surrogate.a1;
                jsur["a2"] = mcc.surrogate.a2;
                jsur["a3"] = mcc.surrogate.a3;
                jsur["a4"] = mcc.surrogate.a4;
                jm["surrogate"] = jsur;
                Json jl;
                jl["ef_min"] = mcc.limits.ef_min;
                jl["ef_max"] = mcc.limits.ef_max;
                jl["gov1_min"] = mcc.limits.gov1_min;
                jl["gov1_max"] = mcc.limits.gov1_max;
                if (ms.kind == MachineKind::Rg) {
                    jl["gov2_min"] = mcc.limits.gov2_min;
                    jl["gov2_max"] = mcc.limits.gov2_max;
                }
                jm["limits"] = jl;
            }
        }
        root["machines"].push_back(jm);
    }

    Json jc;
    jc["d_floor"] = cfg.controller.d_floor;
    jc["pr_floor"] = cfg.controller.pr_floor;
    root["controller"] = jc;

    if (!cfg.reference_steps.empty() || !cfg.network_events.empty()) {
        Json je;
        if (!cfg.reference_steps.empty()) {
            je["reference_steps"] = Json::array();
            for (const ReferenceStep& rs : cfg.reference_steps) {
                Json js;
                js["time"] = rs.time;
                js["machine"] = cfg.machines[rs.machine].name;
                js["kind"] = rs.kind == ReferenceStep::Kind::Voltage ? "voltage" : "power";
                js["value"] = rs.value;
                je["reference_steps"].push_back(js);
            }
        }
        if (!cfg.network_events.empty()) {
            je["network"] = Json::array();
            for (const NetworkEvent& ev : cfg.network_events) {
                Json js;
                js["time"] = ev.time;
                switch (ev.kind) {
                case NetworkEventKind::FaultAtBus:
                    js["kind"] = "fault_at_bus";
                    break;
                case NetworkEventKind::ClearFaultRemoveLine:
                    js["kind"] = "clear_fault_remove_line";
                    break;
                case NetworkEventKind::RemoveLine:
                    js["kind"] = "remove_line";
                    break;
                case NetworkEventKind::Restore:
                    js["kind"] = "restore";
                    break;
                }
                if (!ev.bus.empty()) js["bus"] = ev.bus;
                if (!ev.branch.empty()) js["branch"] = ev.branch;
                je["network"].push_back(js);
            }
        }
        root["events"] = je;
    }

    if (cfg.fault) {
        Json jf;
        jf["bus"] = cfg.fault->bus;
        jf["remove_branch"] = cfg.fault->remove_branch;
        jf["apply_time"] = cfg.fault->apply_time;
        jf["clearing_time"] = cfg.fault->clearing_time;
        root["fault"] = jf;
    }

    Json jcct;
    jcct["bracket"] = Json::array({cfg.cct.bracket_lo, cfg.cct.bracket_hi});
    jcct["tolerance"] = cfg.cct.tolerance;
    if (cfg.cct.prescan_points > 0) jcct["prescan_points"] = cfg.cct.prescan_points;
    root["cct"] = jcct;

    Json js;
    js["t_end"] = cfg.sim.t_end;
    js["dt"] = cfg.sim.dt;
    js["vdot_floor"] = cfg.sim.vdot_floor;
    js["omega_tol"] = cfg.sim.omega_tol;
    js["angle_spread_max"] = cfg.sim.angle_spread_max;
    root["sim"] = js;

    if (!cfg.outputs.dir.empty() || cfg.outputs.plot_script) {
        Json jo;
        if (!cfg.outputs.dir.empty()) jo["dir"] = cfg.outputs.dir;
        if (cfg.outputs.plot_script) jo["plot_script"] = true;
        root["outputs"] = jo;
    }

    return root.dump(2) + "\n";
}

void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write config file " + path.string());
    f << config_to_json(cfg);
}

} // namespace lbcsim
