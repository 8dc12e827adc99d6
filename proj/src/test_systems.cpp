#include "lbcsim/test_systems.hpp"

namespace lbcsim {

namespace {

Branch line(const std::string& id, const std::string& from, const std::string& to,
            double reactance) {
    Branch br;
    br.id = id;
    br.from = from;
    br.to = to;
    br.series_g = 0.0;
    br.series_b = -1.0 / reactance;
    return br;
}

MachineSpec infinite_bus(const std::string& name, const std::string& bus, double x,
                         double emf) {
    MachineSpec ms;
    ms.name = name;
    ms.kind = MachineKind::InfiniteBus;
    ms.bus = bus;
    ms.gen.inertia = 1e6;
    ms.gen.damping = 1e6;
    ms.gen.xd = x;
    ms.gen.xd_prime = x;
    ms.gen.td0_prime = 8.0;
    ms.emf = emf;
    return ms;
}

void attach_all(ScenarioConfig& cfg) {
    cfg.network.generators.clear();
    for (std::size_t m = 0; m < cfg.machines.size(); ++m) {
        GeneratorAttachment ga;
        ga.machine = m;
        ga.bus = cfg.machines[m].bus;
        ga.xd_prime = cfg.machines[m].gen.xd_prime;
        cfg.network.generators.push_back(ga);
    }
    ControllerConfig ctrl;
    ctrl.d_floor = cfg.controller.d_floor;
    ctrl.pr_floor = cfg.controller.pr_floor;
    ctrl.resize_for(cfg.machines);
    cfg.controller = std::move(ctrl);
}

} // namespace

// Both bench systems are sized so that every closed-loop mode is near
// critically damped: weak ties keep each machine's synchronizing stiffness
// dP_e/ddelta around 0.3 p.u./rad, and the rotor damping constants lump the
// amortisseur and load-frequency effects that the third-order generator model
// leaves out.  That makes the energy-of-error descent monotone instead of
// ringing, while the heavily loaded hydro unit still loses synchronism within
// a second under a sustained terminal-area fault.

ScenarioConfig smib_config() {
    ScenarioConfig cfg;

    cfg.network.buses = {{"b1", 0.0, 0.0}, {"b2", 0.0, 0.0}, {"b3", 0.0, 0.0}};
    cfg.network.branches = {
        line("line-a", "b2", "b3", 16.0),
        line("line-b", "b2", "b3", 2.2),
        line("tie", "b3", "b1", 0.3),
    };

    cfg.machines.push_back(infinite_bus("G1", "b1", 0.10, 1.0));

    MachineSpec g2;
    g2.name = "G2";
    g2.kind = MachineKind::Htg;
    g2.bus = "b2";
    g2.gen.inertia = 3.0;
    g2.gen.damping = 106.0;
    g2.gen.xd = 1.8;
    g2.gen.xd_prime = 0.30;
    g2.gen.td0_prime = 7.0;
    g2.gov.t_w = 0.3;
    g2.voltage_ref = 1.0;
    g2.power_ref = 0.35;
    cfg.machines.push_back(g2);

    attach_all(cfg);

    FaultSpec fs;
    fs.bus = "b3";
    fs.remove_branch = "line-a";
    fs.apply_time = 0.5;
    fs.clearing_time = 0.15;
    cfg.fault = fs;

    cfg.sim.t_end = 20.0;

    cfg.cct.bracket_lo = 0.05;
    cfg.cct.bracket_hi = 2.0;
    cfg.cct.tolerance = 0.01;
    return cfg;
}

ScenarioConfig desk_config() {
    ScenarioConfig cfg;

    cfg.network.buses = {
        {"b1", 0.0, 0.0}, {"b2", 0.0, 0.0}, {"b3", 0.0, 0.0}, {"b4", 0.0, 0.0},
        {"b5", 0.0, 0.0}, {"b6", 0.75, 0.0}, {"b7", 0.50, 0.0},
    };
    cfg.network.branches = {
        line("t16", "b1", "b6", 0.40),  line("t17", "b1", "b7", 0.40),
        line("t26", "b2", "b6", 1.62),  line("t36a", "b3", "b6", 7.65),
        line("t36b", "b3", "b6", 1.61), line("t47", "b4", "b7", 2.55),
        line("t57", "b5", "b7", 1.45),  line("tie67", "b6", "b7", 0.60),
    };

    cfg.machines.push_back(infinite_bus("G1", "b1", 0.15, 1.02));

    MachineSpec g2;
    g2.name = "G2";
    g2.kind = MachineKind::Rg;
    g2.bus = "b2";
    g2.gen.inertia = 2.0;
    g2.gen.damping = 46.0;
    g2.gen.xd = 1.6;
    g2.gen.xd_prime = 0.25;
    g2.gen.td0_prime = 6.0;
    g2.voltage_ref = 1.0;
    g2.power_ref = 0.30;
    cfg.machines.push_back(g2);

    MachineSpec g3;
    g3.name = "G3";
    g3.kind = MachineKind::Htg;
    g3.bus = "b3";
    g3.gen.inertia = 3.0;
    g3.gen.damping = 105.0;
    g3.gen.xd = 1.8;
    g3.gen.xd_prime = 0.30;
    g3.gen.td0_prime = 7.0;
    g3.gov.t_w = 0.3;
    g3.voltage_ref = 1.0;
    g3.power_ref = 0.43;
    cfg.machines.push_back(g3);

    MachineSpec g4;
    g4.name = "G4";
    g4.kind = MachineKind::Cg;
    g4.bus = "b4";
    g4.gen.inertia = 3.0;
    g4.gen.damping = 120.0;
    g4.gen.xd = 1.9;
    g4.gen.xd_prime = 0.32;
    g4.gen.td0_prime = 8.0;
    g4.voltage_ref = 1.0;
    g4.power_ref = 0.10;
    cfg.machines.push_back(g4);

    MachineSpec g5;
    g5.name = "G5";
    g5.kind = MachineKind::Rg;
    g5.bus = "b5";
    g5.gen.inertia = 2.1;
    g5.gen.damping = 47.0;
    g5.gen.xd = 1.7;
    g5.gen.xd_prime = 0.28;
    g5.gen.td0_prime = 6.5;
    g5.voltage_ref = 1.0;
    g5.power_ref = 0.36;
    cfg.machines.push_back(g5);

    attach_all(cfg);

    FaultSpec fs;
    fs.bus = "b6";
    fs.remove_branch = "t36a";
    fs.apply_time = 0.5;
    fs.clearing_time = 0.15;
    cfg.fault = fs;

    cfg.sim.t_end = 20.0;

    cfg.cct.bracket_lo = 0.01;
    cfg.cct.bracket_hi = 1.0;
    cfg.cct.tolerance = 0.005;
    return cfg;
}

ScenarioConfig desk_vr_config() {
    ScenarioConfig cfg = desk_config();
    cfg.sim.t_end = 50.0;
    const double t = 0.25;
    cfg.reference_steps = {
        {ReferenceStep::Kind::Voltage, t, cfg.machine_index("G2"), 1.025},
        {ReferenceStep::Kind::Voltage, t, cfg.machine_index("G3"), 0.975},
        {ReferenceStep::Kind::Voltage, t, cfg.machine_index("G4"), 1.025},
        {ReferenceStep::Kind::Voltage, t, cfg.machine_index("G5"), 0.975},
    };
    return cfg;
}

ScenarioConfig desk_pr_config() {
    ScenarioConfig cfg = desk_config();
    cfg.sim.t_end = 50.0;
    const double t = 0.25;
    cfg.reference_steps = {
        {ReferenceStep::Kind::Power, t, cfg.machine_index("G2"), 0.27},
        {ReferenceStep::Kind::Power, t, cfg.machine_index("G3"), 0.46},
        {ReferenceStep::Kind::Power, t, cfg.machine_index("G4"), 0.13},
        {ReferenceStep::Kind::Power, t, cfg.machine_index("G5"), 0.39},
    };
    return cfg;
}

} // namespace lbcsim
