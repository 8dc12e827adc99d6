#include "lbcsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <sstream>
#include <string>

namespace lbcsim {

namespace {

constexpr double kEquilibriumTol = 1e-12;   // max |residual| of the operating point
constexpr double kDerivativeTol = 1e-9;     // max |x_dot| accepted at equilibrium
constexpr double kOverspeedAbort = 0.5;     // |omega-1| beyond any recovery

std::vector<GeneratorAttachment> sorted_attachments(const NetworkSpec& net) {
    std::vector<GeneratorAttachment> a = net.generators;
    std::sort(a.begin(), a.end(),
              [](const GeneratorAttachment& x, const GeneratorAttachment& y) {
                  return x.machine < y.machine;
              });
    return a;
}

long snap_step(double t, double dt) { return std::lround(t / dt); }

struct TimedEvent {
    long step = 0;
    int seq = 0;
    bool is_ref = false;
    ReferenceStep ref;
    NetworkEvent net;
};

std::vector<TimedEvent> build_schedule(const ScenarioConfig& cfg) {
    std::vector<TimedEvent> evs;
    int seq = 0;
    for (const ReferenceStep& rs : cfg.reference_steps) {
        TimedEvent e;
        e.step = snap_step(rs.time, cfg.sim.dt);
        e.seq = seq++;
        e.is_ref = true;
        e.ref = rs;
        evs.push_back(e);
    }
    for (const NetworkEvent& ne : cfg.network_events) {
        TimedEvent e;
        e.step = snap_step(ne.time, cfg.sim.dt);
        e.seq = seq++;
        e.net = ne;
        evs.push_back(e);
    }
    std::stable_sort(evs.begin(), evs.end(), [](const TimedEvent& a, const TimedEvent& b) {
        return a.step != b.step ? a.step < b.step : a.seq < b.seq;
    });
    return evs;
}

std::size_t gov_width(MachineKind k) {
    switch (k) {
    case MachineKind::InfiniteBus: return 0;
    case MachineKind::Htg:
    case MachineKind::Cg: return 1;
    case MachineKind::Rg: return 6;
    }
    return 0;
}

void record_sample(Trajectory& traj, double t, std::span<const double> x,
                   const StateLayout& L, std::span<const MachineSpec> specs,
                   const ControlEvaluation& ev) {
    traj.time.push_back(t);
    std::vector<FeedbackVector> fbs;
    for (std::size_t m = 0; m < specs.size(); ++m) {
        Trajectory::MachineSeries& s = traj.machines[m];
        s.delta.push_back(x[L.delta(m)]);
        s.omega.push_back(x[L.omega(m)]);
        s.eq.push_back(x[L.eq(m)]);
        s.p_m.push_back(mechanical_power(x, L, m));
        s.u_t.push_back(ev.outputs.u_t[m]);
        s.p_e.push_back(ev.outputs.p_e[m]);
        switch (specs[m].kind) {
        case MachineKind::InfiniteBus:
            break;
        case MachineKind::Htg:
        case MachineKind::Cg:
            s.gov.push_back(x[L.mu(m)]);
            break;
        case MachineKind::Rg:
            s.gov.push_back(x[L.p_h(m)]);
            s.gov.push_back(x[L.mu_h(m)]);
            s.gov.push_back(x[L.p_r(m)]);
            s.gov.push_back(x[L.p_i(m)]);
            s.gov.push_back(x[L.mu_i(m)]);
            s.gov.push_back(x[L.p_l(m)]);
            break;
        }
        const MachineControlRecord& rec = ev.machines[m];
        s.ef_raw.push_back(rec.raw.e_f);
        s.ef.push_back(rec.applied.e_f);
        s.gov1_raw.push_back(rec.raw.gov1);
        s.gov1.push_back(rec.applied.gov1);
        s.gov2_raw.push_back(rec.raw.gov2);
        s.gov2.push_back(rec.applied.gov2);
        s.fb_omega.push_back(rec.feedback.d_omega);
        s.fb_ut.push_back(rec.feedback.d_ut);
        s.fb_pe.push_back(rec.feedback.d_pe);
        s.fb_mu1.push_back(rec.feedback.d_mu1);
        s.fb_mu2.push_back(rec.feedback.d_mu2);
        s.c_e.push_back(rec.affine.c_e);
        s.d_e.push_back(rec.affine.d_e);
        s.c_g1.push_back(rec.affine.c_g1);
        s.d_g1.push_back(rec.affine.d_g1);
        s.c_g2.push_back(rec.affine.c_g2);
        s.d_g2.push_back(rec.affine.d_g2);
        s.saturated.push_back(rec.saturated ? 1 : 0);
        if (rec.controlled) fbs.push_back(rec.feedback);
    }
    traj.v.push_back(lyapunov_value(fbs));
    traj.any_saturated.push_back(ev.any_saturated() ? 1 : 0);
}

GasCertificate certificate_for(const ScenarioConfig& cfg, const ControllerConfig& ctrl) {
    std::vector<MachineKind> kinds;
    std::vector<SurrogateConstants> consts;
    std::vector<Gains> gains;
    for (std::size_t m = 0; m < cfg.machines.size(); ++m) {
        if (cfg.machines[m].kind == MachineKind::InfiniteBus) continue;
        kinds.push_back(cfg.machines[m].kind);
        consts.push_back(ctrl.machines[m].surrogate);
        gains.push_back(ctrl.machines[m].gains);
    }
    const SurrogateSystem sys = build_surrogate(kinds, consts);
    return gas_certificate(sys, gains);
}

/// Integrates the closed loop into `traj`, which stays valid (prefix of the
/// run) when an exception escapes mid-trajectory.
void run_impl(const ScenarioConfig& cfg, Trajectory& traj, GasCertificate* cert_out) {
    cfg.validate();
    const std::span<const MachineSpec> specs{cfg.machines};
    const StateLayout L{specs};

    ControllerConfig ctrl = cfg.controller;
    ctrl.resize_for(specs);

    const GasCertificate cert = certificate_for(cfg, ctrl);
    if (cert_out) *cert_out = cert;

    traj.dt = cfg.sim.dt;
    traj.machines.resize(specs.size());
    for (std::size_t m = 0; m < specs.size(); ++m) {
        traj.machines[m].kind = specs[m].kind;
        traj.machines[m].name = specs[m].name;
        traj.machines[m].gov_width = gov_width(specs[m].kind);
    }
    if (!cert.certified) {
        std::ostringstream os;
        os << "stability certificate failed (rank " << cert.rank << "/" << cert.dim
           << ", margin " << cert.margin << "); running anyway";
        traj.warnings.push_back(os.str());
    }

    std::vector<double> x = initialize_equilibrium(cfg, L);

    std::vector<double> u_refs(specs.size()), p_refs(specs.size());
    for (std::size_t m = 0; m < specs.size(); ++m) {
        u_refs[m] = specs[m].voltage_ref;
        p_refs[m] = specs[m].power_ref;
    }

    NetworkSpec netspec = cfg.network;
    ReducedNetwork net = reduce_to_machines(netspec);
    std::vector<GeneratorAttachment> attach = sorted_attachments(netspec);

    const long steps = snap_step(cfg.sim.t_end, cfg.sim.dt);
    if (steps < 2) throw ConfigError("t_end must cover at least two integration steps");

    std::vector<TimedEvent> schedule = build_schedule(cfg);
    std::size_t next_event = 0;
    std::set<double> event_times;

    const long n_series = steps + 1;
    traj.time.reserve(n_series);
    traj.v.reserve(n_series);

    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * cfg.sim.dt;

        bool topology_changed = false;
        while (next_event < schedule.size() && schedule[next_event].step <= k) {
            const TimedEvent& e = schedule[next_event];
            if (e.is_ref) {
                if (e.ref.kind == ReferenceStep::Kind::Voltage)
                    u_refs[e.ref.machine] = e.ref.value;
                else
                    p_refs[e.ref.machine] = e.ref.value;
            } else {
                netspec = apply_event(netspec, e.net);
                topology_changed = true;
            }
            event_times.insert(static_cast<double>(e.step) * cfg.sim.dt);
            ++next_event;
        }
        if (topology_changed) net = reduce_to_machines(netspec);

        const ControlEvaluation ev =
            compute_controls(x, net, specs, attach, L, ctrl, u_refs, p_refs);
        record_sample(traj, t, x, L, specs, ev);
        traj.event_times.assign(event_times.begin(), event_times.end());

        if (k == steps) break;

        const StepFunction f = [&](double, const std::vector<double>& xx) {
            const ControlEvaluation stage =
                compute_controls(xx, net, specs, attach, L, ctrl, u_refs, p_refs);
            std::vector<double> dxdt(L.size());
            system_deriv(xx, stage.inputs(), stage.outputs, specs, L, dxdt);
            return dxdt;
        };
        x = rk4_step(f, t, x, cfg.sim.dt);

        for (std::size_t i = 0; i < x.size(); ++i)
            if (!std::isfinite(x[i]))
                throw DivergenceError("state entry " + std::to_string(i) +
                                          " became non-finite at t = " +
                                          std::to_string(t + cfg.sim.dt),
                                      t + cfg.sim.dt);
        for (std::size_t m = 0; m < specs.size(); ++m)
            if (std::abs(x[L.omega(m)] - 1.0) > kOverspeedAbort)
                throw DivergenceError("machine '" + specs[m].name +
                                          "' speed excursion beyond recovery at t = " +
                                          std::to_string(t + cfg.sim.dt),
                                      t + cfg.sim.dt);
    }
}

std::size_t first_post_event_index(const Trajectory& traj) {
    if (traj.event_times.empty()) return 0;
    const double last = *std::max_element(traj.event_times.begin(), traj.event_times.end());
    const long step = std::lround(last / traj.dt);
    return static_cast<std::size_t>(step) + 1;
}

std::string saturation_note(const Trajectory& traj, std::size_t m) {
    if (traj.machines[m].saturated.empty() || !traj.machines[m].saturated.back())
        return "";
    return " (actuator saturated at t_end; target outside actuator capability)";
}

Verdict tracking_verdict(const Trajectory& traj, const ScenarioConfig& cfg,
                         std::span<const double> u_targets,
                         std::span<const double> p_targets, double tol) {
    Verdict v;
    v.pass = true;
    std::ostringstream os;
    for (std::size_t m = 0; m < cfg.machines.size(); ++m) {
        if (cfg.machines[m].kind == MachineKind::InfiniteBus) continue;
        const Trajectory::MachineSeries& s = traj.machines[m];
        const double du = std::abs(s.u_t.back() - u_targets[m]);
        const double dp = std::abs(s.p_e.back() - p_targets[m]);
        os << "  " << s.name << ": |U_t err| = " << du << ", |P_e err| = " << dp;
        if (du > tol || dp > tol) {
            v.pass = false;
            os << "  FAIL" << saturation_note(traj, m);
        }
        os << "\n";
    }
    v.detail = os.str();
    return v;
}

// initial (U_t, P_e) of machine m
std::pair<double, double> traj_initial(const Trajectory& traj, std::size_t m) {
    return {traj.machines[m].u_t.front(), traj.machines[m].p_e.front()};
}

ScenarioResult tracking_scenario(const ScenarioConfig& cfg, ReferenceStep::Kind kind) {
    const char* kind_word = kind == ReferenceStep::Kind::Voltage ? "voltage" : "power";
    for (const ReferenceStep& rs : cfg.reference_steps)
        if (rs.kind != kind)
            throw ConfigError(std::string("a ") + kind_word +
                              "-reference scenario can only take " + kind_word + " steps");

    ScenarioResult res;
    run_impl(cfg, res.traj, &res.certificate);

    // targets: references after all steps; the untouched quantity must return
    // to its pre-step value
    std::vector<double> u_targets(cfg.machines.size()), p_targets(cfg.machines.size());
    for (std::size_t m = 0; m < cfg.machines.size(); ++m) {
        u_targets[m] = cfg.machines[m].voltage_ref;
        p_targets[m] = cfg.machines[m].power_ref;
    }
    for (const ReferenceStep& rs : cfg.reference_steps) {
        if (rs.kind == ReferenceStep::Kind::Voltage)
            u_targets[rs.machine] = rs.value;
        else
            p_targets[rs.machine] = rs.value;
    }
    for (std::size_t m = 0; m < cfg.machines.size(); ++m) {
        if (cfg.machines[m].kind == MachineKind::InfiniteBus) continue;
        if (kind == ReferenceStep::Kind::Voltage)
            p_targets[m] = traj_initial(res.traj, m).second;
        else
            u_targets[m] = traj_initial(res.traj, m).first;
    }

    res.verdict = tracking_verdict(res.traj, cfg, u_targets, p_targets, 1e-3);
    res.lyapunov =
        lyapunov_report(res.traj, first_post_event_index(res.traj), cfg.sim.vdot_floor);
    return res;
}

} // namespace

void ScenarioConfig::validate() const {
    if (schema_version != 1)
        throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
    if (machines.empty()) throw ConfigError("config lists no machines");

    std::set<std::string> names;
    std::size_t controlled = 0;
    for (const MachineSpec& ms : machines) {
        ms.validate();
        if (!names.insert(ms.name).second)
            throw ConfigError("duplicate machine name '" + ms.name + "'");
        if (ms.kind != MachineKind::InfiniteBus) ++controlled;
    }
    if (controlled == 0)
        throw ConfigError("config needs at least one controlled machine");

    network.validate();
    if (network.generators.size() != machines.size())
        throw ConfigError("network attachments must cover every machine");
    for (const GeneratorAttachment& g : network.generators) {
        const MachineSpec& ms = machines.at(g.machine);
        if (g.bus != ms.bus)
            throw ConfigError("machine '" + ms.name + "' attachment bus mismatch");
        if (std::abs(g.xd_prime - ms.gen.xd_prime) > 1e-12)
            throw ConfigError("machine '" + ms.name + "' attachment xd_prime mismatch");
    }

    if (!(sim.dt > 0.0)) throw ConfigError("sim.dt must be positive");
    if (!(sim.t_end >= 2.0 * sim.dt))
        throw ConfigError("sim.t_end must cover at least two steps");
    if (sim.vdot_floor < 0.0) throw ConfigError("sim.vdot_floor must be non-negative");
    if (!(sim.omega_tol > 0.0)) throw ConfigError("sim.omega_tol must be positive");
    if (!(sim.angle_spread_max > 0.0))
        throw ConfigError("sim.angle_spread_max must be positive");
    if (!(controller.d_floor > 0.0)) throw ConfigError("controller.d_floor must be positive");
    if (!(controller.pr_floor > 0.0))
        throw ConfigError("controller.pr_floor must be positive");
    if (controller.machines.size() > machines.size())
        throw ConfigError("controller config lists more machines than the plant has");

    for (const ReferenceStep& rs : reference_steps) {
        if (rs.machine >= machines.size())
            throw ConfigError("reference step targets unknown machine index " +
                              std::to_string(rs.machine));
        if (machines[rs.machine].kind == MachineKind::InfiniteBus)
            throw ConfigError("reference step targets the infinite bus");
        if (rs.time < 0.0) throw ConfigError("reference step time must be non-negative");
        if (!std::isfinite(rs.value)) throw ConfigError("reference step value must be finite");
        if (rs.kind == ReferenceStep::Kind::Voltage && !(rs.value > 0.0))
            throw ConfigError("voltage reference step must be positive");
    }
    for (const NetworkEvent& ev : network_events) {
        if (ev.time < 0.0) throw ConfigError("network event time must be non-negative");
        if (ev.kind == NetworkEventKind::FaultAtBus ||
            ev.kind == NetworkEventKind::ClearFaultRemoveLine)
            network.bus_index(ev.bus);
        if (ev.kind == NetworkEventKind::ClearFaultRemoveLine ||
            ev.kind == NetworkEventKind::RemoveLine)
            network.branch(ev.branch);
        if (ev.kind == NetworkEventKind::Restore && ev.branch.empty() && ev.bus.empty())
            throw ConfigError("restore event names neither a branch nor a bus");
    }
    if (fault) {
        network.bus_index(fault->bus);
        network.branch(fault->remove_branch);
        if (fault->apply_time < 0.0 || fault->clearing_time < 0.0)
            throw ConfigError("fault times must be non-negative");
    }
    if (!(cct.bracket_lo >= 0.0) || !(cct.bracket_hi > cct.bracket_lo))
        throw ConfigError("cct bracket must satisfy 0 <= lo < hi");
    if (!(cct.tolerance > 0.0)) throw ConfigError("cct tolerance must be positive");
    if (cct.prescan_points < 0) throw ConfigError("cct prescan_points must be non-negative");
}

std::size_t ScenarioConfig::machine_index(const std::string& name) const {
    for (std::size_t m = 0; m < machines.size(); ++m)
        if (machines[m].name == name) return m;
    throw ConfigError("unknown machine name '" + name + "'");
}

std::vector<double> initialize_equilibrium(const ScenarioConfig& cfg,
                                           const StateLayout& L) {
    const std::span<const MachineSpec> specs{cfg.machines};
    const std::size_t n = specs.size();
    const ReducedNetwork net = reduce_to_machines(cfg.network);
    const std::vector<GeneratorAttachment> attach = sorted_attachments(cfg.network);

    std::vector<std::size_t> controlled;
    for (std::size_t m = 0; m < n; ++m)
        if (specs[m].kind != MachineKind::InfiniteBus) controlled.push_back(m);
    const std::size_t nc = controlled.size();

    std::vector<double> delta(n, 0.0), eq(n, 1.0);
    for (std::size_t m = 0; m < n; ++m)
        if (specs[m].kind == MachineKind::InfiniteBus) eq[m] = specs[m].emf;

    auto residual = [&](const std::vector<double>& d, const std::vector<double>& e,
                        MachineOutputs& out) {
        out = machine_outputs(net, d, e, attach);
        std::vector<double> f(2 * nc);
        for (std::size_t a = 0; a < nc; ++a) {
            const std::size_t i = controlled[a];
            f[2 * a] = out.p_e[i] - specs[i].power_ref;
            f[2 * a + 1] = out.u_t[i] - specs[i].voltage_ref;
        }
        return f;
    };

    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };

    MachineOutputs out;
    std::vector<double> f = residual(delta, eq, out);
    double fnorm = max_abs(f);
    double lm = 1e-10;
    bool converged = fnorm <= kEquilibriumTol;

    for (int iter = 0; iter < 200 && !converged; ++iter) {
        const OutputGradients grads = output_gradients(net, delta, eq, attach);

        Matrix jac(2 * nc, 2 * nc);
        for (std::size_t a = 0; a < nc; ++a) {
            const std::size_t i = controlled[a];
            for (std::size_t b = 0; b < nc; ++b) {
                const std::size_t j = controlled[b];
                jac(2 * a, 2 * b) = grads.dpe_ddelta(i, j);
                jac(2 * a, 2 * b + 1) = grads.dpe_deq(i, j);
                jac(2 * a + 1, 2 * b) = grads.dut_ddelta(i, j);
                jac(2 * a + 1, 2 * b + 1) = grads.dut_deq(i, j);
            }
        }

        // damped normal equations; the damping also rides out singular
        // Jacobians (zero power-transfer rows keep their variables parked)
        const Matrix jt = jac.transposed();
        Matrix jtj = jt * jac;
        std::vector<double> jtf(2 * nc, 0.0);
        for (std::size_t r = 0; r < 2 * nc; ++r)
            for (std::size_t c = 0; c < 2 * nc; ++c) jtf[r] += jt(r, c) * f[c];

        bool accepted = false;
        for (int tries = 0; tries < 40 && !accepted; ++tries) {
            Matrix damped = jtj;
            for (std::size_t ddi = 0; ddi < 2 * nc; ++ddi) damped(ddi, ddi) += lm;
            std::vector<double> step;
            try {
                step = solve_linear(damped, jtf);
            } catch (const NumericsError&) {
                lm *= 10.0;
                continue;
            }
            // cap steps to stay in the basin
            for (std::size_t a = 0; a < nc; ++a) {
                step[2 * a] = std::clamp(step[2 * a], -0.5, 0.5);
                step[2 * a + 1] = std::clamp(step[2 * a + 1], -0.25, 0.25);
            }
            std::vector<double> d_try = delta, e_try = eq;
            for (std::size_t a = 0; a < nc; ++a) {
                d_try[controlled[a]] -= step[2 * a];
                e_try[controlled[a]] =
                    std::max(0.05, e_try[controlled[a]] - step[2 * a + 1]);
            }
            MachineOutputs out_try;
            std::vector<double> f_try;
            try {
                f_try = residual(d_try, e_try, out_try);
            } catch (const NetworkError&) {
                lm *= 10.0;
                continue;
            }
            const double fnorm_try = max_abs(f_try);
            if (fnorm_try < fnorm || fnorm_try <= kEquilibriumTol) {
                delta = d_try;
                eq = e_try;
                f = f_try;
                out = out_try;
                fnorm = fnorm_try;
                lm = std::max(lm * 0.1, 1e-12);
                accepted = true;
            } else {
                lm *= 10.0;
            }
        }
        if (!accepted) break;
        converged = fnorm <= kEquilibriumTol;
    }

    if (!converged)
        throw InfeasibleError(
            "no equilibrium satisfies the requested operating point (residual " +
            std::to_string(fnorm) + " after damped Newton)");

    // assemble the state and check the actuators can hold it
    ControllerConfig ctrl = cfg.controller;
    ctrl.resize_for(specs);

    std::vector<double> x(L.size(), 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        x[L.delta(m)] = delta[m];
        x[L.omega(m)] = 1.0;
        x[L.eq(m)] = eq[m];
        const double pe = out.p_e[m];
        switch (specs[m].kind) {
        case MachineKind::InfiniteBus:
            x[L.p_m(m)] = pe;
            break;
        case MachineKind::Htg:
        case MachineKind::Cg: {
            x[L.p_m(m)] = pe;
            x[L.mu(m)] = pe;
            const ActuatorLimits& lim = ctrl.machines[m].limits;
            if (pe < lim.gov1_min || pe > lim.gov1_max)
                throw InfeasibleError("machine '" + specs[m].name +
                                      "': operating point needs an opening of " +
                                      std::to_string(pe) + ", outside actuator range");
            break;
        }
        case MachineKind::Rg: {
            const GovernorParams& gp = specs[m].gov;
            x[L.p_h(m)] = gp.c_h * pe;
            x[L.mu_h(m)] = pe;
            x[L.p_r(m)] = pe;
            x[L.p_i(m)] = gp.c_i * pe;
            x[L.mu_i(m)] = 1.0;
            x[L.p_l(m)] = gp.c_l * pe;
            const ActuatorLimits& lim = ctrl.machines[m].limits;
            if (pe < lim.gov1_min || pe > lim.gov1_max || 1.0 < lim.gov2_min ||
                1.0 > lim.gov2_max)
                throw InfeasibleError("machine '" + specs[m].name +
                                      "': operating point outside actuator range");
            if (std::abs(pe) < ctrl.pr_floor)
                throw InfeasibleError("machine '" + specs[m].name +
                                      "': reheater equilibrium power " +
                                      std::to_string(pe) +
                                      " sits below the feedback floor");
            break;
        }
        }
        if (specs[m].kind != MachineKind::InfiniteBus) {
            const double ef =
                eq[m] + (specs[m].gen.xd - specs[m].gen.xd_prime) * out.i_d[m];
            const ActuatorLimits& lim = ctrl.machines[m].limits;
            if (ef < lim.ef_min || ef > lim.ef_max)
                throw InfeasibleError("machine '" + specs[m].name +
                                      "': operating point needs a field drive of " +
                                      std::to_string(ef) + ", outside actuator range");
        }
    }

    // the closed loop must reproduce this point exactly
    std::vector<double> u_refs(n), p_refs(n);
    for (std::size_t m = 0; m < n; ++m) {
        u_refs[m] = specs[m].voltage_ref;
        p_refs[m] = specs[m].power_ref;
    }
    const ControlEvaluation ev =
        compute_controls(x, net, specs, attach, L, ctrl, u_refs, p_refs);
    std::vector<double> dxdt(L.size());
    system_deriv(x, ev.inputs(), ev.outputs, specs, L, dxdt);
    const double drift = max_abs(dxdt);
    if (drift > kDerivativeTol)
        throw InfeasibleError(
            "equilibrium verification failed: closed-loop drift " +
            std::to_string(drift) + " exceeds tolerance");
    return x;
}

Trajectory run(const ScenarioConfig& cfg) {
    Trajectory traj;
    run_impl(cfg, traj, nullptr);
    return traj;
}

GasCertificate config_certificate(const ScenarioConfig& cfg) {
    cfg.validate();
    ControllerConfig ctrl = cfg.controller;
    ctrl.resize_for(cfg.machines);
    return certificate_for(cfg, ctrl);
}

ScenarioResult vr_scenario(const ScenarioConfig& cfg) {
    return tracking_scenario(cfg, ReferenceStep::Kind::Voltage);
}

ScenarioResult pr_scenario(const ScenarioConfig& cfg) {
    return tracking_scenario(cfg, ReferenceStep::Kind::Power);
}

bool final_sample_stable(const Trajectory& traj, const SimOptions& sim) {
    if (traj.samples() == 0) return false;
    double dmin = 0.0, dmax = 0.0;
    bool first = true;
    for (const Trajectory::MachineSeries& s : traj.machines) {
        if (std::abs(s.omega.back() - 1.0) > sim.omega_tol) return false;
        const double d = s.delta.back();
        if (first) {
            dmin = dmax = d;
            first = false;
        } else {
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
    }
    return (dmax - dmin) <= sim.angle_spread_max;
}

FaultOutcome fault_scenario(const ScenarioConfig& cfg, const FaultSpec& fault,
                            double clearing) {
    if (clearing < 0.0) throw ConfigError("clearing time must be non-negative");

    ScenarioConfig c = cfg;
    c.fault = fault;
    c.validate();

    // a fault trial owns its topology schedule
    c.network_events.clear();
    NetworkEvent on;
    on.kind = NetworkEventKind::FaultAtBus;
    on.time = fault.apply_time;
    on.bus = fault.bus;
    NetworkEvent off;
    off.kind = NetworkEventKind::ClearFaultRemoveLine;
    off.time = fault.apply_time + clearing;
    off.bus = fault.bus;
    off.branch = fault.remove_branch;
    c.network_events = {on, off};

    FaultOutcome res;
    try {
        run_impl(c, res.traj, &res.certificate);
        res.stable = final_sample_stable(res.traj, c.sim);
        std::ostringstream os;
        double worst = 0.0;
        for (const Trajectory::MachineSeries& s : res.traj.machines)
            worst = std::max(worst, std::abs(s.omega.back() - 1.0));
        os << (res.stable ? "stable" : "unstable") << ": max |omega-1| at t_end = "
           << worst;
        res.detail = os.str();
    } catch (const DivergenceError& e) {
        res.stable = false;
        res.detail = std::string("unstable: ") + e.what();
    } catch (const ControlError& e) {
        res.stable = false;
        res.detail = std::string("unstable: controller degeneracy: ") + e.what();
    }
    if (res.traj.samples() >= 3)
        res.lyapunov = lyapunov_report(res.traj, first_post_event_index(res.traj),
                                       cfg.sim.vdot_floor);
    return res;
}

CctResult cct_search(const ScenarioConfig& cfg, const FaultSpec& fault, double lo,
                     double hi, double tol) {
    if (!(lo >= 0.0) || !(hi > lo)) throw ConfigError("cct bracket must satisfy 0 <= lo < hi");
    if (!(tol > 0.0)) throw ConfigError("cct tolerance must be positive");

    auto trial = [&](double clearing) {
        return fault_scenario(cfg, fault, clearing).stable;
    };

    CctResult res;
    res.fault = fault;

    const bool lo_stable = trial(lo);
    res.trials.emplace_back(lo, lo_stable);
    if (!lo_stable)
        throw ConfigError("cct bracket invalid: lower clearing time " +
                          std::to_string(lo) + " is already unstable");
    const bool hi_stable = trial(hi);
    res.trials.emplace_back(hi, hi_stable);
    if (hi_stable)
        throw ConfigError("cct bracket invalid: upper clearing time " +
                          std::to_string(hi) + " is still stable");

    if (cfg.cct.prescan_points > 0) {
        // concurrent grid scan; trials are independent and share only the
        // immutable config
        const int np = cfg.cct.prescan_points;
        std::vector<std::future<bool>> futs;
        std::vector<double> grid;
        futs.reserve(np);
        for (int i = 1; i <= np; ++i) {
            const double c = lo + (hi - lo) * static_cast<double>(i) /
                                      static_cast<double>(np + 1);
            grid.push_back(c);
            futs.push_back(std::async(std::launch::async, trial, c));
        }
        bool seen_unstable = false;
        for (int i = 0; i < np; ++i) {
            const bool stable = futs[i].get();
            res.trials.emplace_back(grid[i], stable);
            if (!stable) seen_unstable = true;
            if (stable && seen_unstable) res.monotone = false;
        }
    }

    while (hi - lo > 2.0 * tol) {
        const double mid = 0.5 * (lo + hi);
        const bool stable = trial(mid);
        res.trials.emplace_back(mid, stable);
        ++res.bisection_trials;
        if (stable)
            lo = mid;
        else
            hi = mid;
    }

    res.lower = lo;
    res.upper = hi;
    res.cct = 0.5 * (lo + hi);
    res.tolerance = 0.5 * (hi - lo);
    return res;
}

LyapunovReport lyapunov_report(const Trajectory& traj, std::size_t first_post_event,
                               double noise_floor) {
    LyapunovReport rep;
    rep.samples = vdot_series(traj.v, traj.any_saturated, traj.dt, noise_floor);

    const std::size_t n = rep.samples.size();
    const std::size_t start = std::min(first_post_event, n);
    std::size_t non_violating = 0;
    for (std::size_t k = start; k < n; ++k) {
        const LyapunovSample& s = rep.samples[k];
        ++rep.post_event_count;
        if (s.violation) {
            ++rep.violations;
            if (!s.saturated) ++rep.unsaturated_violations;
        } else {
            ++non_violating;
        }
    }
    rep.negative_fraction =
        rep.post_event_count == 0
            ? 1.0
            : static_cast<double>(non_violating) / static_cast<double>(rep.post_event_count);

    // hidden motion: Lyapunov value near zero while internal states still move
    for (std::size_t k = 1; k < n; ++k) {
        if (traj.v[k] >= 1e-10) continue;
        double rate = 0.0;
        for (const Trajectory::MachineSeries& s : traj.machines) {
            rate = std::max(rate, std::abs(s.delta[k] - s.delta[k - 1]) / traj.dt);
            rate = std::max(rate, std::abs(s.eq[k] - s.eq[k - 1]) / traj.dt);
            for (std::size_t g = 0; g < s.gov_width; ++g)
                rate = std::max(rate, std::abs(s.gov[k * s.gov_width + g] -
                                               s.gov[(k - 1) * s.gov_width + g]) /
                                          traj.dt);
        }
        if (rate > 1e-2) ++rep.anomalies;
    }
    return rep;
}

} // namespace lbcsim
