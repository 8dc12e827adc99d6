#include "lbcsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lbcsim {

std::vector<double> FeedbackVector::as_vector() const {
    std::vector<double> v{d_omega, d_ut, d_pe, d_mu1};
    if (size == 5) v.push_back(d_mu2);
    return v;
}

ActuatorLimits default_limits(MachineKind kind) {
    ActuatorLimits lim;
    switch (kind) {
    case MachineKind::Htg:
        lim.gov1_min = 0.0;
        lim.gov1_max = 6.0;
        break;
    case MachineKind::Cg:
        lim.gov1_min = 0.0;
        lim.gov1_max = 0.8;
        break;
    case MachineKind::Rg:
        lim.gov1_min = 0.0;
        lim.gov1_max = 7.0;
        lim.gov2_min = 0.0;
        lim.gov2_max = 1.1;
        break;
    case MachineKind::InfiniteBus:
        break;
    }
    return lim;
}

void ControllerConfig::resize_for(std::span<const MachineSpec> specs) {
    if (machines.size() > specs.size())
        throw ConfigError("controller config lists more machines than the plant has");
    for (std::size_t m = machines.size(); m < specs.size(); ++m) {
        MachineControllerConfig mc;
        mc.limits = default_limits(specs[m].kind);
        machines.push_back(mc);
    }
}

FeedbackVector feedback_vector(std::span<const double> x, const StateLayout& L,
                               std::size_t m, const MachineOutputs& out,
                               const MachineSpec& spec, double u_ref, double p_ref,
                               double pr_floor) {
    if (spec.kind == MachineKind::InfiniteBus)
        throw ConfigError("infinite bus has no feedback vector");

    FeedbackVector fb;
    fb.d_omega = x[L.omega(m)] - 1.0;
    fb.d_ut = out.u_t[m] - u_ref;
    fb.d_pe = out.p_e[m] - p_ref;
    switch (spec.kind) {
    case MachineKind::Htg:
    case MachineKind::Cg:
        fb.d_mu1 = x[L.mu(m)] - out.p_e[m];
        fb.size = 4;
        break;
    case MachineKind::Rg: {
        const double p_r = x[L.p_r(m)];
        if (std::abs(p_r) < pr_floor)
            throw ControlError("machine '" + spec.name + "': reheater power " +
                               std::to_string(p_r) +
                               " is below the feedback floor; IP opening deviation degenerates");
        fb.d_mu1 = x[L.mu_h(m)] - out.p_e[m];
        fb.d_mu2 = x[L.mu_i(m)] - out.p_e[m] / p_r;
        fb.size = 5;
        break;
    }
    case MachineKind::InfiniteBus:
        break;
    }
    return fb;
}

std::vector<double> pe_rate(const OutputGradients& grads,
                            std::span<const double> delta_dot,
                            std::span<const double> eq_dot) {
    const std::size_t n = grads.dpe_ddelta.rows();
    if (delta_dot.size() != n || eq_dot.size() != n)
        throw ConfigError("pe_rate argument lengths must match the gradient matrices");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += grads.dpe_ddelta(i, j) * delta_dot[j] + grads.dpe_deq(i, j) * eq_dot[j];
        out[i] = acc;
    }
    return out;
}

MachineControl control_law(const FeedbackVector& fb, const AffineTerms& affine,
                           const Gains& k, MachineKind kind) {
    MachineControl u;
    if (kind == MachineKind::InfiniteBus) return u;
    if (std::abs(affine.d_e) < 1e-300)
        throw ControlError("excitation channel gain is zero");
    if (std::abs(affine.d_g1) < 1e-300)
        throw ControlError("governor channel gain is zero");

    u.e_f = (-k.speed * fb.d_omega - k.voltage * fb.d_ut - affine.c_e) / affine.d_e;
    u.gov1 = (-k.power * fb.d_pe - k.opening * fb.d_mu1 - affine.c_g1) / affine.d_g1;
    if (kind == MachineKind::Rg) {
        if (!affine.has_g2 || std::abs(affine.d_g2) < 1e-300)
            throw ControlError("IP valve channel gain is zero");
        u.gov2 = (-k.ip_opening * fb.d_mu2 - affine.c_g2) / affine.d_g2;
    }
    return u;
}

namespace {

double clamp_flag(double v, double lo, double hi, bool& clipped) {
    if (v < lo) {
        clipped = true;
        return lo;
    }
    if (v > hi) {
        clipped = true;
        return hi;
    }
    return v;
}

} // namespace

MachineControl saturate(const MachineControl& raw, const ActuatorLimits& lim,
                        MachineKind kind, bool& saturated) {
    saturated = false;
    if (kind == MachineKind::InfiniteBus) return raw;
    MachineControl u = raw;
    u.e_f = clamp_flag(raw.e_f, lim.ef_min, lim.ef_max, saturated);
    u.gov1 = clamp_flag(raw.gov1, lim.gov1_min, lim.gov1_max, saturated);
    if (kind == MachineKind::Rg)
        u.gov2 = clamp_flag(raw.gov2, lim.gov2_min, lim.gov2_max, saturated);
    return u;
}

ControlInputs ControlEvaluation::inputs() const {
    ControlInputs u(machines.size());
    for (std::size_t m = 0; m < machines.size(); ++m) u[m] = machines[m].applied;
    return u;
}

bool ControlEvaluation::any_saturated() const {
    return std::any_of(machines.begin(), machines.end(),
                       [](const MachineControlRecord& r) { return r.saturated; });
}

ControlEvaluation compute_controls(std::span<const double> x,
                                   const ReducedNetwork& net,
                                   std::span<const MachineSpec> specs,
                                   std::span<const GeneratorAttachment> attach,
                                   const StateLayout& L,
                                   const ControllerConfig& cfg,
                                   std::span<const double> u_refs,
                                   std::span<const double> p_refs) {
    const std::size_t n = specs.size();
    if (cfg.machines.size() != n)
        throw ConfigError("controller config does not cover every machine");
    if (u_refs.size() != n || p_refs.size() != n)
        throw ConfigError("reference vectors must cover every machine");

    std::vector<double> delta(n), eq(n), delta_dot(n), emf_free_rate(n);
    for (std::size_t m = 0; m < n; ++m) {
        delta[m] = x[L.delta(m)];
        eq[m] = x[L.eq(m)];
        delta_dot[m] = specs[m].gen.omega_s * (x[L.omega(m)] - 1.0);
    }

    ControlEvaluation ev;
    ev.outputs = machine_outputs(net, delta, eq, attach);
    const OutputGradients grads = output_gradients(net, delta, eq, attach);
    ev.machines.resize(n);

    std::vector<std::size_t> controlled;
    for (std::size_t m = 0; m < n; ++m) {
        if (specs[m].kind == MachineKind::InfiniteBus) {
            emf_free_rate[m] = 0.0;
            continue;
        }
        controlled.push_back(m);
        const GeneratorParams& gp = specs[m].gen;
        emf_free_rate[m] =
            (-eq[m] - (gp.xd - gp.xd_prime) * ev.outputs.i_d[m]) / gp.td0_prime;
    }

    // terminal-voltage rate split: h = state-driven part, W = field coupling
    std::vector<double> h(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += grads.dut_ddelta(i, j) * delta_dot[j] +
                   grads.dut_deq(i, j) * emf_free_rate[j];
        h[i] = acc;
    }

    auto w = [&](std::size_t i, std::size_t j) {
        return grads.dut_deq(i, j) / specs[j].gen.td0_prime;
    };

    const std::size_t nc = controlled.size();
    std::vector<double> drive(nc), ef(nc, 0.0);
    for (std::size_t a = 0; a < nc; ++a) {
        const std::size_t i = controlled[a];
        if (std::abs(w(i, i)) < cfg.d_floor)
            throw ControlError("machine '" + specs[i].name +
                               "': terminal voltage is uncontrollable from the field "
                               "winding (|d| below floor)");
        const Gains& k = cfg.machines[i].gains;
        drive[a] = -k.speed * (x[L.omega(i)] - 1.0) -
                   k.voltage * (ev.outputs.u_t[i] - u_refs[i]);
    }

    if (nc > 0) {
        Matrix w_cc(nc, nc);
        std::vector<double> rhs(nc);
        for (std::size_t a = 0; a < nc; ++a) {
            for (std::size_t bb = 0; bb < nc; ++bb)
                w_cc(a, bb) = w(controlled[a], controlled[bb]);
            rhs[a] = drive[a] - h[controlled[a]];
        }
        try {
            ef = solve_linear(w_cc, rhs);
        } catch (const NumericsError&) {
            for (std::size_t a = 0; a < nc; ++a)
                ef[a] = rhs[a] / w_cc(a, a); // decoupled seed; sweeps refine it
        }
        for (std::size_t a = 0; a < nc; ++a) {
            const ActuatorLimits& lim = cfg.machines[controlled[a]].limits;
            ef[a] = std::clamp(ef[a], lim.ef_min, lim.ef_max);
        }

        // clamped Gauss-Seidel in fixed machine order; deterministic
        for (int sweep = 0; sweep < 200; ++sweep) {
            double max_change = 0.0;
            for (std::size_t a = 0; a < nc; ++a) {
                const std::size_t i = controlled[a];
                double coupling = h[i];
                for (std::size_t bb = 0; bb < nc; ++bb)
                    if (bb != a) coupling += w(i, controlled[bb]) * ef[bb];
                const double raw = (drive[a] - coupling) / w(i, i);
                const ActuatorLimits& lim = cfg.machines[i].limits;
                const double next = std::clamp(raw, lim.ef_min, lim.ef_max);
                max_change = std::max(max_change, std::abs(next - ef[a]));
                ef[a] = next;
            }
            if (max_change <= 1e-13) break;
        }
    }

    // emf rates under the resolved excitation, then the power rates
    std::vector<double> eq_dot(n, 0.0);
    for (std::size_t a = 0; a < nc; ++a) {
        const std::size_t i = controlled[a];
        eq_dot[i] = emf_free_rate[i] + ef[a] / specs[i].gen.td0_prime;
    }
    ev.pe_rates = pe_rate(grads, delta_dot, eq_dot);

    for (std::size_t a = 0; a < nc; ++a) {
        const std::size_t i = controlled[a];
        const MachineSpec& ms = specs[i];
        MachineControlRecord& rec = ev.machines[i];
        rec.controlled = true;
        rec.feedback = feedback_vector(x, L, i, ev.outputs, ms, u_refs[i], p_refs[i],
                                       cfg.pr_floor);

        AffineTerms& af = rec.affine;
        af.d_e = w(i, i);
        double others = h[i];
        for (std::size_t bb = 0; bb < nc; ++bb)
            if (bb != a) others += w(i, controlled[bb]) * ef[bb];
        af.c_e = others;

        switch (ms.kind) {
        case MachineKind::Htg:
            af.c_g1 = -x[L.mu(i)] / ms.gov.t_ws - ev.pe_rates[i];
            af.d_g1 = 1.0 / ms.gov.t_ws;
            break;
        case MachineKind::Cg:
            af.c_g1 = -x[L.mu(i)] / ms.gov.t_cs - ev.pe_rates[i];
            af.d_g1 = 1.0 / ms.gov.t_cs;
            break;
        case MachineKind::Rg: {
            af.c_g1 = -x[L.mu_h(i)] / ms.gov.t_hs - ev.pe_rates[i];
            af.d_g1 = 1.0 / ms.gov.t_hs;
            const double p_r = x[L.p_r(i)];
            const double p_r_dot = (x[L.p_h(i)] / ms.gov.c_h - p_r) / ms.gov.t_r;
            const double quot_rate =
                (ev.pe_rates[i] * p_r - ev.outputs.p_e[i] * p_r_dot) / (p_r * p_r);
            af.c_g2 = -x[L.mu_i(i)] / ms.gov.t_is - quot_rate;
            af.d_g2 = 1.0 / ms.gov.t_is;
            af.has_g2 = true;
            break;
        }
        default:
            break;
        }

        rec.raw = control_law(rec.feedback, af, cfg.machines[i].gains, ms.kind);
        rec.applied = saturate(rec.raw, cfg.machines[i].limits, ms.kind, rec.saturated);
    }
    return ev;
}

} // namespace lbcsim
