#include <doctest.h>

#include <cmath>
#include <vector>

#include "lbcsim/controller.hpp"
#include "lbcsim/scenario.hpp"
#include "lbcsim/test_systems.hpp"

using namespace lbcsim;

namespace {

struct DeskFixture {
    ScenarioConfig cfg = desk_config();
    StateLayout L;
    ReducedNetwork net;
    std::vector<double> x;
    std::vector<double> u_refs, p_refs;

    DeskFixture() {
        L = StateLayout{cfg.machines};
        cfg.controller.resize_for(cfg.machines);
        net = reduce_to_machines(cfg.network);
        x = initialize_equilibrium(cfg, L);
        for (const MachineSpec& ms : cfg.machines) {
            u_refs.push_back(ms.voltage_ref);
            p_refs.push_back(ms.power_ref);
        }
    }

    ControlEvaluation eval() const {
        return compute_controls(x, net, cfg.machines, cfg.network.generators, L,
                                cfg.controller, u_refs, p_refs);
    }
};

} // namespace

TEST_CASE("feedback vector collects the local deviations") {
    std::vector<MachineSpec> specs(1);
    specs[0].name = "H";
    specs[0].kind = MachineKind::Htg;
    const StateLayout L{specs};

    std::vector<double> x(L.size(), 0.0);
    x[L.omega(0)] = 1.01;
    x[L.mu(0)] = 0.55;

    MachineOutputs out;
    out.p_e = {0.4};
    out.u_t = {1.02};
    out.i_d = {0.0};
    out.i_q = {0.0};

    const FeedbackVector fb =
        feedback_vector(x, L, 0, out, specs[0], /*u_ref*/ 1.0, /*p_ref*/ 0.5, 0.05);
    CHECK(fb.size == 4);
    CHECK(fb.d_omega == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(fb.d_ut == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(fb.d_pe == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(fb.d_mu1 == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(fb.as_vector().size() == 4);
}

TEST_CASE("reheat feedback adds the IP quotient and guards its floor") {
    std::vector<MachineSpec> specs(1);
    specs[0].name = "R";
    specs[0].kind = MachineKind::Rg;
    const StateLayout L{specs};

    std::vector<double> x(L.size(), 0.0);
    x[L.omega(0)] = 1.0;
    x[L.mu_h(0)] = 0.45;
    x[L.p_r(0)] = 0.8;
    x[L.mu_i(0)] = 0.55;

    MachineOutputs out;
    out.p_e = {0.4};
    out.u_t = {1.0};
    out.i_d = {0.0};
    out.i_q = {0.0};

    const FeedbackVector fb = feedback_vector(x, L, 0, out, specs[0], 1.0, 0.4, 0.05);
    CHECK(fb.size == 5);
    CHECK(fb.d_mu1 == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(fb.d_mu2 == doctest::Approx(0.55 - 0.5).epsilon(1e-12));

    x[L.p_r(0)] = 0.01; // reheater nearly empty: the quotient degenerates
    CHECK_THROWS_WITH_AS(feedback_vector(x, L, 0, out, specs[0], 1.0, 0.4, 0.05),
                         doctest::Contains("feedback floor"), ControlError);
}

TEST_CASE("control law cancels affine terms and injects linear feedback") {
    FeedbackVector fb;
    fb.d_omega = 0.001;
    fb.d_ut = -0.02;
    fb.d_pe = 0.03;
    fb.d_mu1 = -0.04;

    AffineTerms af;
    af.c_e = 0.5;
    af.d_e = 2.0;
    af.c_g1 = -0.1;
    af.d_g1 = 0.2;

    const Gains k; // speed -400, voltage 30, power 5, opening 5
    const MachineControl u = control_law(fb, af, k, MachineKind::Htg);
    // (400*0.001 + 30*0.02 - 0.5) / 2
    CHECK(u.e_f == doctest::Approx(0.25).epsilon(1e-12));
    // (-5*0.03 + 5*0.04 + 0.1) / 0.2
    CHECK(u.gov1 == doctest::Approx(0.75).epsilon(1e-12));

    fb.size = 5;
    fb.d_mu2 = 0.05;
    af.c_g2 = -0.3;
    af.d_g2 = 5.0;
    af.has_g2 = true;
    const MachineControl ur = control_law(fb, af, k, MachineKind::Rg);
    CHECK(ur.gov2 == doctest::Approx((-5.0 * 0.05 + 0.3) / 5.0).epsilon(1e-12));

    af.d_e = 0.0;
    CHECK_THROWS_AS(control_law(fb, af, k, MachineKind::Htg), ControlError);
}

TEST_CASE("saturation clamps and reports per channel") {
    const ActuatorLimits lim = default_limits(MachineKind::Htg);
    CHECK(lim.gov1_max == doctest::Approx(6.0));
    CHECK(default_limits(MachineKind::Cg).gov1_max == doctest::Approx(0.8));
    CHECK(default_limits(MachineKind::Rg).gov2_max == doctest::Approx(1.1));

    MachineControl raw;
    raw.e_f = 32.0;
    raw.gov1 = 0.5;
    bool clipped = false;
    const MachineControl u = saturate(raw, lim, MachineKind::Htg, clipped);
    CHECK(clipped);
    CHECK(u.e_f == doctest::Approx(5.0));
    CHECK(u.gov1 == doctest::Approx(0.5));

    raw.e_f = 1.0;
    const MachineControl v = saturate(raw, lim, MachineKind::Htg, clipped);
    CHECK_FALSE(clipped);
    CHECK(v.e_f == doctest::Approx(1.0));
}

TEST_CASE("power rate contracts gradients with the state rates") {
    OutputGradients g;
    g.dpe_ddelta = Matrix(2, 2);
    g.dpe_deq = Matrix(2, 2);
    g.dut_ddelta = Matrix(2, 2);
    g.dut_deq = Matrix(2, 2);
    double v = 1.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) g.dpe_ddelta(i, j) = v++;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) g.dpe_deq(i, j) = v++;

    const std::vector<double> dd{0.1, 0.2}, de{0.01, 0.02};
    const std::vector<double> r = pe_rate(g, dd, de);
    CHECK(r[0] == doctest::Approx(0.67).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(1.33).epsilon(1e-12));
}

TEST_CASE("controls at equilibrium reproduce the operating point") {
    const DeskFixture fx;
    const ControlEvaluation ev = fx.eval();

    for (std::size_t m = 0; m < fx.cfg.machines.size(); ++m) {
        const MachineSpec& ms = fx.cfg.machines[m];
        const MachineControlRecord& rec = ev.machines[m];
        if (ms.kind == MachineKind::InfiniteBus) {
            CHECK_FALSE(rec.controlled);
            continue;
        }
        REQUIRE(rec.controlled);
        CHECK_FALSE(rec.saturated);

        // zero deviations in, equilibrium actuators out
        for (const double f : rec.feedback.as_vector()) CHECK(std::abs(f) < 1e-9);

        const double i_d = ev.outputs.i_d[m];
        const double ef_eq =
            fx.x[fx.L.eq(m)] + (ms.gen.xd - ms.gen.xd_prime) * i_d;
        CHECK(rec.applied.e_f == doctest::Approx(ef_eq).epsilon(1e-8));

        const double pe = ev.outputs.p_e[m];
        CHECK(rec.applied.gov1 == doctest::Approx(pe).epsilon(1e-7));
        if (ms.kind == MachineKind::Rg)
            CHECK(rec.applied.gov2 == doctest::Approx(1.0).epsilon(1e-7));

        // servo channels expose their literal time constants
        const double t_sv = ms.kind == MachineKind::Htg   ? ms.gov.t_ws
                            : ms.kind == MachineKind::Cg ? ms.gov.t_cs
                                                         : ms.gov.t_hs;
        CHECK(rec.affine.d_g1 == doctest::Approx(1.0 / t_sv).epsilon(1e-12));
        CHECK(rec.affine.d_e > 0.0);
    }
}

TEST_CASE("resolved excitation satisfies the coupled voltage-rate balance") {
    DeskFixture fx;
    // nudge the state off equilibrium so the channels carry real signal
    for (std::size_t m = 0; m < fx.cfg.machines.size(); ++m) {
        fx.x[fx.L.delta(m)] += 0.01 * static_cast<double>(m);
        fx.x[fx.L.omega(m)] += 1e-4;
    }
    const ControlEvaluation ev = fx.eval();
    REQUIRE_FALSE(ev.any_saturated());

    // independent reconstruction of the voltage-rate split
    const std::size_t n = fx.cfg.machines.size();
    std::vector<double> delta(n), eq(n), delta_dot(n), free_rate(n);
    for (std::size_t m = 0; m < n; ++m) {
        delta[m] = fx.x[fx.L.delta(m)];
        eq[m] = fx.x[fx.L.eq(m)];
        delta_dot[m] = fx.cfg.machines[m].gen.omega_s * (fx.x[fx.L.omega(m)] - 1.0);
        const GeneratorParams& gp = fx.cfg.machines[m].gen;
        free_rate[m] = fx.cfg.machines[m].kind == MachineKind::InfiniteBus
                           ? 0.0
                           : (-eq[m] - (gp.xd - gp.xd_prime) * ev.outputs.i_d[m]) /
                                 gp.td0_prime;
    }
    const OutputGradients grads =
        output_gradients(fx.net, delta, eq, fx.cfg.network.generators);

    for (std::size_t i = 0; i < n; ++i) {
        if (fx.cfg.machines[i].kind == MachineKind::InfiniteBus) continue;
        double u_dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            u_dot += grads.dut_ddelta(i, j) * delta_dot[j] +
                     grads.dut_deq(i, j) * free_rate[j];
            if (fx.cfg.machines[j].kind != MachineKind::InfiniteBus)
                u_dot += grads.dut_deq(i, j) / fx.cfg.machines[j].gen.td0_prime *
                         ev.machines[j].applied.e_f;
        }
        const Gains& k = fx.cfg.controller.machines[i].gains;
        const double drive = -k.speed * ev.machines[i].feedback.d_omega -
                             k.voltage * ev.machines[i].feedback.d_ut;
        CHECK(u_dot == doctest::Approx(drive).epsilon(1e-9));

        // and the recorded affine split tells the same story
        const MachineControlRecord& rec = ev.machines[i];
        CHECK(rec.affine.c_e + rec.affine.d_e * rec.applied.e_f ==
              doctest::Approx(drive).epsilon(1e-9));
    }
}

TEST_CASE("other machines' governor states never leak into a controller") {
    DeskFixture fx;
    for (std::size_t m = 0; m < fx.cfg.machines.size(); ++m)
        fx.x[fx.L.delta(m)] += 0.005 * static_cast<double>(m + 1);

    const ControlEvaluation base = fx.eval();

    // kick the hydro machine's internal governor states hard
    const std::size_t hydro = fx.cfg.machine_index("G3");
    fx.x[fx.L.p_m(hydro)] += 0.2;
    fx.x[fx.L.mu(hydro)] += 0.3;
    const ControlEvaluation bumped = fx.eval();

    for (std::size_t m = 0; m < fx.cfg.machines.size(); ++m) {
        if (m == hydro || !base.machines[m].controlled) continue;
        // bit-identical: the other controllers never saw the change
        CHECK(bumped.machines[m].applied.e_f == base.machines[m].applied.e_f);
        CHECK(bumped.machines[m].applied.gov1 == base.machines[m].applied.gov1);
        CHECK(bumped.machines[m].applied.gov2 == base.machines[m].applied.gov2);
        CHECK(bumped.machines[m].affine.c_e == base.machines[m].affine.c_e);
        CHECK(bumped.machines[m].affine.c_g1 == base.machines[m].affine.c_g1);
        CHECK(bumped.machines[m].feedback.d_mu1 == base.machines[m].feedback.d_mu1);
    }
    // while the kicked machine itself reacts
    CHECK(bumped.machines[hydro].applied.gov1 != base.machines[hydro].applied.gov1);
}
