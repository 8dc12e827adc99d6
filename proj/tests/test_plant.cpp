#include <doctest.h>

#include <cmath>
#include <vector>

#include "lbcsim/plant.hpp"

using namespace lbcsim;

namespace {

MachineSpec hydro_spec() {
    MachineSpec ms;
    ms.name = "H";
    ms.kind = MachineKind::Htg;
    ms.bus = "b";
    return ms;
}

} // namespace

TEST_CASE("generator derivative follows the third-order model") {
    GeneratorParams gp;
    gp.inertia = 4.0;
    gp.damping = 1.0;
    gp.xd = 1.8;
    gp.xd_prime = 0.3;
    gp.td0_prime = 7.0;

    const GeneratorDeriv d =
        generator_deriv(/*omega*/ 1.002, /*eq*/ 1.1, gp, /*e_f*/ 1.8,
                        /*p_m*/ 0.9, /*p_e*/ 0.8, /*i_d*/ 0.4);

    CHECK(d.delta_dot == doctest::Approx(gp.omega_s * 0.002).epsilon(1e-14));
    // (0.9 - 0.8 - 1*0.002) / 8
    CHECK(d.omega_dot == doctest::Approx(0.098 / 8.0).epsilon(1e-12));
    // (1.8 - 1.1 - 1.5*0.4) / 7
    CHECK(d.eq_dot == doctest::Approx(0.1 / 7.0).epsilon(1e-12));
}

TEST_CASE("hydro governor shows the water-hammer sign inversion") {
    GovernorParams gp; // t_w = 1, t_ws = 5
    const HydroGovDeriv d = hydro_gov_deriv(/*p_m*/ 0.6, /*mu_w*/ 0.5, /*u_w*/ 0.6, gp);
    CHECK(d.mu_dot == doctest::Approx(0.02).epsilon(1e-14));
    // 2/1 * (-0.6 + 0.5 - 1*0.02)
    CHECK(d.p_m_dot == doctest::Approx(-0.24).epsilon(1e-14));

    // raising the gate from steady state first REDUCES mechanical power
    const HydroGovDeriv kick = hydro_gov_deriv(0.5, 0.5, 0.9, gp);
    CHECK(kick.mu_dot > 0.0);
    CHECK(kick.p_m_dot < 0.0);
}

TEST_CASE("condensing governor is a plain first-order chain") {
    GovernorParams gp; // t_c = t_cs = 0.2
    const CondensingGovDeriv d =
        condensing_gov_deriv(/*p_m*/ 0.3, /*mu_c*/ 0.4, /*u_c*/ 0.6, gp);
    CHECK(d.p_m_dot == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d.mu_dot == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("reheat chain stages, bilinear IP valve and LP pass-through") {
    GovernorParams gp; // t_h=t_hs=0.2 t_r=10 t_i=0.1 t_is=0.2 t_l=0.1, c=[0.3,0.4,0.3]
    ReheatGovState s;
    s.p_h = 0.2;
    s.mu_h = 0.5;
    s.p_r = 0.6;
    s.p_i = 0.3;
    s.mu_i = 0.9;
    s.p_l = 0.25;

    const ReheatGovDeriv d = reheat_gov_deriv(s, /*u_h*/ 0.7, /*u_i*/ 1.0, gp);
    CHECK(d.p_h_dot == doctest::Approx((0.3 * 0.5 - 0.2) / 0.2).epsilon(1e-14));
    CHECK(d.mu_h_dot == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.p_r_dot == doctest::Approx((0.2 / 0.3 - 0.6) / 10.0).epsilon(1e-14));
    // IP power responds to the valve TIMES reheater pressure, not their sum
    CHECK(d.p_i_dot == doctest::Approx((0.4 * 0.6 * 0.9 - 0.3) / 0.1).epsilon(1e-14));
    CHECK(d.mu_i_dot == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d.p_l_dot == doctest::Approx(((0.3 / 0.4) * 0.3 - 0.25) / 0.1).epsilon(1e-14));
}

TEST_CASE("state layout blocks and kind guards") {
    std::vector<MachineSpec> specs(4);
    specs[0].kind = MachineKind::InfiniteBus;
    specs[1].kind = MachineKind::Htg;
    specs[2].kind = MachineKind::Rg;
    specs[3].kind = MachineKind::Cg;
    for (auto& s : specs) s.name = "m";

    const StateLayout L{specs};
    CHECK(L.size() == 4 + 5 + 9 + 5);
    CHECK(L.offset(0) == 0);
    CHECK(L.offset(1) == 4);
    CHECK(L.offset(2) == 9);
    CHECK(L.offset(3) == 18);

    CHECK(L.p_m(0) == 3);
    CHECK(L.mu(1) == 8);
    CHECK(L.p_h(2) == 12);
    CHECK(L.p_l(2) == 17);
    CHECK(L.mu(3) == 22);

    CHECK_THROWS_AS(L.p_m(2), ConfigError); // reheat has stage states instead
    CHECK_THROWS_AS(L.mu(2), ConfigError);
    CHECK_THROWS_AS(L.p_h(1), ConfigError);
}

TEST_CASE("mechanical power sums the reheat stages") {
    std::vector<MachineSpec> specs(2);
    specs[0].kind = MachineKind::Htg;
    specs[1].kind = MachineKind::Rg;
    for (auto& s : specs) s.name = "m";
    const StateLayout L{specs};

    std::vector<double> x(L.size(), 0.0);
    x[L.p_m(0)] = 0.42;
    x[L.p_h(1)] = 0.2;
    x[L.p_i(1)] = 0.3;
    x[L.p_l(1)] = 0.25;
    CHECK(mechanical_power(x, L, 0) == doctest::Approx(0.42));
    CHECK(mechanical_power(x, L, 1) == doctest::Approx(0.75));
}

TEST_CASE("infinite bus freezes emf and mechanical power") {
    std::vector<MachineSpec> specs(1);
    specs[0].name = "inf";
    specs[0].kind = MachineKind::InfiniteBus;
    specs[0].gen.inertia = 1e6;
    specs[0].gen.damping = 0.0;
    const StateLayout L{specs};

    std::vector<double> x(L.size(), 0.0);
    x[L.omega(0)] = 1.001;
    x[L.eq(0)] = 1.0;
    x[L.p_m(0)] = 0.7;

    MachineOutputs out;
    out.p_e = {0.9};
    out.u_t = {1.0};
    out.i_d = {0.2};
    out.i_q = {0.3};

    std::vector<double> dxdt(L.size());
    system_deriv(x, ControlInputs(1), out, specs, L, dxdt);

    CHECK(dxdt[L.eq(0)] == 0.0);
    CHECK(dxdt[L.p_m(0)] == 0.0);
    CHECK(dxdt[L.delta(0)] == doctest::Approx(specs[0].gen.omega_s * 0.001));
    // the huge inertia still integrates the power imbalance, just very slowly
    CHECK(dxdt[L.omega(0)] == doctest::Approx((0.7 - 0.9) / 2e6).epsilon(1e-12));
}

TEST_CASE("machine validation rejects broken parameter sets") {
    MachineSpec ms = hydro_spec();
    ms.gen.inertia = 0.0;
    CHECK_THROWS_WITH_AS(ms.validate(), doctest::Contains("inertia"), ConfigError);

    ms = hydro_spec();
    ms.gen.xd = 0.2; // below xd_prime
    CHECK_THROWS_WITH_AS(ms.validate(), doctest::Contains("xd"), ConfigError);

    ms = hydro_spec();
    ms.gov.t_ws = 0.0;
    CHECK_THROWS_WITH_AS(ms.validate(), doctest::Contains("t_ws"), ConfigError);

    ms = hydro_spec();
    ms.kind = MachineKind::Rg;
    ms.gov.c_h = 0.5; // fractions now sum to 1.2
    CHECK_THROWS_WITH_AS(ms.validate(), doctest::Contains("sum to 1"), ConfigError);

    ms = hydro_spec();
    CHECK_NOTHROW(ms.validate());
}
