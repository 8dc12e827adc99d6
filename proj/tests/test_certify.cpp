#include <doctest.h>

#include <cmath>
#include <vector>

#include "lbcsim/certify.hpp"

using namespace lbcsim;

namespace {

// closed-form eigenvalues of [[a,b],[b,d]]
std::pair<double, double> eig2(double a, double b, double d) {
    const double mid = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return {mid - rad, mid + rad};
}

SurrogateSystem single(MachineKind kind, SurrogateConstants sc = {}) {
    const MachineKind kinds[1] = {kind};
    const SurrogateConstants consts[1] = {sc};
    return build_surrogate(kinds, consts);
}

} // namespace

TEST_CASE("surrogate blocks wire the designer couplings and input selectors") {
    const SurrogateSystem sys = single(MachineKind::Htg);
    REQUIRE(sys.dim() == 4);
    REQUIRE(sys.b.cols() == 2);

    CHECK(sys.a(0, 0) == doctest::Approx(-300.0));
    CHECK(sys.a(0, 1) == doctest::Approx(-300.0));
    CHECK(sys.a(2, 2) == doctest::Approx(-10.0));
    CHECK(sys.a(2, 3) == doctest::Approx(10.0));
    CHECK(sys.b(1, 0) == doctest::Approx(1.0));
    CHECK(sys.b(3, 1) == doctest::Approx(1.0));

    // everything else stays zero
    double off_mass = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (!((i == 0 && (j == 0 || j == 1)) || (i == 2 && (j == 2 || j == 3))))
                off_mass += std::abs(sys.a(i, j));
    CHECK(off_mass == 0.0);

    const SurrogateSystem rg = single(MachineKind::Rg);
    REQUIRE(rg.dim() == 5);
    REQUIRE(rg.b.cols() == 3);
    CHECK(rg.b(4, 2) == doctest::Approx(1.0));
}

TEST_CASE("surrogate assembly rejects invalid machine lists") {
    const MachineKind inf[1] = {MachineKind::InfiniteBus};
    const SurrogateConstants one[1] = {{}};
    CHECK_THROWS_AS(build_surrogate(inf, one), ConfigError);
    CHECK_THROWS_AS(build_surrogate({}, {}), ConfigError);
    const MachineKind two[2] = {MachineKind::Htg, MachineKind::Cg};
    CHECK_THROWS_AS(build_surrogate(two, one), ConfigError);
}

TEST_CASE("controllability rank is full for the stock blocks") {
    CHECK(controllability_rank(single(MachineKind::Htg)) == 4);
    CHECK(controllability_rank(single(MachineKind::Cg)) == 4);
    CHECK(controllability_rank(single(MachineKind::Rg)) == 5);

    const MachineKind mix[4] = {MachineKind::Rg, MachineKind::Htg, MachineKind::Cg,
                                MachineKind::Rg};
    const SurrogateConstants consts[4] = {{}, {}, {}, {}};
    CHECK(controllability_rank(build_surrogate(mix, consts)) == 18);
}

TEST_CASE("severed couplings lose exactly the unreachable states") {
    // a2 = 0 strands the first state: inputs enter at rows 1 and 3 only
    SurrogateConstants no_a2;
    no_a2.a2 = 0.0;
    CHECK(controllability_rank(single(MachineKind::Htg, no_a2)) == 3);

    // a4 = 0 also strands the third state
    SurrogateConstants no_a4 = no_a2;
    no_a4.a4 = 0.0;
    CHECK(controllability_rank(single(MachineKind::Htg, no_a4)) == 2);
}

TEST_CASE("gain matrix carries the decentralized sparsity pattern") {
    const MachineKind mix[2] = {MachineKind::Htg, MachineKind::Rg};
    const SurrogateConstants consts[2] = {{}, {}};
    const SurrogateSystem sys = build_surrogate(mix, consts);
    const Gains gains[2] = {{}, {}};
    const Matrix k = gain_matrix(sys, gains);
    REQUIRE(k.rows() == 5);
    REQUIRE(k.cols() == 9);

    CHECK(k(0, 0) == doctest::Approx(-400.0));
    CHECK(k(0, 1) == doctest::Approx(30.0));
    CHECK(k(1, 2) == doctest::Approx(5.0));
    CHECK(k(1, 3) == doctest::Approx(5.0));
    // second machine's rows start at its own block
    CHECK(k(2, 4) == doctest::Approx(-400.0));
    CHECK(k(3, 6) == doctest::Approx(5.0));
    CHECK(k(4, 8) == doctest::Approx(5.0));

    // no cross-machine entries anywhere
    double cross = 0.0;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 4; c < 9; ++c) cross += std::abs(k(r, c));
    for (std::size_t r = 2; r < 5; ++r)
        for (std::size_t c = 0; c < 4; ++c) cross += std::abs(k(r, c));
    CHECK(cross == 0.0);
}

TEST_CASE("certificate eigenvalues match the closed-form block answers") {
    const auto [lo1, hi1] = eig2(-600.0, 100.0, -60.0);
    const auto [lo2, hi2] = eig2(-20.0, 5.0, -10.0);

    const GasCertificate cert =
        gas_certificate(single(MachineKind::Htg), std::vector<Gains>{{}});
    REQUIRE(cert.eigenvalues.size() == 4);
    CHECK(cert.eigenvalues[0] == doctest::Approx(lo1).epsilon(1e-12));
    CHECK(cert.eigenvalues[1] == doctest::Approx(hi1).epsilon(1e-12));
    CHECK(cert.eigenvalues[2] == doctest::Approx(lo2).epsilon(1e-12));
    CHECK(cert.eigenvalues[3] == doctest::Approx(hi2).epsilon(1e-12));
    CHECK(cert.certified);
    CHECK(cert.margin == doctest::Approx(hi2).epsilon(1e-12));

    // reheat blocks add one decoupled eigenvalue at -2 * ip gain
    const GasCertificate rg =
        gas_certificate(single(MachineKind::Rg), std::vector<Gains>{{}});
    REQUIRE(rg.eigenvalues.size() == 5);
    bool found = false;
    for (const double ev : rg.eigenvalues)
        if (std::abs(ev + 10.0) < 1e-9) found = true;
    CHECK(found);
    CHECK(rg.certified);
}

TEST_CASE("certificate fails on indefinite closed loops") {
    Gains bad;
    bad.speed = 300.0; // flips the coupling instead of damping it
    const GasCertificate cert =
        gas_certificate(single(MachineKind::Htg), std::vector<Gains>{bad});
    CHECK(cert.rank == 4);
    CHECK(cert.margin > 0.0);
    CHECK_FALSE(cert.certified);
}

TEST_CASE("certificate fails on rank deficiency even with a negative margin") {
    SurrogateConstants sc;
    sc.a2 = 0.0;
    Gains g;
    g.speed = 0.0; // keeps psi block-diagonal and negative definite
    const GasCertificate cert =
        gas_certificate(single(MachineKind::Htg, sc), std::vector<Gains>{g});
    CHECK(cert.rank == 3);
    CHECK(cert.margin < 0.0);
    CHECK_FALSE(cert.certified);
}

TEST_CASE("lyapunov value is half the stacked squared norm") {
    FeedbackVector a;
    a.d_omega = 0.1;
    a.d_ut = 0.2;
    a.d_pe = 0.3;
    a.d_mu1 = 0.4;

    FeedbackVector b = a;
    b.size = 5;
    b.d_mu2 = 0.5;

    const FeedbackVector both[2] = {a, b};
    CHECK(lyapunov_value({both, 1}) == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(lyapunov_value({both, 2}) == doctest::Approx(0.425).epsilon(1e-12));
}

TEST_CASE("vdot monitor differentiates exactly on quadratic inputs") {
    const double dt = 0.1;
    std::vector<double> v;
    std::vector<std::uint8_t> sat;
    for (int k = 0; k <= 20; ++k) {
        const double t = k * dt;
        v.push_back((t - 1.0) * (t - 1.0));
        sat.push_back(k == 5 ? 1 : 0);
    }
    const std::vector<LyapunovSample> s = vdot_series(v, sat, dt);
    REQUIRE(s.size() == v.size());

    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double t = static_cast<double>(k) * dt;
        // centered differences are exact for quadratics
        CHECK(s[k].v_dot == doctest::Approx(2.0 * (t - 1.0)).epsilon(1e-12));
        CHECK(s[k].violation == (2.0 * (t - 1.0) > 1e-9));
    }
    CHECK(s[5].saturated);
    CHECK_FALSE(s[6].saturated);
    CHECK(s.back().violation); // one-sided tail slope is positive here

    CHECK_THROWS_AS(vdot_series(std::vector<double>{1.0, 2.0},
                                std::vector<std::uint8_t>{0, 0}, dt),
                    ConfigError);
    CHECK_THROWS_AS(vdot_series(v, std::vector<std::uint8_t>(3, 0), dt), ConfigError);
    CHECK_THROWS_AS(vdot_series(v, sat, 0.0), ConfigError);
}

TEST_CASE("certificate report prints the verdict") {
    const GasCertificate cert =
        gas_certificate(single(MachineKind::Htg), std::vector<Gains>{{}});
    const std::string rep = certificate_report(cert);
    CHECK(rep.find("certified") != std::string::npos);
    CHECK(rep.find("yes") != std::string::npos);
    CHECK(rep.find("rank") != std::string::npos);
}
