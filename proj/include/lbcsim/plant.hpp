#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lbcsim/errors.hpp"
#include "lbcsim/network.hpp"

namespace lbcsim {

/// Machine kinds: three turbine/governor families plus the infinite bus,
/// which is a huge-inertia machine with frozen emf and no controls.
enum class MachineKind {
    InfiniteBus,
    Htg, // hydro turbine + governor
    Cg,  // condensing steam turbine + governor
    Rg,  // reheat steam turbine + governor (HP/IP/LP stages)
};

const char* kind_name(MachineKind k);

struct GeneratorParams {
    double inertia = 5.0;      // H, seconds
    double damping = 1.0;      // D, p.u. torque per p.u. speed deviation
    double xd = 1.8;           // d-axis synchronous reactance
    double xd_prime = 0.3;     // d-axis transient reactance
    double td0_prime = 7.0;    // open-circuit transient time constant, s
    double omega_s = 2.0 * std::numbers::pi * 60.0; // synchronous speed, rad/s
};

/// Time constants and stage fractions. Only the fields for the machine's
/// kind are read; stage fractions must sum to 1 for reheat units.
struct GovernorParams {
    // hydro
    double t_w = 1.0;   // water starting time
    double t_ws = 5.0;  // gate servo
    // condensing steam
    double t_c = 0.2;   // steam volume
    double t_cs = 0.2;  // valve servo
    // reheat steam
    double t_h = 0.2;   // HP steam volume
    double t_hs = 0.2;  // HP valve servo
    double t_r = 10.0;  // reheater
    double t_i = 0.1;   // IP steam volume
    double t_is = 0.2;  // IP valve servo
    double t_l = 0.1;   // LP steam volume
    double c_h = 0.3;   // HP power fraction
    double c_i = 0.4;   // IP power fraction
    double c_l = 0.3;   // LP power fraction
};

struct MachineSpec {
    std::string name;
    MachineKind kind = MachineKind::Htg;
    std::string bus;
    GeneratorParams gen;
    GovernorParams gov;
    double voltage_ref = 1.0; // terminal voltage target
    double power_ref = 0.0;   // electrical power target
    double emf = 1.0;         // fixed E'q, infinite bus only

    void validate() const;
};

/// Flat state-vector layout, one contiguous block per machine:
///   infinite bus: [delta, omega, eq, p_m]
///   hydro:        [delta, omega, eq, p_m, mu_w]
///   condensing:   [delta, omega, eq, p_m, mu_c]
///   reheat:       [delta, omega, eq, p_h, mu_h, p_r, p_i, mu_i, p_l]
/// omega is per-unit (1 = synchronous); delta in radians.
class StateLayout {
public:
    StateLayout() = default;
    explicit StateLayout(std::span<const MachineSpec> machines);

    std::size_t size() const { return size_; }
    std::size_t machines() const { return kinds_.size(); }
    MachineKind kind(std::size_t m) const { return kinds_[m]; }
    std::size_t offset(std::size_t m) const { return offsets_[m]; }
    std::size_t block_size(std::size_t m) const;

    std::size_t delta(std::size_t m) const { return offsets_[m]; }
    std::size_t omega(std::size_t m) const { return offsets_[m] + 1; }
    std::size_t eq(std::size_t m) const { return offsets_[m] + 2; }
    // hydro/condensing/infinite-bus mechanical power state
    std::size_t p_m(std::size_t m) const;
    // hydro gate / condensing valve opening
    std::size_t mu(std::size_t m) const;
    // reheat stage states
    std::size_t p_h(std::size_t m) const;
    std::size_t mu_h(std::size_t m) const;
    std::size_t p_r(std::size_t m) const;
    std::size_t p_i(std::size_t m) const;
    std::size_t mu_i(std::size_t m) const;
    std::size_t p_l(std::size_t m) const;

private:
    std::vector<MachineKind> kinds_;
    std::vector<std::size_t> offsets_;
    std::size_t size_ = 0;
};

/// Actuator commands for one machine. `gov1` is the gate/valve command
/// (U_W, U_C or U_H by kind); `gov2` is the IP valve command of reheat
/// units and unused otherwise.
struct MachineControl {
    double e_f = 0.0;
    double gov1 = 0.0;
    double gov2 = 0.0;
};

using ControlInputs = std::vector<MachineControl>;

struct GeneratorDeriv {
    double delta_dot = 0.0;
    double omega_dot = 0.0;
    double eq_dot = 0.0;
};

/// Third-order generator dynamics with field drive e_f and the network
/// quantities p_e, i_d seen at the machine.
GeneratorDeriv generator_deriv(double omega, double eq, const GeneratorParams& gp,
                               double e_f, double p_m, double p_e, double i_d);

struct HydroGovDeriv {
    double p_m_dot = 0.0;
    double mu_dot = 0.0;
};

/// Hydro turbine with water-hammer zero: a gate-opening rise first dips
/// mechanical power.
HydroGovDeriv hydro_gov_deriv(double p_m, double mu_w, double u_w,
                              const GovernorParams& gp);

struct CondensingGovDeriv {
    double p_m_dot = 0.0;
    double mu_dot = 0.0;
};

CondensingGovDeriv condensing_gov_deriv(double p_m, double mu_c, double u_c,
                                        const GovernorParams& gp);

struct ReheatGovState {
    double p_h = 0.0;
    double mu_h = 0.0;
    double p_r = 0.0;
    double p_i = 0.0;
    double mu_i = 0.0;
    double p_l = 0.0;
};

struct ReheatGovDeriv {
    double p_h_dot = 0.0;
    double mu_h_dot = 0.0;
    double p_r_dot = 0.0;
    double p_i_dot = 0.0;
    double mu_i_dot = 0.0;
    double p_l_dot = 0.0;
};

/// Reheat chain: HP inlet, reheater, IP valve acting multiplicatively on
/// reheater output, LP proportional stage. Total P_M = p_h + p_i + p_l.
ReheatGovDeriv reheat_gov_deriv(const ReheatGovState& s, double u_h, double u_i,
                                const GovernorParams& gp);

/// Mechanical power of machine m under layout L: a state for hydro,
/// condensing and infinite-bus units, the stage sum for reheat units.
double mechanical_power(std::span<const double> x, const StateLayout& L, std::size_t m);

/// Full open-loop derivative given controls and precomputed outputs.
void system_deriv(std::span<const double> x, const ControlInputs& u,
                  const MachineOutputs& out, std::span<const MachineSpec> specs,
                  const StateLayout& L, std::span<double> dxdt);

/// Convenience overload computing outputs from the reduced network.
std::vector<double> system_deriv(std::span<const double> x, const ControlInputs& u,
                                 const ReducedNetwork& net,
                                 std::span<const MachineSpec> specs,
                                 std::span<const GeneratorAttachment> attach,
                                 const StateLayout& L);

} // namespace lbcsim
