#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lbcsim/errors.hpp"
#include "lbcsim/numerics.hpp"

namespace lbcsim {

using Complex = std::complex<double>;

struct Bus {
    std::string id;
    double shunt_g = 0.0; // constant-impedance load / compensation, p.u.
    double shunt_b = 0.0;
};

struct Branch {
    std::string id;
    std::string from;
    std::string to;
    double series_g = 0.0;
    double series_b = 0.0; // a reactance x contributes b = -1/x
    bool in_service = true;
};

/// Where machine `machine` connects and through which transient reactance.
struct GeneratorAttachment {
    std::size_t machine = 0;
    std::string bus;
    double xd_prime = 0.3;
};

struct NetworkSpec {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<GeneratorAttachment> generators;
    double fault_conductance = 1e6;       // bolted three-phase fault shunt
    std::vector<std::string> faulted_buses;

    std::size_t bus_index(const std::string& id) const;
    Branch& branch(const std::string& id);
    const Branch& branch(const std::string& id) const;

    /// Structural checks: unique ids, resolvable endpoints, one attachment
    /// per machine index, positive reactances, generators not islanded
    /// from each other by out-of-service branches.
    void validate() const;
};

/// Bus-admittance matrix extended with one internal node per machine,
/// internal nodes appended after the buses in machine order.
struct AdmittanceMatrix {
    std::size_t n_bus = 0;
    std::size_t n_machine = 0;
    std::vector<Complex> y;

    std::size_t dim() const { return n_bus + n_machine; }
    Complex& at(std::size_t i, std::size_t j) { return y[i * dim() + j]; }
    const Complex& at(std::size_t i, std::size_t j) const { return y[i * dim() + j]; }
    std::size_t internal_node(std::size_t machine) const { return n_bus + machine; }
};

/// Admittance between the retained nodes after eliminating the rest.
struct ReducedNetwork {
    std::size_t n = 0;
    Matrix g; // conductance part, symmetric
    Matrix b; // susceptance part, symmetric
};

/// Instantaneous electrical quantities at each machine, rotor frame.
struct MachineOutputs {
    std::vector<double> p_e;  // electrical power
    std::vector<double> u_t;  // terminal voltage magnitude
    std::vector<double> i_d;  // direct-axis current
    std::vector<double> i_q;  // quadrature-axis current
};

/// Sensitivities of P_e and U_t to every machine's angle and emf.
struct OutputGradients {
    Matrix dpe_ddelta;
    Matrix dpe_deq;
    Matrix dut_ddelta;
    Matrix dut_deq;
};

enum class NetworkEventKind {
    FaultAtBus,
    ClearFaultRemoveLine,
    RemoveLine,
    Restore,
};

struct NetworkEvent {
    NetworkEventKind kind = NetworkEventKind::FaultAtBus;
    double time = 0.0;
    std::string bus;    // FaultAtBus, ClearFaultRemoveLine, Restore (fault clear)
    std::string branch; // ClearFaultRemoveLine, RemoveLine, Restore
};

AdmittanceMatrix build_admittance(const NetworkSpec& spec);

/// Schur complement onto `keep`: Y_red = Y_kk - Y_ke Y_ee^{-1} Y_ek.
/// Throws NetworkError when the eliminated block is singular (names a node).
ReducedNetwork kron_reduce(const AdmittanceMatrix& y,
                           const std::vector<std::size_t>& keep);

/// build_admittance + kron_reduce down to the machine internal nodes.
ReducedNetwork reduce_to_machines(const NetworkSpec& spec);

/// Outputs for internal emfs eq /_ delta. `attach` supplies xd' per machine
/// for terminal-voltage recovery; machine order matches the reduced network.
MachineOutputs machine_outputs(const ReducedNetwork& net,
                               std::span<const double> delta,
                               std::span<const double> eq,
                               std::span<const GeneratorAttachment> attach);

/// Analytic gradients matching machine_outputs. Throws NetworkError when a
/// terminal voltage magnitude is zero (gradient undefined there).
OutputGradients output_gradients(const ReducedNetwork& net,
                                 std::span<const double> delta,
                                 std::span<const double> eq,
                                 std::span<const GeneratorAttachment> attach);

/// Value-semantics topology change; validates the result.
NetworkSpec apply_event(NetworkSpec spec, const NetworkEvent& ev);

} // namespace lbcsim
