#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lbcsim/network.hpp"
#include "lbcsim/plant.hpp"

namespace lbcsim {

/// Measured deviations driving one machine's control, local quantities only:
/// [speed, terminal voltage, electrical power, opening] for hydro/condensing,
/// plus the IP opening deviation for reheat units. Opening deviations compare
/// the servo state against the electrical power it should reproduce.
struct FeedbackVector {
    double d_omega = 0.0;
    double d_ut = 0.0;
    double d_pe = 0.0;
    double d_mu1 = 0.0; // mu_w - p_e | mu_c - p_e | mu_h - p_e
    double d_mu2 = 0.0; // mu_i - p_e / p_r, reheat only
    int size = 4;

    std::vector<double> as_vector() const;
};

/// Per-channel affine decomposition of a feedback component's rate:
/// d(component)/dt = c + d * u for the channel's own actuator u.
struct AffineTerms {
    double c_e = 0.0;
    double d_e = 0.0;
    double c_g1 = 0.0;
    double d_g1 = 0.0;
    double c_g2 = 0.0;
    double d_g2 = 0.0;
    bool has_g2 = false;
};

/// Feedback gains by role. Signs are applied literally in the control law,
/// so a negative speed gain yields positive damping injection.
struct Gains {
    double speed = -400.0;      // on d_omega, excitation channel
    double voltage = 30.0;      // on d_ut, excitation channel
    double power = 5.0;         // on d_pe, governor channel
    double opening = 5.0;       // on d_mu1, governor channel
    double ip_opening = 5.0;    // on d_mu2, IP valve channel
};

/// Designer constants of the per-machine comparison blocks used by the
/// stability certificate.
struct SurrogateConstants {
    double a1 = -300.0;
    double a2 = -300.0;
    double a3 = -10.0;
    double a4 = 10.0;
};

struct ActuatorLimits {
    double ef_min = -5.0;
    double ef_max = 5.0;
    double gov1_min = 0.0;  // gate / valve command floor
    double gov1_max = 6.0;  // kind-specific ceiling
    double gov2_min = 0.0;  // IP valve, reheat only
    double gov2_max = 1.1;
};

/// Defaults by machine kind: hydro gate 0..6, condensing valve 0..0.8,
/// reheat HP valve 0..7 and IP valve 0..1.1, field +-5.
ActuatorLimits default_limits(MachineKind kind);

struct MachineControllerConfig {
    SurrogateConstants surrogate;
    Gains gains;
    ActuatorLimits limits;
};

struct ControllerConfig {
    std::vector<MachineControllerConfig> machines; // one entry per machine
    double d_floor = 1e-6;   // minimum |d| of the excitation channel
    double pr_floor = 0.05;  // minimum |p_r| for the IP feedback quotient

    void resize_for(std::span<const MachineSpec> specs);
};

/// Local feedback vector for machine m. Throws ControlError when a reheat
/// unit's |p_r| sits below `pr_floor` (the IP quotient degenerates).
FeedbackVector feedback_vector(std::span<const double> x, const StateLayout& L,
                               std::size_t m, const MachineOutputs& out,
                               const MachineSpec& spec, double u_ref, double p_ref,
                               double pr_floor);

/// d(P_e)/dt for every machine from the output gradients and state rates.
std::vector<double> pe_rate(const OutputGradients& grads,
                            std::span<const double> delta_dot,
                            std::span<const double> eq_dot);

/// Raw (unsaturated) control law: each channel cancels its affine terms and
/// replaces them with linear feedback.
MachineControl control_law(const FeedbackVector& fb, const AffineTerms& affine,
                           const Gains& k, MachineKind kind);

/// Clamp to actuator range. `saturated` reports whether any channel clipped.
MachineControl saturate(const MachineControl& raw, const ActuatorLimits& lim,
                        MachineKind kind, bool& saturated);

/// Everything the controller computed at one instant, per machine.
struct MachineControlRecord {
    FeedbackVector feedback;
    AffineTerms affine;
    MachineControl raw;
    MachineControl applied;
    bool controlled = false;
    bool saturated = false;
};

struct ControlEvaluation {
    MachineOutputs outputs;
    std::vector<double> pe_rates;
    std::vector<MachineControlRecord> machines;
    ControlInputs inputs() const;
    bool any_saturated() const;
};

/// Evaluate the complete decentralized control law at state x.
///
/// The excitation channels are coupled through the terminal-voltage rate:
/// each machine's affine term sees the other machines' applied field drives
/// (its own is excluded by construction). They are resolved simultaneously:
/// direct solve of the small coupling system, then clamped Gauss-Seidel
/// sweeps in fixed machine order until the applied values are stationary,
/// which keeps saturated machines consistent with the rest.
///
/// Throws ControlError when an excitation channel's |d| falls below
/// cfg.d_floor (voltage uncontrollable from that field winding) or on the
/// reheat p_r floor; NetworkError on zero terminal voltage.
ControlEvaluation compute_controls(std::span<const double> x,
                                   const ReducedNetwork& net,
                                   std::span<const MachineSpec> specs,
                                   std::span<const GeneratorAttachment> attach,
                                   const StateLayout& L,
                                   const ControllerConfig& cfg,
                                   std::span<const double> u_refs,
                                   std::span<const double> p_refs);

} // namespace lbcsim
