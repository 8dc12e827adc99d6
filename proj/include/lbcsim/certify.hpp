#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lbcsim/controller.hpp"
#include "lbcsim/numerics.hpp"
#include "lbcsim/plant.hpp"

namespace lbcsim {

/// Block-diagonal comparison system x_dot = A x + B u whose stabilization
/// certifies the physical closed loop: 4 states per hydro/condensing
/// machine, 5 per reheat machine.
struct SurrogateSystem {
    Matrix a;
    Matrix b;
    std::vector<MachineKind> kinds;
    std::size_t dim() const { return a.rows(); }
};

/// Assemble the surrogate for the controlled machine kinds in order.
/// Infinite-bus entries are rejected: they carry no controls.
SurrogateSystem build_surrogate(std::span<const MachineKind> kinds,
                                std::span<const SurrogateConstants> constants);

/// rank [B, AB, A^2 B, ...] with the shared column-normalized rank routine.
std::size_t controllability_rank(const SurrogateSystem& sys, double tol = 1e-8);

/// Gain matrix K with the decentralized sparsity pattern, rows per actuator.
Matrix gain_matrix(const SurrogateSystem& sys, std::span<const Gains> gains);

/// Global asymptotic stability certificate for the closed surrogate loop
/// phi = A - B K: certified iff the controllability rank is full and
/// psi = phi + phi^T is negative definite. `margin` is the most positive
/// eigenvalue of psi (negative when certified).
struct GasCertificate {
    Matrix phi;
    Matrix psi;
    std::vector<double> eigenvalues; // of psi, ascending
    std::size_t dim = 0;
    std::size_t rank = 0;
    bool certified = false;
    double margin = 0.0;
};

GasCertificate gas_certificate(const SurrogateSystem& sys,
                               std::span<const Gains> gains);

/// Candidate Lyapunov function: half the squared norm of the stacked
/// feedback deviations.
double lyapunov_value(std::span<const FeedbackVector> fbs);

/// One monitored sample of the Lyapunov trajectory. `violation` marks
/// v_dot above the noise floor; `saturated` echoes the actuator flag so
/// consumers can attribute violations.
struct LyapunovSample {
    double t = 0.0;
    double v = 0.0;
    double v_dot = 0.0;
    bool violation = false;
    bool saturated = false;
};

/// Centered-difference v_dot along a sampled V trajectory (one-sided at the
/// ends). Needs at least 3 samples.
std::vector<LyapunovSample> vdot_series(std::span<const double> v,
                                        std::span<const std::uint8_t> saturated,
                                        double dt, double noise_floor = 1e-9);

/// Human-readable certificate block for reports.
std::string certificate_report(const GasCertificate& cert);

} // namespace lbcsim
