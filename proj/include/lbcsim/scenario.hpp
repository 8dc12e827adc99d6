#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lbcsim/certify.hpp"
#include "lbcsim/controller.hpp"
#include "lbcsim/network.hpp"
#include "lbcsim/plant.hpp"

namespace lbcsim {

struct ReferenceStep {
    enum class Kind { Voltage, Power };
    Kind kind = Kind::Voltage;
    double time = 0.0;
    std::size_t machine = 0;
    double value = 0.0;
};

struct FaultSpec {
    std::string bus;
    std::string remove_branch;
    double apply_time = 0.5;
    double clearing_time = 0.15;
};

struct CctOptions {
    double bracket_lo = 0.01;
    double bracket_hi = 1.0;
    double tolerance = 0.005;
    int prescan_points = 0; // >0 enables the parallel pre-scan
};

struct SimOptions {
    double t_end = 10.0;
    double dt = 1e-3;
    double vdot_floor = 1e-9;       // noise floor for the V_dot monitor
    double omega_tol = 1e-4;        // speed band of the stability verdict
    double angle_spread_max = 3.141592653589793;
};

struct OutputOptions {
    std::string dir;          // empty: no files written
    bool plot_script = false;
};

struct ScenarioConfig {
    int schema_version = 1;
    NetworkSpec network;
    std::vector<MachineSpec> machines;
    ControllerConfig controller;
    std::vector<NetworkEvent> network_events;
    std::vector<ReferenceStep> reference_steps;
    std::optional<FaultSpec> fault;
    CctOptions cct;
    SimOptions sim;
    OutputOptions outputs;

    void validate() const;
    std::size_t machine_index(const std::string& name) const;
};

/// Sampled closed-loop trajectory. Struct-of-arrays per machine; every
/// series has one entry per recorded step (dt apart, t = index * dt).
struct Trajectory {
    struct MachineSeries {
        MachineKind kind = MachineKind::Htg;
        std::string name;
        std::vector<double> delta, omega, eq;
        std::vector<double> p_m, u_t, p_e;
        std::vector<double> gov; // flattened extra governor states, row per sample
        std::size_t gov_width = 0;
        std::vector<double> ef_raw, ef, gov1_raw, gov1, gov2_raw, gov2;
        std::vector<double> fb_omega, fb_ut, fb_pe, fb_mu1, fb_mu2;
        std::vector<double> c_e, d_e, c_g1, d_g1, c_g2, d_g2;
        std::vector<std::uint8_t> saturated;
    };

    double dt = 1e-3;
    std::vector<double> time;
    std::vector<MachineSeries> machines;
    std::vector<double> v;                    // Lyapunov samples
    std::vector<std::uint8_t> any_saturated;
    std::vector<double> event_times;          // when refs or topology changed
    std::vector<std::string> warnings;

    std::size_t samples() const { return time.size(); }
};

/// Solve the operating point: angles and emfs meeting every controlled
/// machine's (P_0, U_0), governor chains at their fixed points, field drives
/// reproducing the emfs, infinite-bus mechanical power balancing its load.
/// Throws InfeasibleError when no equilibrium exists (names the residual).
std::vector<double> initialize_equilibrium(const ScenarioConfig& cfg,
                                           const StateLayout& L);

/// Integrate the closed loop from equilibrium through the configured
/// reference steps and network events. The control law is re-evaluated at
/// every integrator stage. Throws DivergenceError on non-finite states,
/// ControlError on mid-run controller degeneracy.
Trajectory run(const ScenarioConfig& cfg);

/// Stability certificate over the config's controlled machines.
GasCertificate config_certificate(const ScenarioConfig& cfg);

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct LyapunovReport {
    std::vector<LyapunovSample> samples;
    std::size_t post_event_count = 0;
    std::size_t violations = 0;           // post-event, above noise floor
    std::size_t unsaturated_violations = 0;
    double negative_fraction = 1.0;       // of post-event samples
    std::size_t anomalies = 0;            // near-zero V with moving state
};

struct ScenarioResult {
    Trajectory traj;
    GasCertificate certificate;
    Verdict verdict;
    LyapunovReport lyapunov;
};

/// Voltage-reference tracking: apply the configured voltage steps, require
/// each U_t within 1e-3 of its target and each P_e back within 1e-3 of its
/// pre-step value at t_end.
ScenarioResult vr_scenario(const ScenarioConfig& cfg);

/// Power-reference tracking, mirrored: P_e to target, U_t held.
ScenarioResult pr_scenario(const ScenarioConfig& cfg);

struct FaultOutcome {
    Trajectory traj;
    GasCertificate certificate;
    bool stable = false;
    std::string detail;
    LyapunovReport lyapunov;
};

/// Three-phase fault at fault.bus applied at fault.apply_time, cleared after
/// `clearing` seconds by removing fault.remove_branch. Divergence or
/// controller degeneracy mid-run count as unstable, not as errors.
FaultOutcome fault_scenario(const ScenarioConfig& cfg, const FaultSpec& fault,
                            double clearing);

struct CctResult {
    FaultSpec fault;
    double lower = 0.0;       // last stable clearing time
    double upper = 0.0;       // first unstable clearing time
    double cct = 0.0;         // bracket midpoint
    double tolerance = 0.0;   // half the final bracket width
    std::vector<std::pair<double, bool>> trials; // clearing time -> stable
    std::size_t bisection_trials = 0;
    bool monotone = true;     // false when the pre-scan saw an inversion
};

/// Bisect the critical clearing time inside [lo, hi]. The bracket is
/// verified first (lo stable, hi unstable, else ConfigError). Terminates
/// when the bracket width is at most 2*tol. cct.prescan_points > 0 runs a
/// concurrent grid scan to flag non-monotone verdicts.
CctResult cct_search(const ScenarioConfig& cfg, const FaultSpec& fault,
                     double lo, double hi, double tol);

/// Lyapunov monitor over a trajectory; `first_post_event` restricts the
/// violation statistics to samples at or after that index.
LyapunovReport lyapunov_report(const Trajectory& traj, std::size_t first_post_event,
                               double noise_floor);

/// Stability verdict of a completed trajectory's final sample.
bool final_sample_stable(const Trajectory& traj, const SimOptions& sim);

/// Write trajectory CSV, structured report, optional plot script.
/// Deterministic byte-for-byte for identical inputs.
void export_outputs(const Trajectory& traj, const ScenarioConfig& cfg,
                    const GasCertificate& cert, const Verdict& verdict,
                    const LyapunovReport& lyap,
                    const std::filesystem::path& out_dir);

std::string trajectory_csv(const Trajectory& traj);
std::string scenario_report(const Trajectory& traj, const ScenarioConfig& cfg,
                            const GasCertificate& cert, const Verdict& verdict,
                            const LyapunovReport& lyap);
std::string plot_script(const ScenarioConfig& cfg);

} // namespace lbcsim
