#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lbcsim/config_io.hpp"
#include "lbcsim/scenario.hpp"
#include "lbcsim/test_systems.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitError = 2;

struct CommonOpts {
    std::string config;
    std::string out;
    double dt = 0.0;
    double t_end = 0.0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_sim_overrides = true) {
    cmd->add_option("--config", opts.config, "scenario config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "directory for trajectory.csv / report.txt");
    if (with_sim_overrides) {
        cmd->add_option("--dt", opts.dt, "integration step override [s]");
        cmd->add_option("--t-end", opts.t_end, "simulation horizon override [s]");
    }
    cmd->add_flag("--quiet", opts.quiet, "suppress console output");
}

lbcsim::ScenarioConfig load(const CommonOpts& opts) {
    lbcsim::ScenarioConfig cfg = lbcsim::load_config(opts.config);
    if (opts.dt > 0.0) cfg.sim.dt = opts.dt;
    if (opts.t_end > 0.0) cfg.sim.t_end = opts.t_end;
    if (!opts.out.empty()) cfg.outputs.dir = opts.out;
    return cfg;
}

void maybe_export(const lbcsim::ScenarioConfig& cfg, const lbcsim::Trajectory& traj,
                  const lbcsim::GasCertificate& cert, const lbcsim::Verdict& verdict,
                  const lbcsim::LyapunovReport& lyap) {
    if (!cfg.outputs.dir.empty())
        lbcsim::export_outputs(traj, cfg, cert, verdict, lyap, cfg.outputs.dir);
}

int run_certify(const CommonOpts& opts) {
    const lbcsim::ScenarioConfig cfg = load(opts);
    const lbcsim::GasCertificate cert = lbcsim::config_certificate(cfg);
    if (!opts.quiet) std::cout << lbcsim::certificate_report(cert);
    if (!cfg.outputs.dir.empty()) {
        std::filesystem::create_directories(cfg.outputs.dir);
        std::ofstream f(std::filesystem::path(cfg.outputs.dir) / "certificate.txt",
                        std::ios::binary);
        f << lbcsim::certificate_report(cert);
    }
    return cert.certified ? kExitPass : kExitFail;
}

int run_plain(const CommonOpts& opts) {
    const lbcsim::ScenarioConfig cfg = load(opts);
    const lbcsim::GasCertificate cert = lbcsim::config_certificate(cfg);
    const lbcsim::Trajectory traj = lbcsim::run(cfg);

    lbcsim::Verdict verdict;
    verdict.pass = lbcsim::final_sample_stable(traj, cfg.sim);
    verdict.detail = verdict.pass ? "  final sample inside the stability band\n"
                                  : "  final sample outside the stability band\n";
    const lbcsim::LyapunovReport lyap =
        lbcsim::lyapunov_report(traj, 0, cfg.sim.vdot_floor);
    maybe_export(cfg, traj, cert, verdict, lyap);
    if (!opts.quiet)
        std::cout << "run: " << traj.samples() << " samples, "
                  << (verdict.pass ? "PASS" : "FAIL") << "\n";
    return verdict.pass ? kExitPass : kExitFail;
}

int run_tracking(const CommonOpts& opts, bool voltage) {
    const lbcsim::ScenarioConfig cfg = load(opts);
    const lbcsim::ScenarioResult res =
        voltage ? lbcsim::vr_scenario(cfg) : lbcsim::pr_scenario(cfg);
    maybe_export(cfg, res.traj, res.certificate, res.verdict, res.lyapunov);
    if (!opts.quiet) {
        std::cout << (voltage ? "voltage" : "power") << "-reference tracking: "
                  << (res.verdict.pass ? "PASS" : "FAIL") << "\n"
                  << res.verdict.detail;
        for (const std::string& w : res.traj.warnings)
            std::cout << "warning: " << w << "\n";
    }
    return res.verdict.pass ? kExitPass : kExitFail;
}

int run_fault(const CommonOpts& opts, double clearing_override) {
    const lbcsim::ScenarioConfig cfg = load(opts);
    if (!cfg.fault)
        throw lbcsim::ConfigError("config has no fault section");
    const double clearing =
        clearing_override >= 0.0 ? clearing_override : cfg.fault->clearing_time;
    const lbcsim::FaultOutcome out = lbcsim::fault_scenario(cfg, *cfg.fault, clearing);

    lbcsim::Verdict verdict;
    verdict.pass = out.stable;
    verdict.detail = "  " + out.detail + "\n";
    if (out.traj.samples() > 0)
        maybe_export(cfg, out.traj, out.certificate, verdict, out.lyapunov);
    if (!opts.quiet)
        std::cout << "fault at " << cfg.fault->bus << ", clearing "
                  << clearing << " s: " << (out.stable ? "STABLE" : "UNSTABLE") << "\n  "
                  << out.detail << "\n";
    return out.stable ? kExitPass : kExitFail;
}

int run_cct(const CommonOpts& opts, double lo, double hi, double tol) {
    const lbcsim::ScenarioConfig cfg = load(opts);
    if (!cfg.fault)
        throw lbcsim::ConfigError("config has no fault section");
    const double use_lo = lo >= 0.0 ? lo : cfg.cct.bracket_lo;
    const double use_hi = hi >= 0.0 ? hi : cfg.cct.bracket_hi;
    const double use_tol = tol > 0.0 ? tol : cfg.cct.tolerance;

    const lbcsim::CctResult res =
        lbcsim::cct_search(cfg, *cfg.fault, use_lo, use_hi, use_tol);

    if (!opts.quiet) {
        std::printf("critical clearing time: %.4f s (bracket [%.4f, %.4f], +-%.4f)\n",
                    res.cct, res.lower, res.upper, res.tolerance);
        std::printf("trials: %zu total, %zu bisection\n", res.trials.size(),
                    res.bisection_trials);
        if (!res.monotone)
            std::printf("warning: verdicts are not monotone across the bracket\n");
    }
    if (!cfg.outputs.dir.empty()) {
        std::filesystem::create_directories(cfg.outputs.dir);
        std::ofstream f(std::filesystem::path(cfg.outputs.dir) / "cct.txt",
                        std::ios::binary);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "critical clearing time %.6f s\nbracket [%.6f, %.6f]\n"
                      "tolerance %.6f\nmonotone %s\n",
                      res.cct, res.lower, res.upper, res.tolerance,
                      res.monotone ? "yes" : "no");
        f << buf << "trials (clearing time, verdict):\n";
        for (const auto& [t, stable] : res.trials) {
            std::snprintf(buf, sizeof buf, "  %.6f  %s\n", t,
                          stable ? "stable" : "unstable");
            f << buf;
        }
    }
    return kExitPass;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"decentralized excitation/governor control simulator"};
    app.require_subcommand(1);

    CommonOpts certify_opts, run_opts, vr_opts, pr_opts, fault_opts, cct_opts;
    double clearing = -1.0, cct_lo = -1.0, cct_hi = -1.0, cct_tol = -1.0;

    CLI::App* certify = app.add_subcommand("certify", "stability certificate only");
    add_common(certify, certify_opts, false);

    CLI::App* runc = app.add_subcommand("run", "integrate the configured scenario");
    add_common(runc, run_opts);

    CLI::App* vr = app.add_subcommand("vr", "voltage-reference tracking scenario");
    add_common(vr, vr_opts);

    CLI::App* pr = app.add_subcommand("pr", "power-reference tracking scenario");
    add_common(pr, pr_opts);

    CLI::App* fault = app.add_subcommand("fault", "three-phase fault ride-through");
    add_common(fault, fault_opts);
    fault->add_option("--clearing", clearing, "clearing time override [s]");

    CLI::App* cct = app.add_subcommand("cct", "critical clearing time search");
    add_common(cct, cct_opts);
    cct->add_option("--lo", cct_lo, "bracket lower bound [s]");
    cct->add_option("--hi", cct_hi, "bracket upper bound [s]");
    cct->add_option("--tol", cct_tol, "bisection tolerance [s]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (certify->parsed()) return run_certify(certify_opts);
        if (runc->parsed()) return run_plain(run_opts);
        if (vr->parsed()) return run_tracking(vr_opts, true);
        if (pr->parsed()) return run_tracking(pr_opts, false);
        if (fault->parsed()) return run_fault(fault_opts, clearing);
        if (cct->parsed()) return run_cct(cct_opts, cct_lo, cct_hi, cct_tol);
    } catch (const lbcsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
