#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "lbcsim/scenario.hpp"

namespace lbcsim {

namespace {

// locale-independent, precision-preserving, byte-deterministic
std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v,
                                   std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

const char* gov1_label(MachineKind k) {
    switch (k) {
    case MachineKind::Htg: return "u_w";
    case MachineKind::Cg: return "u_c";
    case MachineKind::Rg: return "u_h";
    default: return "u";
    }
}

std::vector<std::string> gov_state_labels(MachineKind k) {
    switch (k) {
    case MachineKind::Htg: return {"mu_w"};
    case MachineKind::Cg: return {"mu_c"};
    case MachineKind::Rg: return {"p_h", "mu_h", "p_r", "p_i", "mu_i", "p_l"};
    default: return {};
    }
}

} // namespace

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << "# closed-loop trajectory, one row per integration step (dt = "
       << fmt(traj.dt) << " s)\n";
    os << "# v is the Lyapunov value over the controlled machines;"
          " *_raw are pre-saturation commands\n";
    os << "# saturated flags: 1 when any of the machine's actuators clipped"
          " at that instant\n";

    os << "time,v,any_saturated";
    for (const Trajectory::MachineSeries& s : traj.machines) {
        const std::string p = s.name + ".";
        os << "," << p << "delta," << p << "omega," << p << "eq," << p << "p_m,"
           << p << "u_t," << p << "p_e";
        for (const std::string& g : gov_state_labels(s.kind)) os << "," << p << g;
        if (s.kind != MachineKind::InfiniteBus) {
            const std::string g1 = gov1_label(s.kind);
            os << "," << p << "ef_raw," << p << "ef," << p << g1 << "_raw," << p << g1;
            if (s.kind == MachineKind::Rg)
                os << "," << p << "u_i_raw," << p << "u_i";
            os << "," << p << "fb_omega," << p << "fb_ut," << p << "fb_pe," << p
               << "fb_mu1";
            if (s.kind == MachineKind::Rg) os << "," << p << "fb_mu2";
            os << "," << p << "c_e," << p << "d_e," << p << "c_g1," << p << "d_g1";
            if (s.kind == MachineKind::Rg) os << "," << p << "c_g2," << p << "d_g2";
            os << "," << p << "saturated";
        }
    }
    os << "\n";

    for (std::size_t k = 0; k < traj.samples(); ++k) {
        os << fmt(traj.time[k]) << "," << fmt(traj.v[k]) << ","
           << (traj.any_saturated[k] ? 1 : 0);
        for (const Trajectory::MachineSeries& s : traj.machines) {
            os << "," << fmt(s.delta[k]) << "," << fmt(s.omega[k]) << ","
               << fmt(s.eq[k]) << "," << fmt(s.p_m[k]) << "," << fmt(s.u_t[k]) << ","
               << fmt(s.p_e[k]);
            for (std::size_t g = 0; g < s.gov_width; ++g)
                os << "," << fmt(s.gov[k * s.gov_width + g]);
            if (s.kind != MachineKind::InfiniteBus) {
                os << "," << fmt(s.ef_raw[k]) << "," << fmt(s.ef[k]) << ","
                   << fmt(s.gov1_raw[k]) << "," << fmt(s.gov1[k]);
                if (s.kind == MachineKind::Rg)
                    os << "," << fmt(s.gov2_raw[k]) << "," << fmt(s.gov2[k]);
                os << "," << fmt(s.fb_omega[k]) << "," << fmt(s.fb_ut[k]) << ","
                   << fmt(s.fb_pe[k]) << "," << fmt(s.fb_mu1[k]);
                if (s.kind == MachineKind::Rg) os << "," << fmt(s.fb_mu2[k]);
                os << "," << fmt(s.c_e[k]) << "," << fmt(s.d_e[k]) << ","
                   << fmt(s.c_g1[k]) << "," << fmt(s.d_g1[k]);
                if (s.kind == MachineKind::Rg)
                    os << "," << fmt(s.c_g2[k]) << "," << fmt(s.d_g2[k]);
                os << "," << (s.saturated[k] ? 1 : 0);
            }
        }
        os << "\n";
    }
    return os.str();
}

std::string scenario_report(const Trajectory& traj, const ScenarioConfig& cfg,
                            const GasCertificate& cert, const Verdict& verdict,
                            const LyapunovReport& lyap) {
    std::ostringstream os;
    os << "lbcsim scenario report\n";
    os << "======================\n\n";

    os << "machines\n";
    for (const MachineSpec& ms : cfg.machines) {
        os << "  " << ms.name << "  kind=" << kind_name(ms.kind) << "  bus=" << ms.bus
           << "  H=" << fmt(ms.gen.inertia) << "  xd=" << fmt(ms.gen.xd)
           << "  xd'=" << fmt(ms.gen.xd_prime) << "  Td0'=" << fmt(ms.gen.td0_prime);
        if (ms.kind == MachineKind::InfiniteBus)
            os << "  emf=" << fmt(ms.emf);
        else
            os << "  U0=" << fmt(ms.voltage_ref) << "  P0=" << fmt(ms.power_ref);
        os << "\n";
    }

    os << "\nnetwork\n";
    os << "  buses: " << cfg.network.buses.size()
       << ", branches: " << cfg.network.branches.size() << "\n";
    for (const Branch& br : cfg.network.branches)
        os << "  " << br.id << ": " << br.from << " - " << br.to
           << "  y=" << fmt(br.series_g) << (br.series_b < 0 ? "" : "+")
           << fmt(br.series_b) << "j" << (br.in_service ? "" : "  (out of service)")
           << "\n";

    os << "\nsimulation\n";
    os << "  dt = " << fmt(traj.dt) << " s, samples = " << traj.samples() << "\n";
    if (!traj.event_times.empty()) {
        os << "  events at:";
        for (double t : traj.event_times) os << " " << fmt(t);
        os << "\n";
    }
    for (const std::string& w : traj.warnings) os << "  warning: " << w << "\n";

    os << "\n" << certificate_report(cert);

    os << "\nverdict: " << (verdict.pass ? "PASS" : "FAIL") << "\n";
    if (!verdict.detail.empty()) os << verdict.detail;

    os << "\nlyapunov monitor\n";
    os << "  post-event samples    " << lyap.post_event_count << "\n";
    os << "  decreasing fraction   " << fmt(lyap.negative_fraction) << "\n";
    os << "  violations            " << lyap.violations << "\n";
    os << "  unsaturated violations " << lyap.unsaturated_violations << "\n";
    os << "  hidden-motion samples " << lyap.anomalies << "\n";
    if (!traj.v.empty())
        os << "  V first/last          " << fmt(traj.v.front()) << " / "
           << fmt(traj.v.back()) << "\n";

    std::size_t sat_samples = 0;
    for (std::uint8_t s : traj.any_saturated) sat_samples += s;
    os << "  saturated samples     " << sat_samples << "\n";
    return os.str();
}

std::string plot_script(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << "#!/usr/bin/env python3\n";
    os << "\"\"\"Plot the exported trajectory CSV next to this script.\"\"\"\n";
    os << "import csv\n";
    os << "import os\n";
    os << "import matplotlib\n";
    os << "matplotlib.use(\"Agg\")\n";
    os << "import matplotlib.pyplot as plt\n\n";
    os << "here = os.path.dirname(os.path.abspath(__file__))\n";
    os << "rows = []\n";
    os << "with open(os.path.join(here, \"trajectory.csv\")) as fh:\n";
    os << "    for row in csv.reader(line for line in fh if not line.startswith(\"#\")):\n";
    os << "        rows.append(row)\n";
    os << "head, data = rows[0], rows[1:]\n";
    os << "col = {name: i for i, name in enumerate(head)}\n";
    os << "t = [float(r[col[\"time\"]]) for r in data]\n";
    os << "machines = " << "[";
    bool first = true;
    for (const MachineSpec& ms : cfg.machines) {
        if (ms.kind == MachineKind::InfiniteBus) continue;
        if (!first) os << ", ";
        os << "\"" << ms.name << "\"";
        first = false;
    }
    os << "]\n";
    os << "fig, axes = plt.subplots(4, 1, figsize=(9, 11), sharex=True)\n";
    os << "for name in machines:\n";
    os << "    axes[0].plot(t, [float(r[col[name + \".u_t\"]]) for r in data], label=name)\n";
    os << "    axes[1].plot(t, [float(r[col[name + \".p_e\"]]) for r in data], label=name)\n";
    os << "    axes[2].plot(t, [float(r[col[name + \".omega\"]]) for r in data], label=name)\n";
    os << "axes[3].semilogy(t, [max(float(r[col[\"v\"]]), 1e-30) for r in data])\n";
    os << "axes[0].set_ylabel(\"U_t [p.u.]\")\n";
    os << "axes[1].set_ylabel(\"P_e [p.u.]\")\n";
    os << "axes[2].set_ylabel(\"omega [p.u.]\")\n";
    os << "axes[3].set_ylabel(\"V\")\n";
    os << "axes[3].set_xlabel(\"t [s]\")\n";
    os << "axes[0].legend(loc=\"best\", fontsize=8)\n";
    os << "fig.tight_layout()\n";
    os << "fig.savefig(os.path.join(here, \"trajectory.png\"), dpi=130)\n";
    os << "print(\"wrote\", os.path.join(here, \"trajectory.png\"))\n";
    return os.str();
}

void export_outputs(const Trajectory& traj, const ScenarioConfig& cfg,
                    const GasCertificate& cert, const Verdict& verdict,
                    const LyapunovReport& lyap, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write_file = [&](const std::filesystem::path& p, const std::string& content) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ConfigError("cannot write output file " + p.string());
        f << content;
    };
    write_file(out_dir / "trajectory.csv", trajectory_csv(traj));
    write_file(out_dir / "report.txt",
               scenario_report(traj, cfg, cert, verdict, lyap));
    if (cfg.outputs.plot_script)
        write_file(out_dir / "plot.py", plot_script(cfg));
}

} // namespace lbcsim
