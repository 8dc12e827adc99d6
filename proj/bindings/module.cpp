// Python surface of the simulator: configs in and out of JSON, the stability
// certificate, the closed-loop scenarios, and trajectory access. Thin veneer
// over the C++ core; all numerics stay on the C++ side.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lbcsim/certify.hpp"
#include "lbcsim/config_io.hpp"
#include "lbcsim/errors.hpp"
#include "lbcsim/scenario.hpp"
#include "lbcsim/test_systems.hpp"

namespace py = pybind11;
using namespace lbcsim;

namespace {

const std::vector<double>& series_field(const Trajectory::MachineSeries& s,
                                        const std::string& field) {
    if (field == "delta") return s.delta;
    if (field == "omega") return s.omega;
    if (field == "eq") return s.eq;
    if (field == "p_m") return s.p_m;
    if (field == "u_t") return s.u_t;
    if (field == "p_e") return s.p_e;
    if (field == "ef_raw") return s.ef_raw;
    if (field == "ef") return s.ef;
    if (field == "gov1_raw") return s.gov1_raw;
    if (field == "gov1") return s.gov1;
    if (field == "gov2_raw") return s.gov2_raw;
    if (field == "gov2") return s.gov2;
    if (field == "fb_omega") return s.fb_omega;
    if (field == "fb_ut") return s.fb_ut;
    if (field == "fb_pe") return s.fb_pe;
    if (field == "fb_mu1") return s.fb_mu1;
    if (field == "fb_mu2") return s.fb_mu2;
    if (field == "c_e") return s.c_e;
    if (field == "d_e") return s.d_e;
    if (field == "c_g1") return s.c_g1;
    if (field == "d_g1") return s.d_g1;
    if (field == "c_g2") return s.c_g2;
    if (field == "d_g2") return s.d_g2;
    throw py::key_error("unknown series field '" + field + "'");
}

const Trajectory::MachineSeries& find_series(const Trajectory& t,
                                             const std::string& machine) {
    for (const Trajectory::MachineSeries& s : t.machines)
        if (s.name == machine) return s;
    throw py::key_error("unknown machine '" + machine + "'");
}

const FaultSpec& required_fault(const ScenarioConfig& cfg) {
    if (!cfg.fault) throw ConfigError("config declares no fault");
    return *cfg.fault;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "multi-machine transient simulator with decentralized "
              "excitation and governor control";
    m.attr("__version__") = "0.1.0";

    const py::object base =
        py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NumericsError>(m, "NumericsError", base.ptr());
    py::register_exception<NetworkError>(m, "NetworkError", base.ptr());
    py::register_exception<ControlError>(m, "ControlError", base.ptr());
    py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
    py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

    py::class_<ScenarioConfig>(m, "ScenarioConfig",
                               "full scenario description: network, machines, "
                               "controller, events, simulation options")
        .def_property(
            "dt", [](const ScenarioConfig& c) { return c.sim.dt; },
            [](ScenarioConfig& c, double v) { c.sim.dt = v; })
        .def_property(
            "t_end", [](const ScenarioConfig& c) { return c.sim.t_end; },
            [](ScenarioConfig& c, double v) { c.sim.t_end = v; })
        .def_property_readonly(
            "machine_names",
            [](const ScenarioConfig& c) {
                std::vector<std::string> names;
                for (const MachineSpec& ms : c.machines) names.push_back(ms.name);
                return names;
            })
        .def("machine_kind",
             [](const ScenarioConfig& c, const std::string& name) {
                 return std::string(
                     kind_name(c.machines[c.machine_index(name)].kind));
             })
        .def("add_voltage_step",
             [](ScenarioConfig& c, const std::string& machine, double time,
                double value) {
                 ReferenceStep rs;
                 rs.kind = ReferenceStep::Kind::Voltage;
                 rs.machine = c.machine_index(machine);
                 rs.time = time;
                 rs.value = value;
                 c.reference_steps.push_back(rs);
             },
             py::arg("machine"), py::arg("time"), py::arg("value"))
        .def("add_power_step",
             [](ScenarioConfig& c, const std::string& machine, double time,
                double value) {
                 ReferenceStep rs;
                 rs.kind = ReferenceStep::Kind::Power;
                 rs.machine = c.machine_index(machine);
                 rs.time = time;
                 rs.value = value;
                 c.reference_steps.push_back(rs);
             },
             py::arg("machine"), py::arg("time"), py::arg("value"))
        .def("set_outputs",
             [](ScenarioConfig& c, const std::string& dir, bool plot_script) {
                 c.outputs.dir = dir;
                 c.outputs.plot_script = plot_script;
             },
             py::arg("dir"), py::arg("plot_script") = false)
        .def("to_json", [](const ScenarioConfig& c) { return config_to_json(c); })
        .def("validate", &ScenarioConfig::validate);

    py::class_<GasCertificate>(m, "Certificate",
                               "stability certificate of the closed loop")
        .def_readonly("dim", &GasCertificate::dim)
        .def_readonly("rank", &GasCertificate::rank)
        .def_readonly("certified", &GasCertificate::certified)
        .def_readonly("margin", &GasCertificate::margin)
        .def_readonly("eigenvalues", &GasCertificate::eigenvalues)
        .def("report", [](const GasCertificate& c) { return certificate_report(c); })
        .def("__repr__", [](const GasCertificate& c) {
            return "<Certificate certified=" + std::string(c.certified ? "True" : "False") +
                   " rank=" + std::to_string(c.rank) + "/" + std::to_string(c.dim) +
                   " margin=" + std::to_string(c.margin) + ">";
        });

    py::class_<Trajectory>(m, "Trajectory", "sampled closed-loop trajectory")
        .def_readonly("dt", &Trajectory::dt)
        .def_readonly("time", &Trajectory::time)
        .def_readonly("v", &Trajectory::v)
        .def_readonly("event_times", &Trajectory::event_times)
        .def_readonly("warnings", &Trajectory::warnings)
        .def_property_readonly("samples",
                               [](const Trajectory& t) { return t.samples(); })
        .def_property_readonly(
            "machine_names",
            [](const Trajectory& t) {
                std::vector<std::string> names;
                for (const Trajectory::MachineSeries& s : t.machines)
                    names.push_back(s.name);
                return names;
            })
        .def("series",
             [](const Trajectory& t, const std::string& machine,
                const std::string& field) {
                 return series_field(find_series(t, machine), field);
             },
             py::arg("machine"), py::arg("field"),
             "per-sample series of one machine: delta, omega, eq, p_m, u_t, "
             "p_e, ef, gov1, gov2, fb_*, c_*, d_* (raw variants: ef_raw, ...)")
        .def("saturated",
             [](const Trajectory& t, const std::string& machine) {
                 const Trajectory::MachineSeries& s = find_series(t, machine);
                 return std::vector<int>(s.saturated.begin(), s.saturated.end());
             },
             py::arg("machine"))
        .def("csv", [](const Trajectory& t) { return trajectory_csv(t); });

    py::class_<Verdict>(m, "Verdict")
        .def_readonly("passed", &Verdict::pass)
        .def_readonly("detail", &Verdict::detail)
        .def("__bool__", [](const Verdict& v) { return v.pass; })
        .def("__repr__", [](const Verdict& v) {
            return std::string("<Verdict ") + (v.pass ? "PASS" : "FAIL") + ">";
        });

    py::class_<LyapunovReport>(m, "LyapunovReport")
        .def_readonly("post_event_count", &LyapunovReport::post_event_count)
        .def_readonly("violations", &LyapunovReport::violations)
        .def_readonly("unsaturated_violations",
                      &LyapunovReport::unsaturated_violations)
        .def_readonly("negative_fraction", &LyapunovReport::negative_fraction)
        .def_readonly("anomalies", &LyapunovReport::anomalies);

    py::class_<ScenarioResult>(m, "ScenarioResult")
        .def_readonly("traj", &ScenarioResult::traj)
        .def_readonly("certificate", &ScenarioResult::certificate)
        .def_readonly("verdict", &ScenarioResult::verdict)
        .def_readonly("lyapunov", &ScenarioResult::lyapunov);

    py::class_<FaultOutcome>(m, "FaultOutcome")
        .def_readonly("traj", &FaultOutcome::traj)
        .def_readonly("certificate", &FaultOutcome::certificate)
        .def_readonly("stable", &FaultOutcome::stable)
        .def_readonly("detail", &FaultOutcome::detail)
        .def_readonly("lyapunov", &FaultOutcome::lyapunov)
        .def("__repr__", [](const FaultOutcome& f) {
            return std::string("<FaultOutcome ") + (f.stable ? "stable" : "unstable") +
                   ">";
        });

    py::class_<CctResult>(m, "CctResult")
        .def_readonly("cct", &CctResult::cct)
        .def_readonly("lower", &CctResult::lower)
        .def_readonly("upper", &CctResult::upper)
        .def_readonly("tolerance", &CctResult::tolerance)
        .def_readonly("trials", &CctResult::trials)
        .def_readonly("bisection_trials", &CctResult::bisection_trials)
        .def_readonly("monotone", &CctResult::monotone)
        .def("__repr__", [](const CctResult& r) {
            return "<CctResult cct=" + std::to_string(r.cct) + " bracket=[" +
                   std::to_string(r.lower) + ", " + std::to_string(r.upper) + "]>";
        });

    m.def("parse_config", &parse_config, py::arg("json_text"),
          "parse a scenario config from a JSON string");
    m.def("load_config", &load_config, py::arg("path"),
          "load a scenario config from a JSON file");
    m.def("save_config", &save_config, py::arg("config"), py::arg("path"),
          "serialize a scenario config to a JSON file");

    m.def("smib_config", &smib_config,
          "two-machine benchmark: one hydro unit against a strong source");
    m.def("desk_config", &desk_config,
          "five-machine benchmark with all three governor families");
    m.def("desk_vr_config", &desk_vr_config,
          "five-machine benchmark with the voltage-step schedule");
    m.def("desk_pr_config", &desk_pr_config,
          "five-machine benchmark with the power-step schedule");

    m.def("config_certificate", &config_certificate, py::arg("config"),
          "stability certificate over the config's controlled machines");
    m.def("run", &run, py::arg("config"),
          py::call_guard<py::gil_scoped_release>(),
          "integrate the closed loop through the configured events");
    m.def("vr_scenario", &vr_scenario, py::arg("config"),
          py::call_guard<py::gil_scoped_release>(),
          "voltage-reference tracking scenario with pass/fail verdict");
    m.def("pr_scenario", &pr_scenario, py::arg("config"),
          py::call_guard<py::gil_scoped_release>(),
          "power-reference tracking scenario with pass/fail verdict");
    m.def(
        "fault_scenario",
        [](const ScenarioConfig& cfg, std::optional<double> clearing) {
            const FaultSpec& fs = required_fault(cfg);
            const double cl = clearing.value_or(fs.clearing_time);
            py::gil_scoped_release release;
            return fault_scenario(cfg, fs, cl);
        },
        py::arg("config"), py::arg("clearing") = py::none(),
        "apply the configured fault and judge ride-through at the given "
        "clearing time (default: the configured one)");
    m.def(
        "cct_search",
        [](const ScenarioConfig& cfg, std::optional<double> lo,
           std::optional<double> hi, std::optional<double> tol) {
            const FaultSpec& fs = required_fault(cfg);
            const double l = lo.value_or(cfg.cct.bracket_lo);
            const double h = hi.value_or(cfg.cct.bracket_hi);
            const double t = tol.value_or(cfg.cct.tolerance);
            py::gil_scoped_release release;
            return cct_search(cfg, fs, l, h, t);
        },
        py::arg("config"), py::arg("lo") = py::none(), py::arg("hi") = py::none(),
        py::arg("tol") = py::none(),
        "bisect the critical clearing time inside the bracket");

    m.def(
        "export_result",
        [](const ScenarioResult& res, const ScenarioConfig& cfg,
           const std::filesystem::path& out_dir) {
            export_outputs(res.traj, cfg, res.certificate, res.verdict,
                           res.lyapunov, out_dir);
        },
        py::arg("result"), py::arg("config"), py::arg("out_dir"),
        "write trajectory.csv, report.txt and the optional plot script");
}
