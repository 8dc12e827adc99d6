#include "lbcsim/plant.hpp"

#include <cmath>
#include <string>

namespace lbcsim {

namespace {

void require_cfg(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

} // namespace

const char* kind_name(MachineKind k) {
    switch (k) {
    case MachineKind::InfiniteBus: return "infinite_bus";
    case MachineKind::Htg: return "htg";
    case MachineKind::Cg: return "cg";
    case MachineKind::Rg: return "rg";
    }
    return "?";
}

void MachineSpec::validate() const {
    require_cfg(!name.empty(), "machine with empty name");
    require_cfg(gen.inertia > 0.0, "machine '" + name + "': inertia must be positive");
    require_cfg(gen.damping >= 0.0, "machine '" + name + "': damping must be non-negative");
    require_cfg(gen.xd_prime > 0.0, "machine '" + name + "': xd_prime must be positive");
    require_cfg(gen.xd >= gen.xd_prime,
                "machine '" + name + "': xd must be at least xd_prime");
    require_cfg(gen.td0_prime > 0.0, "machine '" + name + "': td0_prime must be positive");
    require_cfg(gen.omega_s > 0.0, "machine '" + name + "': omega_s must be positive");
    if (kind == MachineKind::InfiniteBus)
        require_cfg(emf > 0.0, "machine '" + name + "': infinite bus emf must be positive");

    auto positive = [&](double v, const char* what) {
        require_cfg(v > 0.0, "machine '" + name + "': " + what + " must be positive");
    };
    switch (kind) {
    case MachineKind::Htg:
        positive(gov.t_w, "t_w");
        positive(gov.t_ws, "t_ws");
        break;
    case MachineKind::Cg:
        positive(gov.t_c, "t_c");
        positive(gov.t_cs, "t_cs");
        break;
    case MachineKind::Rg: {
        positive(gov.t_h, "t_h");
        positive(gov.t_hs, "t_hs");
        positive(gov.t_r, "t_r");
        positive(gov.t_i, "t_i");
        positive(gov.t_is, "t_is");
        positive(gov.t_l, "t_l");
        positive(gov.c_h, "c_h");
        positive(gov.c_i, "c_i");
        positive(gov.c_l, "c_l");
        require_cfg(std::abs(gov.c_h + gov.c_i + gov.c_l - 1.0) < 1e-9,
                    "machine '" + name + "': stage fractions must sum to 1");
        break;
    }
    case MachineKind::InfiniteBus:
        break;
    }
}

StateLayout::StateLayout(std::span<const MachineSpec> machines) {
    kinds_.reserve(machines.size());
    offsets_.reserve(machines.size());
    for (const MachineSpec& ms : machines) {
        kinds_.push_back(ms.kind);
        offsets_.push_back(size_);
        size_ += block_size(kinds_.size() - 1);
    }
}

std::size_t StateLayout::block_size(std::size_t m) const {
    switch (kinds_[m]) {
    case MachineKind::InfiniteBus: return 4;
    case MachineKind::Htg: return 5;
    case MachineKind::Cg: return 5;
    case MachineKind::Rg: return 9;
    }
    return 0;
}

std::size_t StateLayout::p_m(std::size_t m) const {
    if (kinds_[m] == MachineKind::Rg)
        throw ConfigError("reheat units have no single mechanical-power state");
    return offsets_[m] + 3;
}

std::size_t StateLayout::mu(std::size_t m) const {
    if (kinds_[m] != MachineKind::Htg && kinds_[m] != MachineKind::Cg)
        throw ConfigError("opening state only exists for hydro/condensing units");
    return offsets_[m] + 4;
}

std::size_t StateLayout::p_h(std::size_t m) const {
    if (kinds_[m] != MachineKind::Rg) throw ConfigError("p_h is a reheat state");
    return offsets_[m] + 3;
}
std::size_t StateLayout::mu_h(std::size_t m) const {
    if (kinds_[m] != MachineKind::Rg) throw ConfigError("mu_h is a reheat state");
    return offsets_[m] + 4;
}
std::size_t StateLayout::p_r(std::size_t m) const {
    if (kinds_[m] != MachineKind::Rg) throw ConfigError("p_r is a reheat state");
    return offsets_[m] + 5;
}
std::size_t StateLayout::p_i(std::size_t m) const {
    if (kinds_[m] != MachineKind::Rg) throw ConfigError("p_i is a reheat state");
    return offsets_[m] + 6;
}
std::size_t StateLayout::mu_i(std::size_t m) const {
    if (kinds_[m] != MachineKind::Rg) throw ConfigError("mu_i is a reheat state");
    return offsets_[m] + 7;
}
std::size_t StateLayout::p_l(std::size_t m) const {
    if (kinds_[m] != MachineKind::Rg) throw ConfigError("p_l is a reheat state");
    return offsets_[m] + 8;
}

GeneratorDeriv generator_deriv(double omega, double eq, const GeneratorParams& gp,
                               double e_f, double p_m, double p_e, double i_d) {
    GeneratorDeriv d;
    d.delta_dot = gp.omega_s * (omega - 1.0);
    d.omega_dot = (p_m - p_e - gp.damping * (omega - 1.0)) / (2.0 * gp.inertia);
    d.eq_dot = (e_f - eq - (gp.xd - gp.xd_prime) * i_d) / gp.td0_prime;
    return d;
}

HydroGovDeriv hydro_gov_deriv(double p_m, double mu_w, double u_w,
                              const GovernorParams& gp) {
    HydroGovDeriv d;
    d.mu_dot = (-mu_w + u_w) / gp.t_ws;
    // the gate-rate term enters with opposite sign: the water column lags
    d.p_m_dot = (2.0 / gp.t_w) * (-p_m + mu_w - gp.t_w * d.mu_dot);
    return d;
}

CondensingGovDeriv condensing_gov_deriv(double p_m, double mu_c, double u_c,
                                        const GovernorParams& gp) {
    CondensingGovDeriv d;
    d.p_m_dot = (-p_m + mu_c) / gp.t_c;
    d.mu_dot = (-mu_c + u_c) / gp.t_cs;
    return d;
}

ReheatGovDeriv reheat_gov_deriv(const ReheatGovState& s, double u_h, double u_i,
                                const GovernorParams& gp) {
    ReheatGovDeriv d;
    d.p_h_dot = (gp.c_h * s.mu_h - s.p_h) / gp.t_h;
    d.mu_h_dot = (u_h - s.mu_h) / gp.t_hs;
    d.p_r_dot = (s.p_h / gp.c_h - s.p_r) / gp.t_r;
    d.p_i_dot = (gp.c_i * s.p_r * s.mu_i - s.p_i) / gp.t_i;
    d.mu_i_dot = (u_i - s.mu_i) / gp.t_is;
    d.p_l_dot = ((gp.c_l / gp.c_i) * s.p_i - s.p_l) / gp.t_l;
    return d;
}

double mechanical_power(std::span<const double> x, const StateLayout& L, std::size_t m) {
    if (L.kind(m) == MachineKind::Rg)
        return x[L.p_h(m)] + x[L.p_i(m)] + x[L.p_l(m)];
    return x[L.p_m(m)];
}

void system_deriv(std::span<const double> x, const ControlInputs& u,
                  const MachineOutputs& out, std::span<const MachineSpec> specs,
                  const StateLayout& L, std::span<double> dxdt) {
    const std::size_t n = specs.size();
    if (u.size() != n || x.size() != L.size() || dxdt.size() != L.size())
        throw ConfigError("system_deriv argument lengths are inconsistent");

    for (std::size_t m = 0; m < n; ++m) {
        const MachineSpec& ms = specs[m];
        const double p_m = mechanical_power(x, L, m);
        const GeneratorDeriv g = generator_deriv(x[L.omega(m)], x[L.eq(m)], ms.gen,
                                                 u[m].e_f, p_m, out.p_e[m], out.i_d[m]);
        dxdt[L.delta(m)] = g.delta_dot;
        dxdt[L.omega(m)] = g.omega_dot;
        dxdt[L.eq(m)] = g.eq_dot;

        switch (ms.kind) {
        case MachineKind::InfiniteBus:
            dxdt[L.eq(m)] = 0.0; // emf frozen
            dxdt[L.p_m(m)] = 0.0;
            break;
        case MachineKind::Htg: {
            const HydroGovDeriv h =
                hydro_gov_deriv(x[L.p_m(m)], x[L.mu(m)], u[m].gov1, ms.gov);
            dxdt[L.p_m(m)] = h.p_m_dot;
            dxdt[L.mu(m)] = h.mu_dot;
            break;
        }
        case MachineKind::Cg: {
            const CondensingGovDeriv c =
                condensing_gov_deriv(x[L.p_m(m)], x[L.mu(m)], u[m].gov1, ms.gov);
            dxdt[L.p_m(m)] = c.p_m_dot;
            dxdt[L.mu(m)] = c.mu_dot;
            break;
        }
        case MachineKind::Rg: {
            const ReheatGovState s{x[L.p_h(m)], x[L.mu_h(m)], x[L.p_r(m)],
                                   x[L.p_i(m)], x[L.mu_i(m)], x[L.p_l(m)]};
            const ReheatGovDeriv r = reheat_gov_deriv(s, u[m].gov1, u[m].gov2, ms.gov);
            dxdt[L.p_h(m)] = r.p_h_dot;
            dxdt[L.mu_h(m)] = r.mu_h_dot;
            dxdt[L.p_r(m)] = r.p_r_dot;
            dxdt[L.p_i(m)] = r.p_i_dot;
            dxdt[L.mu_i(m)] = r.mu_i_dot;
            dxdt[L.p_l(m)] = r.p_l_dot;
            break;
        }
        }
    }
}

std::vector<double> system_deriv(std::span<const double> x, const ControlInputs& u,
                                 const ReducedNetwork& net,
                                 std::span<const MachineSpec> specs,
                                 std::span<const GeneratorAttachment> attach,
                                 const StateLayout& L) {
    const std::size_t n = specs.size();
    std::vector<double> delta(n), eq(n);
    for (std::size_t m = 0; m < n; ++m) {
        delta[m] = x[L.delta(m)];
        eq[m] = x[L.eq(m)];
    }
    const MachineOutputs out = machine_outputs(net, delta, eq, attach);
    std::vector<double> dxdt(L.size());
    system_deriv(x, u, out, specs, L, dxdt);
    return dxdt;
}

} // namespace lbcsim
