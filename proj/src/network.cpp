#include "lbcsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

namespace lbcsim {

namespace {

/// In-place complex LU solve for many right-hand sides; used only for the
/// small eliminated block of the reduction.
class ComplexLu {
public:
    ComplexLu(std::vector<Complex> a, std::size_t n,
              const std::vector<std::size_t>& node_labels)
        : a_(std::move(a)), n_(n), perm_(n) {
        double scale = 0.0;
        for (const Complex& v : a_) scale = std::max(scale, std::abs(v));
        const double tol = 1e-13 * std::max(scale, 1e-300);

        for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
        for (std::size_t col = 0; col < n_; ++col) {
            std::size_t pivot = col;
            for (std::size_t i = col + 1; i < n_; ++i)
                if (std::abs(at(i, col)) > std::abs(at(pivot, col))) pivot = i;
            if (std::abs(at(pivot, col)) <= tol)
                throw NetworkError(
                    "reduction failed: eliminated node " +
                    std::to_string(node_labels[perm_[pivot]]) +
                    " has a singular admittance block (no path to any retained node)");
            if (pivot != col) {
                for (std::size_t j = 0; j < n_; ++j) std::swap(at(pivot, j), at(col, j));
                std::swap(perm_[pivot], perm_[col]);
            }
            const Complex inv = 1.0 / at(col, col);
            for (std::size_t i = col + 1; i < n_; ++i) {
                const Complex f = at(i, col) * inv;
                at(i, col) = f;
                for (std::size_t j = col + 1; j < n_; ++j) at(i, j) -= f * at(col, j);
            }
        }
    }

    std::vector<Complex> solve(const std::vector<Complex>& b) const {
        std::vector<Complex> x(n_);
        for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 1; i < n_; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= at(i, j) * x[j];
        for (std::size_t ii = n_; ii-- > 0;) {
            for (std::size_t j = ii + 1; j < n_; ++j) x[ii] -= at(ii, j) * x[j];
            x[ii] /= at(ii, ii);
        }
        return x;
    }

private:
    Complex& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const Complex& at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    std::vector<Complex> a_;
    std::size_t n_;
    std::vector<std::size_t> perm_;
};

} // namespace

std::size_t NetworkSpec::bus_index(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    throw ConfigError("unknown bus id '" + id + "'");
}

Branch& NetworkSpec::branch(const std::string& id) {
    for (Branch& br : branches)
        if (br.id == id) return br;
    throw ConfigError("unknown branch id '" + id + "'");
}

const Branch& NetworkSpec::branch(const std::string& id) const {
    return const_cast<NetworkSpec*>(this)->branch(id);
}

void NetworkSpec::validate() const {
    if (buses.empty()) throw ConfigError("network has no buses");
    if (generators.empty()) throw ConfigError("network has no generators");

    std::set<std::string> bus_ids;
    for (const Bus& b : buses) {
        if (b.id.empty()) throw ConfigError("bus with empty id");
        if (!bus_ids.insert(b.id).second)
            throw ConfigError("duplicate bus id '" + b.id + "'");
    }
    std::set<std::string> branch_ids;
    for (const Branch& br : branches) {
        if (!branch_ids.insert(br.id).second)
            throw ConfigError("duplicate branch id '" + br.id + "'");
        bus_index(br.from);
        bus_index(br.to);
        if (br.from == br.to)
            throw ConfigError("branch '" + br.id + "' connects a bus to itself");
    }
    std::set<std::size_t> machines;
    for (const GeneratorAttachment& g : generators) {
        bus_index(g.bus);
        if (!(g.xd_prime > 0.0))
            throw ConfigError("generator attachment for machine " +
                              std::to_string(g.machine) + " needs xd_prime > 0");
        if (!machines.insert(g.machine).second)
            throw ConfigError("machine " + std::to_string(g.machine) +
                              " has two generator attachments");
    }
    for (std::size_t m = 0; m < generators.size(); ++m)
        if (!machines.count(m))
            throw ConfigError("generator attachments must cover machines 0.." +
                              std::to_string(generators.size() - 1) +
                              " exactly; missing " + std::to_string(m));
    for (const std::string& fb : faulted_buses) bus_index(fb);
    if (!(fault_conductance > 0.0))
        throw ConfigError("fault conductance must be positive");

    // every generator bus must reach every other through in-service branches
    std::vector<std::vector<std::size_t>> adj(buses.size());
    for (const Branch& br : branches) {
        if (!br.in_service) continue;
        const std::size_t f = bus_index(br.from);
        const std::size_t t = bus_index(br.to);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    std::vector<char> seen(buses.size(), 0);
    std::queue<std::size_t> frontier;
    frontier.push(bus_index(generators.front().bus));
    seen[frontier.front()] = 1;
    while (!frontier.empty()) {
        const std::size_t b = frontier.front();
        frontier.pop();
        for (std::size_t nb : adj[b])
            if (!seen[nb]) {
                seen[nb] = 1;
                frontier.push(nb);
            }
    }
    for (const GeneratorAttachment& g : generators)
        if (!seen[bus_index(g.bus)])
            throw NetworkError("generator on bus '" + g.bus +
                               "' is islanded from the other generators");
}

AdmittanceMatrix build_admittance(const NetworkSpec& spec) {
    spec.validate();

    AdmittanceMatrix out;
    out.n_bus = spec.buses.size();
    out.n_machine = spec.generators.size();
    out.y.assign(out.dim() * out.dim(), Complex{0.0, 0.0});

    for (const Branch& br : spec.branches) {
        if (!br.in_service) continue;
        const std::size_t f = spec.bus_index(br.from);
        const std::size_t t = spec.bus_index(br.to);
        const Complex y{br.series_g, br.series_b};
        out.at(f, f) += y;
        out.at(t, t) += y;
        out.at(f, t) -= y;
        out.at(t, f) -= y;
    }
    for (std::size_t i = 0; i < spec.buses.size(); ++i)
        out.at(i, i) += Complex{spec.buses[i].shunt_g, spec.buses[i].shunt_b};
    for (const std::string& fb : spec.faulted_buses) {
        const std::size_t i = spec.bus_index(fb);
        out.at(i, i) += Complex{spec.fault_conductance, 0.0};
    }

    std::vector<GeneratorAttachment> attach = spec.generators;
    std::sort(attach.begin(), attach.end(),
              [](const GeneratorAttachment& a, const GeneratorAttachment& b) {
                  return a.machine < b.machine;
              });
    for (const GeneratorAttachment& g : attach) {
        const std::size_t t = spec.bus_index(g.bus);
        const std::size_t n = out.internal_node(g.machine);
        const Complex yg = 1.0 / Complex{0.0, g.xd_prime};
        out.at(t, t) += yg;
        out.at(n, n) += yg;
        out.at(t, n) -= yg;
        out.at(n, t) -= yg;
    }
    return out;
}

ReducedNetwork kron_reduce(const AdmittanceMatrix& y,
                           const std::vector<std::size_t>& keep) {
    const std::size_t dim = y.dim();
    std::vector<char> kept(dim, 0);
    for (std::size_t k : keep) {
        if (k >= dim) throw ConfigError("kron_reduce keep index out of range");
        if (kept[k]) throw ConfigError("kron_reduce keep index repeated");
        kept[k] = 1;
    }
    std::vector<std::size_t> elim;
    for (std::size_t i = 0; i < dim; ++i)
        if (!kept[i]) elim.push_back(i);

    const std::size_t nk = keep.size();
    const std::size_t ne = elim.size();

    std::vector<Complex> y_red(nk * nk);
    for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nk; ++j) y_red[i * nk + j] = y.at(keep[i], keep[j]);

    if (ne > 0) {
        std::vector<Complex> y_ee(ne * ne);
        for (std::size_t i = 0; i < ne; ++i)
            for (std::size_t j = 0; j < ne; ++j) y_ee[i * ne + j] = y.at(elim[i], elim[j]);
        ComplexLu lu(std::move(y_ee), ne, elim);

        std::vector<Complex> col(ne);
        for (std::size_t j = 0; j < nk; ++j) {
            for (std::size_t i = 0; i < ne; ++i) col[i] = y.at(elim[i], keep[j]);
            const std::vector<Complex> x = lu.solve(col);
            for (std::size_t i = 0; i < nk; ++i) {
                Complex acc{0.0, 0.0};
                for (std::size_t e = 0; e < ne; ++e) acc += y.at(keep[i], elim[e]) * x[e];
                y_red[i * nk + j] -= acc;
            }
        }
    }

    ReducedNetwork out;
    out.n = nk;
    out.g = Matrix(nk, nk);
    out.b = Matrix(nk, nk);
    double scale = 0.0;
    for (const Complex& v : y_red) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
            out.g(i, j) = y_red[i * nk + j].real();
            out.b(i, j) = y_red[i * nk + j].imag();
        }
    const double asym_tol = 1e-9 * std::max(1.0, scale);
    for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = i + 1; j < nk; ++j)
            if (std::abs(out.g(i, j) - out.g(j, i)) > asym_tol ||
                std::abs(out.b(i, j) - out.b(j, i)) > asym_tol)
                throw NetworkError("reduced admittance lost reciprocity; "
                                   "input matrix was not symmetric");
    return out;
}

ReducedNetwork reduce_to_machines(const NetworkSpec& spec) {
    const AdmittanceMatrix y = build_admittance(spec);
    std::vector<std::size_t> keep(y.n_machine);
    for (std::size_t m = 0; m < y.n_machine; ++m) keep[m] = y.internal_node(m);
    return kron_reduce(y, keep);
}

MachineOutputs machine_outputs(const ReducedNetwork& net,
                               std::span<const double> delta,
                               std::span<const double> eq,
                               std::span<const GeneratorAttachment> attach) {
    const std::size_t n = net.n;
    if (delta.size() != n || eq.size() != n || attach.size() != n)
        throw ConfigError("machine_outputs argument lengths must match the network");

    std::vector<Complex> e(n), cur(n);
    for (std::size_t i = 0; i < n; ++i)
        e[i] = eq[i] * Complex{std::cos(delta[i]), std::sin(delta[i])};
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) acc += Complex{net.g(i, j), net.b(i, j)} * e[j];
        cur[i] = acc;
    }

    MachineOutputs out;
    out.p_e.resize(n);
    out.u_t.resize(n);
    out.i_d.resize(n);
    out.i_q.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.p_e[i] = (e[i] * std::conj(cur[i])).real();
        const Complex rotor = Complex{std::cos(delta[i]), -std::sin(delta[i])};
        const Complex i_dq = cur[i] * rotor;
        out.i_q[i] = i_dq.real();
        out.i_d[i] = -i_dq.imag();
        const Complex u = e[i] - Complex{0.0, attach[i].xd_prime} * cur[i];
        out.u_t[i] = std::abs(u);
        if (!std::isfinite(out.p_e[i]) || !std::isfinite(out.u_t[i]))
            throw NetworkError("non-finite output at machine " + std::to_string(i));
    }
    return out;
}

OutputGradients output_gradients(const ReducedNetwork& net,
                                 std::span<const double> delta,
                                 std::span<const double> eq,
                                 std::span<const GeneratorAttachment> attach) {
    const std::size_t n = net.n;
    if (delta.size() != n || eq.size() != n || attach.size() != n)
        throw ConfigError("output_gradients argument lengths must match the network");

    std::vector<Complex> e(n), cur(n), u(n);
    for (std::size_t i = 0; i < n; ++i)
        e[i] = eq[i] * Complex{std::cos(delta[i]), std::sin(delta[i])};
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) acc += Complex{net.g(i, j), net.b(i, j)} * e[j];
        cur[i] = acc;
        u[i] = e[i] - Complex{0.0, attach[i].xd_prime} * cur[i];
    }

    OutputGradients out;
    out.dpe_ddelta = Matrix(n, n);
    out.dpe_deq = Matrix(n, n);
    out.dut_ddelta = Matrix(n, n);
    out.dut_deq = Matrix(n, n);

    for (std::size_t i = 0; i < n; ++i) {
        const double umag = std::abs(u[i]);
        if (umag < 1e-12)
            throw NetworkError("terminal voltage of machine " + std::to_string(i) +
                               " is zero; gradients undefined");
        for (std::size_t j = 0; j < n; ++j) {
            const Complex y_ij{net.g(i, j), net.b(i, j)};
            // phasor sensitivities of E_j to its angle and magnitude
            const Complex de_ddelta = Complex{0.0, 1.0} * e[j];
            const Complex de_deq =
                Complex{std::cos(delta[j]), std::sin(delta[j])};

            Complex dpe_dd = e[i] * std::conj(y_ij * de_ddelta);
            Complex dpe_de = e[i] * std::conj(y_ij * de_deq);
            if (j == i) {
                dpe_dd += de_ddelta * std::conj(cur[i]);
                dpe_de += de_deq * std::conj(cur[i]);
            }
            out.dpe_ddelta(i, j) = dpe_dd.real();
            out.dpe_deq(i, j) = dpe_de.real();

            const Complex m_ij = ((j == i) ? Complex{1.0, 0.0} : Complex{0.0, 0.0}) -
                                 Complex{0.0, attach[i].xd_prime} * y_ij;
            const Complex du_dd = m_ij * de_ddelta;
            const Complex du_de = m_ij * de_deq;
            out.dut_ddelta(i, j) = (std::conj(u[i]) * du_dd).real() / umag;
            out.dut_deq(i, j) = (std::conj(u[i]) * du_de).real() / umag;
        }
    }
    return out;
}

NetworkSpec apply_event(NetworkSpec spec, const NetworkEvent& ev) {
    switch (ev.kind) {
    case NetworkEventKind::FaultAtBus: {
        spec.bus_index(ev.bus);
        if (std::find(spec.faulted_buses.begin(), spec.faulted_buses.end(), ev.bus) ==
            spec.faulted_buses.end())
            spec.faulted_buses.push_back(ev.bus);
        break;
    }
    case NetworkEventKind::ClearFaultRemoveLine: {
        spec.bus_index(ev.bus);
        std::erase(spec.faulted_buses, ev.bus);
        spec.branch(ev.branch).in_service = false;
        break;
    }
    case NetworkEventKind::RemoveLine:
        spec.branch(ev.branch).in_service = false;
        break;
    case NetworkEventKind::Restore:
        if (!ev.branch.empty()) spec.branch(ev.branch).in_service = true;
        if (!ev.bus.empty()) std::erase(spec.faulted_buses, ev.bus);
        break;
    }
    spec.validate();
    return spec;
}

} // namespace lbcsim
