#include "lbcsim/certify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

namespace lbcsim {

namespace {

std::size_t block_dim(MachineKind k) {
    switch (k) {
    case MachineKind::Htg:
    case MachineKind::Cg:
        return 4;
    case MachineKind::Rg:
        return 5;
    case MachineKind::InfiniteBus:
        throw ConfigError("infinite bus has no surrogate block");
    }
    return 0;
}

std::size_t input_dim(MachineKind k) {
    return k == MachineKind::Rg ? 3 : 2;
}

} // namespace

SurrogateSystem build_surrogate(std::span<const MachineKind> kinds,
                                std::span<const SurrogateConstants> constants) {
    if (kinds.empty())
        throw ConfigError("surrogate system needs at least one controlled machine");
    if (constants.size() != kinds.size())
        throw ConfigError("surrogate constants must cover every machine");

    std::size_t dim = 0, width = 0;
    for (MachineKind k : kinds) {
        dim += block_dim(k);
        width += input_dim(k);
    }

    SurrogateSystem sys;
    sys.kinds.assign(kinds.begin(), kinds.end());
    sys.a = Matrix(dim, dim);
    sys.b = Matrix(dim, width);

    std::size_t r = 0, c = 0;
    for (std::size_t m = 0; m < kinds.size(); ++m) {
        const SurrogateConstants& sc = constants[m];
        // rows 1 and 3 carry the designer couplings, rows 2/4(/5) are the
        // integrator rows the inputs drive
        sys.a(r + 0, r + 0) = sc.a1;
        sys.a(r + 0, r + 1) = sc.a2;
        sys.a(r + 2, r + 2) = sc.a3;
        sys.a(r + 2, r + 3) = sc.a4;

        sys.b(r + 1, c + 0) = 1.0;
        sys.b(r + 3, c + 1) = 1.0;
        if (kinds[m] == MachineKind::Rg) sys.b(r + 4, c + 2) = 1.0;

        r += block_dim(kinds[m]);
        c += input_dim(kinds[m]);
    }
    return sys;
}

std::size_t controllability_rank(const SurrogateSystem& sys, double tol) {
    const std::size_t n = sys.dim();
    const std::size_t w = sys.b.cols();

    Matrix block(n, n * w);
    Matrix power = sys.b;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < w; ++j) block(i, p * w + j) = power(i, j);
        if (p + 1 < n) power = sys.a * power;
    }
    return matrix_rank(block, tol);
}

Matrix gain_matrix(const SurrogateSystem& sys, std::span<const Gains> gains) {
    if (gains.size() != sys.kinds.size())
        throw ConfigError("gain rows must cover every machine");

    Matrix k(sys.b.cols(), sys.dim());
    std::size_t r = 0, c = 0;
    for (std::size_t m = 0; m < sys.kinds.size(); ++m) {
        const Gains& g = gains[m];
        k(c + 0, r + 0) = g.speed;
        k(c + 0, r + 1) = g.voltage;
        k(c + 1, r + 2) = g.power;
        k(c + 1, r + 3) = g.opening;
        if (sys.kinds[m] == MachineKind::Rg) k(c + 2, r + 4) = g.ip_opening;
        r += block_dim(sys.kinds[m]);
        c += input_dim(sys.kinds[m]);
    }
    return k;
}

GasCertificate gas_certificate(const SurrogateSystem& sys,
                               std::span<const Gains> gains) {
    GasCertificate cert;
    cert.dim = sys.dim();
    cert.rank = controllability_rank(sys);
    cert.phi = sys.a - sys.b * gain_matrix(sys, gains);
    cert.psi = cert.phi + cert.phi.transposed();
    cert.eigenvalues = sym_eigenvalues(cert.psi);
    cert.margin = cert.eigenvalues.back();
    cert.certified = (cert.rank == cert.dim) && (cert.margin < 0.0);
    return cert;
}

double lyapunov_value(std::span<const FeedbackVector> fbs) {
    double acc = 0.0;
    for (const FeedbackVector& fb : fbs) {
        acc += fb.d_omega * fb.d_omega + fb.d_ut * fb.d_ut + fb.d_pe * fb.d_pe +
               fb.d_mu1 * fb.d_mu1;
        if (fb.size == 5) acc += fb.d_mu2 * fb.d_mu2;
    }
    return 0.5 * acc;
}

std::vector<LyapunovSample> vdot_series(std::span<const double> v,
                                        std::span<const std::uint8_t> saturated,
                                        double dt, double noise_floor) {
    const std::size_t n = v.size();
    if (n < 3) throw ConfigError("v_dot monitor needs at least 3 samples");
    if (saturated.size() != n)
        throw ConfigError("v_dot monitor: saturation flags must match samples");
    if (!(dt > 0.0)) throw ConfigError("v_dot monitor: dt must be positive");

    std::vector<LyapunovSample> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        LyapunovSample& s = out[k];
        s.t = static_cast<double>(k) * dt;
        s.v = v[k];
        if (k == 0)
            s.v_dot = (v[1] - v[0]) / dt;
        else if (k + 1 == n)
            s.v_dot = (v[n - 1] - v[n - 2]) / dt;
        else
            s.v_dot = (v[k + 1] - v[k - 1]) / (2.0 * dt);
        s.violation = s.v_dot > noise_floor;
        s.saturated = saturated[k] != 0;
    }
    return out;
}

std::string certificate_report(const GasCertificate& cert) {
    std::ostringstream os;
    char buf[64];
    os << "stability certificate\n";
    os << "  surrogate dimension   " << cert.dim << "\n";
    os << "  controllability rank  " << cert.rank << "\n";
    std::snprintf(buf, sizeof buf, "%.6f", cert.eigenvalues.front());
    os << "  most negative eig     " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.6f", cert.margin);
    os << "  margin (max eig)      " << buf << "\n";
    os << "  certified             " << (cert.certified ? "yes" : "no") << "\n";
    return os.str();
}

} // namespace lbcsim
