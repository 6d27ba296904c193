#include "spinline/spin.hpp"

#include "spinline/noise.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace spinline {

namespace {

using Cx = std::complex<double>;
using M2 = Eigen::Matrix2cd;
using M4 = Eigen::Matrix4cd;

const Cx kI{0.0, 1.0};

// Pauli matrices in the (down, up) single-qubit basis; up is +z.
M2 sigma_x() {
    M2 m;
    m << 0, 1, 1, 0;
    return m;
}
M2 sigma_y() {
    M2 m;
    m << 0, -kI, kI, 0;
    return m;
}
M2 sigma_z() {
    M2 m;
    m << -1, 0, 0, 1;
    return m;
}

M4 embed(const M2& op, int qubit) {
    const M2 id = M2::Identity();
    M4 out;
    const M2& a = qubit == 0 ? op : id; // qubit 0 = left dot = high bit
    const M2& b = qubit == 0 ? id : op;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

M4 pair_hamiltonian_matrix(const PairHamiltonian& h,
                           const std::array<double, 2>& extra_detuning_hz) {
    M4 m = M4::Zero();
    for (int q = 0; q < 2; ++q) {
        double df = h.detuning_hz[q] + extra_detuning_hz[q];
        if (df != 0.0) m += 0.5 * df * embed(sigma_z(), q);
        if (h.drive_hz[q] != 0.0) {
            double p = h.drive_phase[q];
            m += 0.5 * h.drive_hz[q] *
                 (std::cos(p) * embed(sigma_x(), q) + std::sin(p) * embed(sigma_y(), q));
        }
    }
    if (h.exchange_hz != 0.0) {
        M4 dot = 0.25 * (embed(sigma_x(), 0) * embed(sigma_x(), 1) +
                         embed(sigma_y(), 0) * embed(sigma_y(), 1) +
                         embed(sigma_z(), 0) * embed(sigma_z(), 1));
        m += h.exchange_hz * (dot - 0.25 * M4::Identity());
    }
    return m;
}

// exp(-i 2 pi H t) for Hermitian H (Hz), via eigendecomposition.
M4 propagator(const M4& h_hz, double t_s) {
    Eigen::SelfAdjointEigenSolver<M4> es(h_hz);
    Eigen::Vector4d ev = es.eigenvalues();
    Eigen::Vector4cd phases;
    for (int i = 0; i < 4; ++i) phases(i) = std::exp(-kI * (2.0 * kPi * ev(i) * t_s));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

M4 diagonal_unitary(const std::array<double, 4>& phases) {
    M4 u = M4::Zero();
    for (int i = 0; i < 4; ++i) u(i, i) = std::exp(kI * phases[i]);
    return u;
}

// Whether two basis indices differ in qubit q's spin.
bool differs(int i, int j, int q) {
    int bit = q == 0 ? 2 : 1;
    return ((i & bit) != (j & bit));
}

} // namespace

double larmor_frequency(const QubitParams& q, const FieldConfig& f) {
    return q.g_factor * kMuBOverH_HzPerT * f.b0_tesla;
}

ExchangeValue exchange_j(const ExchangeModel& m, double vj_volts, double eps_volts) {
    // Work in log10 space so extreme inputs cannot overflow before the clamp.
    double log_j = std::log10(m.j0_hz) + m.slope_dec_per_v * (vj_volts - m.v0_volts) +
                   (eps_volts / m.eps_scale_v) / std::log(10.0);
    double log_max = std::log10(m.j_max_hz);
    if (log_j >= log_max) return {m.j_max_hz, true};
    return {std::pow(10.0, log_j), false};
}

SpinState::SpinState() : rho_(Matrix::Zero()) { rho_(0, 0) = 1.0; }

SpinState::SpinState(const Matrix& rho, bool validate_input) : rho_(rho) {
    if (validate_input) validate();
}

SpinState SpinState::basis(int index) {
    Matrix m = Matrix::Zero();
    m(index, index) = 1.0;
    return SpinState(m, false);
}

SpinState SpinState::from_ket(const Ket& psi) {
    Ket n = psi / psi.norm();
    return SpinState(n * n.adjoint(), false);
}

SpinState SpinState::mixed_odd() {
    Matrix m = Matrix::Zero();
    m(kDownUp, kDownUp) = 0.5;
    m(kUpDown, kUpDown) = 0.5;
    return SpinState(m, false);
}

double SpinState::hermiticity_deviation() const {
    return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double SpinState::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es((rho_ + rho_.adjoint()) / 2.0);
    return es.eigenvalues().minCoeff();
}

void SpinState::validate() const {
    if (trace_deviation() > kTraceTol)
        throw StateError("density matrix trace deviates from 1 by " +
                         std::to_string(trace_deviation()));
    if (hermiticity_deviation() > kHermitianTol)
        throw StateError("density matrix is not Hermitian");
    if (min_eigenvalue() < -kPsdTol)
        throw StateError("density matrix is not positive semidefinite");
}

void apply_virtual_z(RotatingFrame& frame, int qubit, double phase) {
    double p = frame.phase.at(static_cast<std::size_t>(qubit)) + phase;
    p = std::fmod(p, 2.0 * kPi);
    if (p < 0) p += 2.0 * kPi;
    frame.phase[static_cast<std::size_t>(qubit)] = p;
}

SpinState evolve(const SpinState& state, const PairHamiltonian& h, double duration_s,
                 NoiseRealization* noise) {
    if (duration_s < 0) throw UsageError("evolve: duration must be >= 0");
    state.validate();
    if (duration_s == 0) return state;

    if (noise == nullptr) {
        M4 u = propagator(pair_hamiltonian_matrix(h, {0.0, 0.0}), duration_s);
        return SpinState(u * state.rho() * u.adjoint(), false);
    }

    if (noise->analytic()) {
        M4 u = propagator(pair_hamiltonian_matrix(h, {0.0, 0.0}), duration_s);
        M4 rho = u * state.rho() * u.adjoint();
        if (h.is_free_evolution()) {
            // Quasi-static Gaussian ensemble average: each coherence decays by
            // the product of the envelopes of the qubits whose spin differs.
            std::array<double, 2> env{noise->ramsey_envelope(0, duration_s),
                                      noise->ramsey_envelope(1, duration_s)};
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    for (int q = 0; q < 2; ++q)
                        if (differs(i, j, q)) rho(i, j) *= env[static_cast<std::size_t>(q)];
        }
        return SpinState(rho, false);
    }

    // Stochastic backend.
    if (h.is_free_evolution()) {
        // Dephasing only: exact integrated phases, no step-size error.
        std::array<double, 4> phases{};
        std::array<double, 2> integral{noise->advance_phase_integral(0, duration_s),
                                       noise->advance_phase_integral(1, duration_s)};
        for (int i = 0; i < 4; ++i) {
            double sz0 = (i & 2) ? 0.5 : -0.5;
            double sz1 = (i & 1) ? 0.5 : -0.5;
            phases[static_cast<std::size_t>(i)] =
                -2.0 * kPi *
                (sz0 * (h.detuning_hz[0] * duration_s + integral[0]) +
                 sz1 * (h.detuning_hz[1] * duration_s + integral[1]));
        }
        M4 u = diagonal_unitary(phases);
        return SpinState(u * state.rho() * u.adjoint(), false);
    }

    int n = noise->substeps(duration_s);
    double dt = duration_s / n;
    M4 rho = state.rho();
    for (int k = 0; k < n; ++k) {
        std::array<double, 2> off{noise->offset_hz(0), noise->offset_hz(1)};
        M4 u = propagator(pair_hamiltonian_matrix(h, off), dt);
        rho = u * rho * u.adjoint();
        noise->advance(dt);
    }
    return SpinState(rho, false);
}

SpinState apply_x_rotation(const SpinState& state, int qubit, double angle,
                           const RotatingFrame& frame, double axis_phase) {
    if (std::abs(angle) > 2.0 * kPi + 1e-12)
        throw UsageError("apply_x_rotation: angle outside [-2pi, 2pi]");
    double phi = axis_phase - frame.phase.at(static_cast<std::size_t>(qubit));
    M2 axis = std::cos(phi) * sigma_x() + std::sin(phi) * sigma_y();
    M2 r = std::cos(angle / 2.0) * M2::Identity() - kI * std::sin(angle / 2.0) * axis;
    M4 u = embed(r, qubit);
    return SpinState(u * state.rho() * u.adjoint(), false);
}

SpinState apply_z_phase(const SpinState& state, int qubit, double phase) {
    M2 z = M2::Identity();
    z(1, 1) = std::exp(kI * phase);
    M4 u = embed(z, qubit);
    return SpinState(u * state.rho() * u.adjoint(), false);
}

SpinState apply_exchange_phase(const SpinState& state, double j_hz, double duration_s) {
    double theta = kPi * j_hz * duration_s;
    M4 u = diagonal_unitary({0.0, theta, theta, 0.0});
    return SpinState(u * state.rho() * u.adjoint(), false);
}

CzResult apply_cz(const SpinState& state, const ExchangeModel& m, double vj_volts,
                  double duration_s, double zeeman_diff_hz, double eps_volts) {
    ExchangeValue j = exchange_j(m, vj_volts, eps_volts);
    CzResult r{apply_exchange_phase(state, j.hz, duration_s),
               j.hz,
               j.saturated,
               2.0 * kPi * j.hz * duration_s,
               {kPi * j.hz * duration_s, kPi * j.hz * duration_s},
               j.hz <= 0.1 * std::abs(zeeman_diff_hz)};
    return r;
}

double odd_probability(const SpinState& state) {
    return state.population(SpinState::kDownUp) + state.population(SpinState::kUpDown);
}

} // namespace spinline
