#pragma once

#include "spinline/constants.hpp"
#include "spinline/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>

namespace spinline {

/// Per-dot qubit parameters (Fig.-2-style characterization values).
struct QubitParams {
    double g_factor = 2.0;
    double rabi_hz = 150e3;
    double t2_star_s = 41e-6;
    double t2_hahn_s = 1.31e-3;
    int dot_index = 0; // 1..8

    void check() const {
        if (!(rabi_hz > 0)) throw ConfigError("rabi_hz must be > 0");
        if (!(t2_star_s > 0)) throw ConfigError("t2_star_s must be > 0");
        if (t2_hahn_s < t2_star_s)
            throw ConfigError("t2_hahn_s must be >= t2_star_s");
    }
};

struct FieldConfig {
    double b0_tesla = 0.5;   // DC in-plane field
    double b1_scale = 1.0;   // dimensionless drive-strength scaling

    void check() const {
        if (!(b0_tesla > 0)) throw ConfigError("b0_tesla must be > 0");
    }
};

/// Exponential exchange turn-on: J(vj, eps) = j0 * 10^(slope*(vj-v0)) * exp(eps/eps_scale).
struct ExchangeModel {
    double j0_hz = 250e3;
    double v0_volts = 1.5;
    double slope_dec_per_v = 33.69;
    double eps_scale_v = 0.05;
    double j_max_hz = 100e6; // saturation guard

    void check() const {
        if (!(j0_hz > 0)) throw ConfigError("exchange j0_hz must be > 0");
        if (!(slope_dec_per_v > 0)) throw ConfigError("exchange slope must be > 0");
        if (!(eps_scale_v > 0)) throw ConfigError("exchange eps_scale_v must be > 0");
    }
};

struct ExchangeValue {
    double hz = 0;
    bool saturated = false; // true when clamped at j_max
};

/// Larmor frequency g * muB * B0 / h in Hz.
double larmor_frequency(const QubitParams& q, const FieldConfig& f);

ExchangeValue exchange_j(const ExchangeModel& m, double vj_volts, double eps_volts = 0.0);

/// Two-spin density matrix in the basis {dd, du, ud, uu} where the first
/// letter is the left-dot qubit (qubit 0) and d = spin down. Index layout:
/// i = 2*s_left + s_right with s = 1 for spin up.
class SpinState {
public:
    using Matrix = Eigen::Matrix4cd;
    using Ket = Eigen::Vector4cd;

    static constexpr int kDownDown = 0;
    static constexpr int kDownUp = 1;
    static constexpr int kUpDown = 2;
    static constexpr int kUpUp = 3;

    static constexpr double kTraceTol = 1e-9;
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kPsdTol = 1e-9;

    SpinState(); // |dd><dd|
    explicit SpinState(const Matrix& rho, bool validate_input = true);
    static SpinState basis(int index);
    static SpinState down_down() { return basis(kDownDown); }
    static SpinState from_ket(const Ket& psi);
    /// Equal classical mixture of |du> and |ud|.
    static SpinState mixed_odd();

    const Matrix& rho() const { return rho_; }
    double population(int index) const { return rho_(index, index).real(); }
    double purity() const { return (rho_ * rho_).trace().real(); }
    double trace_deviation() const { return std::abs(rho_.trace().real() - 1.0) +
                                            std::abs(rho_.trace().imag()); }
    double hermiticity_deviation() const;
    double min_eigenvalue() const;
    /// Throws StateError when trace/Hermiticity/PSD tolerances are violated.
    void validate() const;

private:
    Matrix rho_;
};

/// Software rotating-frame phases, one per qubit of a pair. A virtual Z adds
/// to the frame; subsequent xy rotations act about the correspondingly
/// rotated axis. Purely bookkeeping, no physical evolution.
struct RotatingFrame {
    std::array<double, 2> phase{0.0, 0.0};
};

/// Accumulate a virtual-Z phase on one qubit (additive, modulo 2*pi).
void apply_virtual_z(RotatingFrame& frame, int qubit, double phase);

/// Rotating-frame pair Hamiltonian, all terms in Hz:
///   H/h = df0*Sz0 + df1*Sz1 + fR0*(cos p0 Sx0 + sin p0 Sy0)
///                 + fR1*(cos p1 Sx1 + sin p1 Sy1) + J*(S0.S1 - 1/4)
struct PairHamiltonian {
    std::array<double, 2> detuning_hz{0.0, 0.0};
    std::array<double, 2> drive_hz{0.0, 0.0};
    std::array<double, 2> drive_phase{0.0, 0.0};
    double exchange_hz = 0.0;

    bool is_free_evolution() const {
        return drive_hz[0] == 0.0 && drive_hz[1] == 0.0 && exchange_hz == 0.0;
    }
};

class NoiseRealization; // noise.hpp

/// Unitary evolution under the pair Hamiltonian for `duration` seconds.
/// With a stochastic noise realization, per-qubit frequency offsets are
/// sampled along the way (exact integrated-OU phases on free segments,
/// piecewise-constant offsets on driven ones). With an analytic realization,
/// evolution is noiseless and free segments apply the Gaussian quasi-static
/// envelope to the coherences.
SpinState evolve(const SpinState& state, const PairHamiltonian& h, double duration_s,
                 NoiseRealization* noise = nullptr);

/// Ideal calibrated xy-plane rotation on one qubit (pulse-area shortcut used
/// by the scripted experiments). The rotation axis is `axis_phase` rotated
/// backwards by the accumulated virtual-Z frame.
SpinState apply_x_rotation(const SpinState& state, int qubit, double angle,
                           const RotatingFrame& frame = {}, double axis_phase = 0.0);

/// Physical Z phase on one qubit: |u> gains e^{i phase} relative to |d>.
SpinState apply_z_phase(const SpinState& state, int qubit, double phase);

/// Ising-limit exchange phase accumulation (valid for J much smaller than the
/// Zeeman difference): antiparallel states gain pi*J*t each relative to the
/// parallel ones, i.e. U = diag(1, e^{i pi J t}, e^{i pi J t}, 1).
SpinState apply_exchange_phase(const SpinState& state, double j_hz, double duration_s);

struct CzResult {
    SpinState state;
    double j_hz = 0;
    bool j_saturated = false;
    /// CZ-sense conditional phase 2*pi*J*t accumulated between the
    /// antiparallel and parallel subspaces.
    double conditional_phase = 0;
    /// Single-qubit Z phases pi*J*t picked up alongside (cancelled by the
    /// phase calibration).
    std::array<double, 2> single_qubit_phase{0, 0};
    /// False when J exceeds 10% of the pair's Zeeman difference.
    bool within_validity = true;
};

/// Controlled-phase primitive at barrier voltage `vj`: duration 1/(2J) gives
/// a CZ up to single-qubit Z corrections.
CzResult apply_cz(const SpinState& state, const ExchangeModel& m, double vj_volts,
                  double duration_s, double zeeman_diff_hz, double eps_volts = 0.0);

/// Probability that a parity measurement returns odd (antiparallel).
double odd_probability(const SpinState& state);

} // namespace spinline
