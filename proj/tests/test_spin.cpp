#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spinline/noise.hpp"
#include "spinline/rng.hpp"
#include "spinline/spin.hpp"

#include <cmath>

using namespace spinline;

namespace {

double bloch_x(const SpinState& s, int q) {
    // <sigma_x> of one qubit via partial trace.
    const auto& r = s.rho();
    if (q == 0) return 2.0 * (r(2, 0) + r(3, 1)).real();
    return 2.0 * (r(1, 0) + r(3, 2)).real();
}

double bloch_y(const SpinState& s, int q) {
    const auto& r = s.rho();
    if (q == 0) return 2.0 * (r(2, 0) + r(3, 1)).imag();
    return 2.0 * (r(1, 0) + r(3, 2)).imag();
}

double bloch_z(const SpinState& s, int q) {
    const auto& r = s.rho();
    double up = q == 0 ? (r(2, 2) + r(3, 3)).real() : (r(1, 1) + r(3, 3)).real();
    return 2.0 * up - 1.0;
}

} // namespace

TEST_CASE("larmor frequency: reference value, zero field, addressability spread") {
    FieldConfig f{0.5, 1.0};
    QubitParams q;
    q.g_factor = 2.000;
    CHECK(larmor_frequency(q, f) == doctest::Approx(13.996e9)); // ~14 GHz Zeeman

    FieldConfig f0{1e-30, 1.0};
    q.g_factor = 2.0;
    CHECK(larmor_frequency(q, f0) == doctest::Approx(0.0).epsilon(1e-6));

    QubitParams lo, hi;
    lo.g_factor = 2.0 - 2.17e-3 / 2;
    hi.g_factor = 2.0 + 2.17e-3 / 2;
    double df = larmor_frequency(hi, f) - larmor_frequency(lo, f);
    CHECK(df == doctest::Approx(15.19e6).epsilon(0.001)); // ~15.2 MHz
}

TEST_CASE("exchange model: reference point, decades, eps scale, saturation") {
    ExchangeModel m;
    m.j0_hz = 250e3;
    m.v0_volts = 1.5;
    m.slope_dec_per_v = 33.69;
    m.eps_scale_v = 0.05;
    m.j_max_hz = 1e10;

    CHECK(exchange_j(m, 1.5).hz == doctest::Approx(250e3));
    CHECK(exchange_j(m, 1.6).hz == doctest::Approx(250e3 * std::pow(10.0, 3.369)).epsilon(1e-9));
    CHECK(exchange_j(m, 1.5, 0.05).hz == doctest::Approx(250e3 * std::exp(1.0)).epsilon(1e-9));

    auto sat = exchange_j(m, 3.0);
    CHECK(sat.saturated);
    CHECK(sat.hz == doctest::Approx(1e10));
    CHECK_FALSE(exchange_j(m, 1.5).saturated);

    // Strictly increasing in both arguments.
    double prev = 0;
    for (int i = 0; i < 50; ++i) {
        double j = exchange_j(m, 1.40 + 0.004 * i).hz;
        CHECK(j > prev);
        prev = j;
    }
    prev = 0;
    for (int i = 0; i < 50; ++i) {
        double j = exchange_j(m, 1.5, -0.1 + 0.004 * i).hz;
        CHECK(j > prev);
        prev = j;
    }
}

TEST_CASE("evolve: identity at zero duration, pi pulse, detuned Rabi bound") {
    SpinState dd = SpinState::down_down();
    PairHamiltonian h;
    CHECK(evolve(dd, h, 0.0).rho() == dd.rho());

    // On-resonance pi pulse: fR = 200 kHz for t = 1/(2 fR) = 2.5 us.
    h.drive_hz[0] = 200e3;
    SpinState up = evolve(dd, h, 2.5e-6);
    CHECK(up.population(SpinState::kUpDown) == doctest::Approx(1.0).epsilon(1e-9));

    // Detuned by fR: max excited population = fR^2/(fR^2+D^2) = 1/2.
    h.detuning_hz[0] = 200e3;
    double pmax = 0;
    for (int i = 1; i <= 80; ++i) {
        SpinState s = evolve(dd, h, 2.5e-6 * i / 40.0);
        pmax = std::max(pmax, s.population(SpinState::kUpDown) +
                                  s.population(SpinState::kUpUp));
    }
    CHECK(pmax == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("evolve rejects invalid input") {
    SpinState dd = SpinState::down_down();
    CHECK_THROWS_AS(evolve(dd, PairHamiltonian{}, -1.0), UsageError);

    SpinState::Matrix bad = SpinState::Matrix::Zero();
    bad(0, 0) = 1.5;
    bad(1, 1) = -0.5;
    SpinState not_psd(bad, false);
    CHECK_THROWS_AS(evolve(not_psd, PairHamiltonian{}, 1e-6), StateError);
}

TEST_CASE("x rotations: pi flip, composition, inverse") {
    SpinState dd = SpinState::down_down();
    SpinState flipped = apply_x_rotation(dd, 0, kPi);
    CHECK(flipped.population(SpinState::kUpDown) == doctest::Approx(1.0));

    SpinState two_halves = apply_x_rotation(apply_x_rotation(dd, 0, kPi / 2), 0, kPi / 2);
    CHECK((two_halves.rho() - flipped.rho()).cwiseAbs().maxCoeff() < 1e-12);

    SpinState back = apply_x_rotation(apply_x_rotation(dd, 0, kPi / 2), 0, -kPi / 2);
    CHECK((back.rho() - dd.rho()).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(apply_x_rotation(dd, 0, 3 * kPi), UsageError);
}

TEST_CASE("virtual Z frame: sandwich gives a Y rotation, additivity, 2pi no-op") {
    SpinState dd = SpinState::down_down();

    // Time order Z(-pi/2), X(pi/2), Z(+pi/2) acts like Y(pi/2).
    RotatingFrame f;
    apply_virtual_z(f, 0, -kPi / 2);
    SpinState sandwiched = apply_x_rotation(dd, 0, kPi / 2, f);
    apply_virtual_z(f, 0, kPi / 2);
    CHECK(f.phase[0] == doctest::Approx(0.0));

    RotatingFrame plain;
    SpinState y90 = apply_x_rotation(dd, 0, kPi / 2, plain, kPi / 2);
    CHECK(bloch_x(sandwiched, 0) == doctest::Approx(bloch_x(y90, 0)).epsilon(1e-9));
    CHECK(bloch_y(sandwiched, 0) == doctest::Approx(bloch_y(y90, 0)).epsilon(1e-9));
    CHECK(bloch_z(sandwiched, 0) == doctest::Approx(bloch_z(y90, 0)).epsilon(1e-9));

    // Additive modulo 2pi.
    RotatingFrame g;
    apply_virtual_z(g, 1, 1.0);
    apply_virtual_z(g, 1, 2.5);
    CHECK(g.phase[1] == doctest::Approx(3.5));
    apply_virtual_z(g, 1, 2.0 * kPi);
    CHECK(g.phase[1] == doctest::Approx(3.5));
}

TEST_CASE("cz primitive: conditional pi at 1/(2J), identity at 1/J, linearity") {
    ExchangeModel m;
    m.j0_hz = 250e3;
    m.v0_volts = 1.5;
    m.slope_dec_per_v = 33.69;
    m.eps_scale_v = 0.05;

    double dz = 13.65e6;
    SpinState plus_plus = apply_x_rotation(
        apply_x_rotation(SpinState::down_down(), 0, kPi / 2), 1, kPi / 2);

    double j = exchange_j(m, 1.5).hz;
    double t_cz = 1.0 / (2.0 * j);
    CzResult r = apply_cz(plus_plus, m, 1.5, t_cz, dz);
    CHECK(r.within_validity);
    CHECK(r.conditional_phase == doctest::Approx(kPi));
    CHECK(r.single_qubit_phase[0] == doctest::Approx(kPi / 2));

    // Undo the single-qubit Z terms: the result should be exactly CZ.
    SpinState corrected = apply_z_phase(apply_z_phase(r.state, 0, -kPi / 2), 1, -kPi / 2);
    Eigen::Matrix4cd cz = Eigen::Matrix4cd::Identity();
    cz(3, 3) = -1;
    Eigen::Matrix4cd expect = cz * plus_plus.rho() * cz.adjoint();
    CHECK((corrected.rho() - expect).cwiseAbs().maxCoeff() < 1e-12);

    // Duration 1/J: conditional 2pi = identity up to single-qubit Zphases.
    CzResult r2 = apply_cz(plus_plus, m, 1.5, 2.0 * t_cz, dz);
    SpinState corrected2 = apply_z_phase(apply_z_phase(r2.state, 0, -kPi), 1, -kPi);
    CHECK((corrected2.rho() - plus_plus.rho()).cwiseAbs().maxCoeff() < 1e-12);

    // Conditional phase linear in duration and in J.
    CHECK(apply_cz(plus_plus, m, 1.5, 3e-6, dz).conditional_phase ==
          doctest::Approx(2 * kPi * j * 3e-6));
    double j_hi = exchange_j(m, 1.52).hz;
    CHECK(apply_cz(plus_plus, m, 1.52, 3e-6, dz).conditional_phase ==
          doctest::Approx(2 * kPi * j_hi * 3e-6));

    // Validity flag trips when J exceeds 10% of the Zeeman difference.
    CHECK_FALSE(apply_cz(plus_plus, m, 1.56, 1e-6, dz).within_validity);
}

TEST_CASE("fingerprint-style wait advances the conditional phase by 2 pi J t") {
    // Control down, target superposition, J = 250 kHz for 1 us: the target
    // phase moves pi/2 relative to the J = 0 reference when measured
    // conditionally (it splits +-pi/4 between the two control branches).
    SpinState plus_down = apply_x_rotation(SpinState::down_down(), 0, kPi / 2);
    SpinState evolved = apply_exchange_phase(plus_down, 250e3, 1e-6);
    SpinState reference = apply_exchange_phase(plus_down, 0.0, 1e-6);

    auto phase = [](const SpinState& s) {
        return std::atan2(bloch_y(s, 0), bloch_x(s, 0));
    };
    double branch_down = phase(evolved) - phase(reference);

    SpinState plus_up = apply_x_rotation(
        apply_x_rotation(SpinState::down_down(), 1, kPi), 0, kPi / 2);
    double branch_up = phase(apply_exchange_phase(plus_up, 250e3, 1e-6)) - phase(plus_up);

    CHECK(std::abs(branch_down - branch_up) == doctest::Approx(kPi / 2).epsilon(1e-9));
    CHECK(std::abs(branch_down) == doctest::Approx(kPi / 4).epsilon(1e-9));
}

TEST_CASE("trace and purity are preserved by unitary chains") {
    auto rng = make_rng(7, Stream::generic);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    SpinState s = apply_x_rotation(SpinState::down_down(), 0, kPi / 3);
    double purity0 = s.purity();
    for (int i = 0; i < 50; ++i) {
        PairHamiltonian h;
        h.detuning_hz = {u(rng) * 1e5, u(rng) * 1e5};
        h.drive_hz = {std::abs(u(rng)) * 1e5, std::abs(u(rng)) * 1e5};
        h.exchange_hz = std::abs(u(rng)) * 1e5;
        s = evolve(s, h, 1e-6);
    }
    CHECK(s.trace_deviation() < 1e-9);
    CHECK(s.purity() == doctest::Approx(purity0).epsilon(1e-9));
    CHECK(s.min_eigenvalue() > -1e-9);
}
