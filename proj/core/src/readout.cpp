#include "spinline/readout.hpp"

#include <cmath>

namespace spinline {

namespace {

bool pair_is_lateral(int pair) { return pair == 0 || pair == 3; }

constexpr double kMixedOddDecayWait_s = 100e-6;

} // namespace

double SensorModel::mean(Parity parity, SenseMode mode, bool lateral) const {
    if (mode == SenseMode::direct) {
        if (lateral) return parity == Parity::odd ? mu_unblocked : mu_blocked;
        return parity == Parity::odd ? mu_unblocked_central : mu_blocked_central;
    }
    double mid = 0.5 * (mu_unblocked_central + mu_blocked_central);
    double half = 0.5 * (mu_unblocked_central - mu_blocked_central) * cascade_gain;
    return parity == Parity::odd ? mid + half : mid - half;
}

double SensorModel::threshold_for(SenseMode mode, bool lateral) const {
    if (threshold) return *threshold;
    return 0.5 * (mean(Parity::odd, mode, lateral) + mean(Parity::even, mode, lateral));
}

bool SensorModel::odd_above_threshold(SenseMode mode, bool lateral) const {
    return mean(Parity::odd, mode, lateral) > mean(Parity::even, mode, lateral);
}

PsbOutcome psb_project(const SpinState& state, std::mt19937_64& rng) {
    state.validate();
    double p_odd = odd_probability(state);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    bool odd = u01(rng) < p_odd;

    SpinState::Matrix proj = SpinState::Matrix::Zero();
    if (odd) {
        proj(SpinState::kDownUp, SpinState::kDownUp) = 1.0;
        proj(SpinState::kUpDown, SpinState::kUpDown) = 1.0;
    } else {
        proj(SpinState::kDownDown, SpinState::kDownDown) = 1.0;
        proj(SpinState::kUpUp, SpinState::kUpUp) = 1.0;
    }
    SpinState::Matrix collapsed = proj * state.rho() * proj;
    double norm = collapsed.trace().real();
    if (norm <= 0) {
        // Born sampling picked a zero-probability branch only through
        // floating error; fall back to the other branch.
        odd = !odd;
        proj = SpinState::Matrix::Identity() - proj;
        collapsed = proj * state.rho() * proj;
        norm = collapsed.trace().real();
    }
    collapsed /= norm;
    return {odd ? Parity::odd : Parity::even, SpinState(collapsed, false)};
}

ReadoutOutcome sense(Parity parity, int pair, const SensorModel& sensor, SenseMode mode,
                     std::mt19937_64& rng) {
    bool lateral = pair_is_lateral(pair);
    if (mode == SenseMode::cascaded && lateral)
        throw UsageError("cascaded readout is only defined for central DQDs (pairs 1,2)");

    double mu = sensor.mean(parity, mode, lateral);
    double sigma = sensor.sigma_signal / std::sqrt(static_cast<double>(sensor.integration_shots));
    std::normal_distribution<double> n(mu, sigma);
    double raw = sigma > 0 ? n(rng) : mu;

    double thr = sensor.threshold_for(mode, lateral);
    bool above = raw > thr;
    bool odd = sensor.odd_above_threshold(mode, lateral) ? above : !above;
    return {raw, odd ? Parity::odd : Parity::even, pair, mode};
}

CascadeArming cascade_armed(Parity lateral_parity, double eps_lateral_v,
                            const CascadeConfig& window, double cascade_gain) {
    bool in_window =
        std::abs(eps_lateral_v - window.eps_anticrossing_v) < window.window_halfwidth_v;
    if (in_window && lateral_parity == Parity::odd) return {true, cascade_gain};
    return {false, 1.0};
}

InitResult initialize_parity(InitKind kind, std::mt19937_64& rng,
                             double herald_probability, int retry_limit) {
    if (kind == InitKind::mixed_odd) {
        return {SpinState::mixed_odd(), false, 0, kMixedOddDecayWait_s};
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int attempt = 1; attempt <= retry_limit; ++attempt) {
        if (u01(rng) < herald_probability)
            return {SpinState::down_down(), true, attempt, 0.0};
    }
    throw InitializationError("heralded |dd> initialization failed after " +
                              std::to_string(retry_limit) + " attempts");
}

double visibility(const std::vector<Parity>& labels_even_prepared,
                  const std::vector<Parity>& labels_odd_prepared) {
    if (labels_even_prepared.empty() || labels_odd_prepared.empty())
        throw AnalysisError("visibility: empty histogram");
    auto frac = [](const std::vector<Parity>& v, Parity want) {
        std::size_t n = 0;
        for (Parity p : v) n += (p == want);
        return static_cast<double>(n) / static_cast<double>(v.size());
    };
    return frac(labels_odd_prepared, Parity::odd) +
           frac(labels_even_prepared, Parity::even) - 1.0;
}

double visibility_from_signals(const std::vector<double>& signals_even_prepared,
                               const std::vector<double>& signals_odd_prepared,
                               double threshold, bool odd_above) {
    if (signals_even_prepared.empty() || signals_odd_prepared.empty())
        throw AnalysisError("visibility: empty histogram");
    auto classify = [&](double s) {
        bool above = s > threshold;
        return (odd_above ? above : !above) ? Parity::odd : Parity::even;
    };
    std::vector<Parity> even_labels, odd_labels;
    even_labels.reserve(signals_even_prepared.size());
    odd_labels.reserve(signals_odd_prepared.size());
    for (double s : signals_even_prepared) even_labels.push_back(classify(s));
    for (double s : signals_odd_prepared) odd_labels.push_back(classify(s));
    return visibility(even_labels, odd_labels);
}

} // namespace spinline
