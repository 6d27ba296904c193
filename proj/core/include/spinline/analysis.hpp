#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace spinline {

struct FitResult {
    std::string model;
    std::vector<std::string> param_names;
    Eigen::VectorXd params;
    Eigen::VectorXd uncertainties; // 1-sigma, from the linearized covariance
    double residual_norm = 0;
    bool converged = false;
    std::string message; // reason when the estimates are unusable

    double param(const std::string& name) const;
    double uncertainty(const std::string& name) const;
};

struct LmOptions {
    int max_iterations = 200;
    double rel_step_tol = 1e-8;
    double lambda0 = 1e-3;
};

/// Damped (Levenberg-Marquardt) least squares with a numeric Jacobian.
/// Converges when the relative step drops below rel_step_tol; gives up after
/// max_iterations with converged=false.
FitResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd x0, std::vector<std::string> param_names,
    const LmOptions& opts = {});

enum class DecayModel { gaussian_ramsey, stretched_hahn };

/// Fit A*exp(-(t/T)^n) + c. gaussian_ramsey fixes n = 2; stretched_hahn fits
/// n >= 1 as well. Initialization: log-spaced grid search over T.
/// Params: amplitude, t_decay, offset [, exponent].
FitResult fit_decay(const std::vector<double>& x, const std::vector<double>& y,
                    DecayModel model);

/// Fit the detuned-Rabi chevron
///   P = amplitude * fR^2/(fR^2+d^2) * sin^2(pi*sqrt(fR^2+d^2)*t) + offset,
/// d = offset_hz - f_center. grid is row-major [i_duration * n_offsets + i_offset].
/// Params: f_rabi, f_center, amplitude, offset.
FitResult fit_chevron(const std::vector<double>& offsets_hz,
                      const std::vector<double>& durations_s,
                      const std::vector<double>& grid);

/// Ordinary least squares of log10(freq) on vj.
/// Params: slope_dec_per_v, intercept_log10hz, v0_1hz (line crossing 1 Hz).
FitResult fit_turnon(const std::vector<double>& vj, const std::vector<double>& freq_hz);

struct ThresholdResult {
    double threshold = 0;
    double visibility = 0;
    bool odd_above = true; // orientation: odd class lies above the threshold
};

/// Threshold maximizing visibility between the two signal histograms,
/// scanning midpoints of the pooled sorted unique values.
ThresholdResult optimal_threshold(const std::vector<double>& signals_even,
                                  const std::vector<double>& signals_odd);

struct BlochEstimate {
    std::array<double, 3> vector{0, 0, 0};
    double purity = 0; // Euclidean norm, clipped to [0, 1]
    bool clipped = false;
};

/// Bloch vector from projection probabilities: <X> = P(+X) - P(-X),
/// <Y> = P(+Y) - P(-Y), <Z> = 2*P(Z) - 1.
BlochEstimate bloch_vector(double p_plus_x, double p_minus_x, double p_plus_y,
                           double p_minus_y, double p_z);

/// Direct-DFT peak frequency (Hz) of a uniformly sampled complex signal;
/// 0 when the dominant bin is DC. Used to seed oscillation-frequency fits.
double dft_peak_frequency(double dt_s, const std::vector<std::complex<double>>& z);

/// In-place phase unwrap (adds multiples of 2*pi so steps stay within pi).
void unwrap_phases(std::vector<double>& phases);

} // namespace spinline
