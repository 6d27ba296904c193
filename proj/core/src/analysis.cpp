#include "spinline/analysis.hpp"

#include "spinline/constants.hpp"
#include "spinline/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinline {

namespace {

Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, const Eigen::VectorXd& fx) {
    Eigen::MatrixXd j(fx.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        double h = 1e-7 * std::max(1.0, std::abs(x(k)));
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        j.col(k) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return j;
}

} // namespace

double FitResult::param(const std::string& name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i)
        if (param_names[i] == name) return params(static_cast<Eigen::Index>(i));
    throw AnalysisError("fit '" + model + "' has no parameter '" + name + "'");
}

double FitResult::uncertainty(const std::string& name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i)
        if (param_names[i] == name) return uncertainties(static_cast<Eigen::Index>(i));
    throw AnalysisError("fit '" + model + "' has no parameter '" + name + "'");
}

FitResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd x0, std::vector<std::string> param_names, const LmOptions& opts) {
    FitResult out;
    out.param_names = std::move(param_names);

    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd r = residuals(x);
    double cost = r.squaredNorm();
    double lambda = opts.lambda0;
    bool converged = false;

    for (int it = 0; it < opts.max_iterations && !converged; ++it) {
        Eigen::MatrixXd j = numeric_jacobian(residuals, x, r);
        Eigen::MatrixXd jtj = j.transpose() * j;
        Eigen::VectorXd jtr = j.transpose() * r;

        bool stepped = false;
        for (int tries = 0; tries < 25; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            Eigen::VectorXd step = a.ldlt().solve(-jtr);
            Eigen::VectorXd xn = x + step;
            Eigen::VectorXd rn = residuals(xn);
            double cn = rn.squaredNorm();
            if (std::isfinite(cn) && cn <= cost) {
                double rel = step.norm() / std::max(1e-12, x.norm());
                double gain = cost - cn;
                x = xn;
                r = rn;
                cost = cn;
                lambda = std::max(lambda / 8.0, 1e-12);
                stepped = true;
                if (rel < opts.rel_step_tol) converged = true;
                // Cost plateau: further steps cannot move the estimates.
                if (gain < 1e-14 * std::max(cost, 1e-30)) converged = true;
                break;
            }
            lambda *= 8.0;
        }
        if (!stepped) {
            // Damping saturated without improvement: local minimum.
            converged = true;
        }
    }

    out.params = x;
    out.residual_norm = std::sqrt(cost);
    out.converged = converged;
    if (!converged) out.message = "no convergence within iteration budget";

    // Covariance of the linearized problem at the solution.
    Eigen::VectorXd rfin = residuals(x);
    Eigen::MatrixXd j = numeric_jacobian(residuals, x, rfin);
    Eigen::Index m = rfin.size(), p = x.size();
    double s2 = m > p ? rfin.squaredNorm() / static_cast<double>(m - p) : 0.0;
    Eigen::MatrixXd jtj = j.transpose() * j;
    Eigen::MatrixXd cov =
        jtj.completeOrthogonalDecomposition().pseudoInverse() * s2;
    out.uncertainties = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return out;
}

FitResult fit_decay(const std::vector<double>& x, const std::vector<double>& y,
                    DecayModel model) {
    if (x.size() != y.size() || x.size() < 5)
        throw AnalysisError("fit_decay needs at least 5 points");
    for (double v : y)
        if (v < -0.1 || v > 1.1)
            throw AnalysisError("fit_decay expects y in [-0.1, 1.1]");

    const bool stretched = model == DecayModel::stretched_hahn;
    const std::string model_name = stretched ? "stretched_hahn" : "gaussian_ramsey";

    double ymax = *std::max_element(y.begin(), y.end());
    double ymin = *std::min_element(y.begin(), y.end());
    if (ymax - ymin < 1e-3) {
        FitResult flat;
        flat.model = model_name;
        flat.param_names = {"amplitude", "t_decay", "offset"};
        flat.params = Eigen::Vector3d(0.0, 0.0, 0.5 * (ymax + ymin));
        flat.uncertainties = Eigen::Vector3d::Zero();
        flat.converged = false;
        flat.message = "amplitude ~ 0, decay time unidentifiable";
        return flat;
    }

    double xmax = *std::max_element(x.begin(), x.end());
    double scale = xmax > 0 ? xmax : 1.0;

    // Tail average seeds the offset, head the amplitude.
    std::size_t tail = std::max<std::size_t>(1, x.size() / 10);
    double c0 = 0;
    for (std::size_t i = x.size() - tail; i < x.size(); ++i) c0 += y[i];
    c0 /= static_cast<double>(tail);
    double a0 = y.front() - c0;
    if (std::abs(a0) < 1e-6) a0 = ymax - ymin;

    auto make_residuals = [&](bool fit_n) {
        return [&x, &y, scale, fit_n](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
            double n = fit_n ? 1.0 + std::exp(p(3)) : 2.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double t = x[i] / scale;
                double model_y =
                    p(0) * std::exp(-std::pow(std::max(t, 0.0) / std::abs(p(1)), n)) + p(2);
                r(static_cast<Eigen::Index>(i)) = model_y - y[i];
            }
            return r;
        };
    };

    // Log-spaced grid search over T for the starting point.
    auto resid2 = make_residuals(false);
    double best_t = 0.5, best_cost = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 25; ++k) {
        double t = std::pow(10.0, -2.0 + 2.5 * k / 24.0); // T/scale in [0.01, ~3.2]
        Eigen::VectorXd p(4);
        p << a0, t, c0, 0.0;
        double cost = resid2(p).squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            best_t = t;
        }
    }

    FitResult fit;
    if (!stretched) {
        auto resid3 = [&](const Eigen::VectorXd& p) {
            Eigen::VectorXd q(4);
            q << p(0), p(1), p(2), 0.0;
            return resid2(q);
        };
        fit = levenberg_marquardt(resid3, Eigen::Vector3d(a0, best_t, c0),
                                  {"amplitude", "t_decay", "offset"});
    } else {
        Eigen::VectorXd p0(4);
        p0 << a0, best_t, c0, 0.0; // exponent n = 1 + e^0 = 2 to start
        fit = levenberg_marquardt(make_residuals(true), p0,
                                  {"amplitude", "t_decay", "offset", "log_nm1"});
    }

    fit.model = model_name;
    fit.params(1) = std::abs(fit.params(1)) * scale;
    fit.uncertainties(1) *= scale;
    if (stretched) {
        // Report the exponent itself; delta method for its uncertainty.
        double u = fit.params(3);
        fit.params(3) = 1.0 + std::exp(u);
        fit.uncertainties(3) *= std::exp(u);
        fit.param_names[3] = "exponent";
    }
    if (fit.converged && std::abs(fit.params(0)) < 1e-3) {
        fit.converged = false;
        fit.message = "amplitude ~ 0, decay time unidentifiable";
    }
    return fit;
}

FitResult fit_chevron(const std::vector<double>& offsets_hz,
                      const std::vector<double>& durations_s,
                      const std::vector<double>& grid) {
    const std::size_t nx = offsets_hz.size(), ny = durations_s.size();
    if (grid.size() != nx * ny || nx < 2 || ny < 4)
        throw AnalysisError("fit_chevron: bad grid dimensions");

    // Resonance is the offset column with the largest fringe contrast
    // (variance); its fringe frequency from the DFT peak seeds fR.
    double dt = durations_s[1] - durations_s[0];
    double best_var = 0;
    std::size_t ix_res = 0;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        double mean = 0, m2 = 0;
        for (std::size_t iy = 0; iy < ny; ++iy) mean += grid[iy * nx + ix];
        mean /= static_cast<double>(ny);
        for (std::size_t iy = 0; iy < ny; ++iy) {
            double d = grid[iy * nx + ix] - mean;
            m2 += d * d;
        }
        if (m2 > best_var) {
            best_var = m2;
            ix_res = ix;
        }
    }
    if (best_var / static_cast<double>(ny) < 1e-4)
        throw AnalysisError("fit_chevron: no fringe detected");

    std::vector<std::complex<double>> col(ny);
    double mean = 0;
    for (std::size_t iy = 0; iy < ny; ++iy) mean += grid[iy * nx + ix_res];
    mean /= static_cast<double>(ny);
    for (std::size_t iy = 0; iy < ny; ++iy) col[iy] = grid[iy * nx + ix_res] - mean;
    double f_rabi = dft_peak_frequency(dt, col);
    double f_center = offsets_hz[ix_res];
    if (f_rabi <= 0) throw AnalysisError("fit_chevron: no fringe detected");

    double gmax = *std::max_element(grid.begin(), grid.end());
    double gmin = *std::min_element(grid.begin(), grid.end());

    auto residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(grid.size()));
        double fr = std::abs(p(0)), fc = p(1), amp = p(2), off = p(3);
        for (std::size_t iy = 0; iy < ny; ++iy) {
            for (std::size_t ix = 0; ix < nx; ++ix) {
                double d = offsets_hz[ix] - fc;
                double w2 = fr * fr + d * d;
                double model = off;
                if (w2 > 0) {
                    double s = std::sin(kPi * std::sqrt(w2) * durations_s[iy]);
                    model += amp * (fr * fr / w2) * s * s;
                }
                r(static_cast<Eigen::Index>(iy * nx + ix)) = model - grid[iy * nx + ix];
            }
        }
        return r;
    };

    Eigen::VectorXd p0(4);
    p0 << f_rabi, f_center, gmax - gmin, gmin;
    FitResult fit = levenberg_marquardt(residuals, p0,
                                        {"f_rabi", "f_center", "amplitude", "offset"});
    fit.model = "chevron";
    fit.params(0) = std::abs(fit.params(0));
    return fit;
}

FitResult fit_turnon(const std::vector<double>& vj, const std::vector<double>& freq_hz) {
    if (vj.size() != freq_hz.size()) throw AnalysisError("fit_turnon: size mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < vj.size(); ++i) {
        if (freq_hz[i] > 0) { // non-positive frequencies rejected point-wise
            xs.push_back(vj[i]);
            ys.push_back(std::log10(freq_hz[i]));
        }
    }
    const std::size_t n = xs.size();
    if (n < 3) throw AnalysisError("fit_turnon: fewer than 3 positive-frequency points");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double nd = static_cast<double>(n);
    double denom = nd * sxx - sx * sx;
    if (denom <= 0) throw AnalysisError("fit_turnon: degenerate abscissa");
    double slope = (nd * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / nd;

    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = ys[i] - (slope * xs[i] + intercept);
        ss += e * e;
    }
    double s2 = n > 2 ? ss / (nd - 2.0) : 0.0;
    double slope_var = s2 * nd / denom;
    double intercept_var = s2 * sxx / denom;

    FitResult fit;
    fit.model = "exchange_turnon";
    fit.param_names = {"slope_dec_per_v", "intercept_log10hz", "v0_1hz"};
    fit.params = Eigen::Vector3d(slope, intercept, slope != 0 ? -intercept / slope : 0.0);
    fit.uncertainties = Eigen::Vector3d(std::sqrt(slope_var), std::sqrt(intercept_var), 0.0);
    fit.residual_norm = std::sqrt(ss);
    fit.converged = true;
    return fit;
}

ThresholdResult optimal_threshold(const std::vector<double>& signals_even,
                                  const std::vector<double>& signals_odd) {
    if (signals_even.empty() || signals_odd.empty())
        throw AnalysisError("optimal_threshold: empty histogram");

    std::vector<double> pooled = signals_even;
    pooled.insert(pooled.end(), signals_odd.begin(), signals_odd.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    auto cdf = [](const std::vector<double>& sorted, double t) {
        // fraction of samples <= t
        auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        return static_cast<double>(it - sorted.begin()) /
               static_cast<double>(sorted.size());
    };
    std::vector<double> se = signals_even, so = signals_odd;
    std::sort(se.begin(), se.end());
    std::sort(so.begin(), so.end());

    ThresholdResult best;
    best.visibility = -1;
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
        double t = 0.5 * (pooled[i] + pooled[i + 1]);
        double fe = cdf(se, t), fo = cdf(so, t);
        double v = fe - fo; // odd above: P(even|even)=fe, P(odd|odd)=1-fo
        bool odd_above = v >= 0;
        double vis = std::abs(v);
        if (vis > best.visibility) best = {t, vis, odd_above};
    }
    if (best.visibility < 0) {
        // All signals identical: nothing separates the histograms.
        best = {pooled.front(), 0.0, true};
    }
    return best;
}

BlochEstimate bloch_vector(double p_plus_x, double p_minus_x, double p_plus_y,
                           double p_minus_y, double p_z) {
    BlochEstimate b;
    b.vector = {p_plus_x - p_minus_x, p_plus_y - p_minus_y, 2.0 * p_z - 1.0};
    double norm = std::sqrt(b.vector[0] * b.vector[0] + b.vector[1] * b.vector[1] +
                            b.vector[2] * b.vector[2]);
    b.purity = norm;
    if (norm > 1.0) {
        b.purity = 1.0;
        b.clipped = true;
    }
    return b;
}

double dft_peak_frequency(double dt_s, const std::vector<std::complex<double>>& z) {
    const std::size_t n = z.size();
    if (n < 4 || dt_s <= 0) return 0.0;
    double best_mag = 0;
    std::size_t best_k = 0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc = 0;
        double w = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            acc += z[i] * std::complex<double>(std::cos(w * static_cast<double>(i)),
                                               std::sin(w * static_cast<double>(i)));
        double mag = std::abs(acc);
        if (mag > best_mag) {
            best_mag = mag;
            best_k = k;
        }
    }
    if (best_k == 0) return 0.0;
    return static_cast<double>(best_k) / (static_cast<double>(n) * dt_s);
}

void unwrap_phases(std::vector<double>& phases) {
    for (std::size_t i = 1; i < phases.size(); ++i) {
        double d = phases[i] - phases[i - 1];
        while (d > kPi) {
            phases[i] -= 2.0 * kPi;
            d = phases[i] - phases[i - 1];
        }
        while (d < -kPi) {
            phases[i] += 2.0 * kPi;
            d = phases[i] - phases[i - 1];
        }
    }
}

} // namespace spinline
